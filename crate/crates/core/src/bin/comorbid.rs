fn main() {
    std::process::exit(comorbid::interface::cli::main_with_args(std::env::args_os()));
}
