use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use super::config::PipelineConfig;
use super::corpus::{ingest_corpus, CohortFilter};
use super::dataset::{eval_instances, train_models};
use super::pipeline::{apply_models, run_extract, Extractor, MentionRecord};
use super::service::{serve, ServiceState};
use super::synth::{generate, write_synthetic, SynthConfig};
use crate::annotation::{
    annotator_pairs, build_gold, kappa_report, read_jsonl, write_jsonl, AnnotationRecord, AnnotationStore, GoldInstance,
};
use crate::context::TriggerSet;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvalOptions};
use crate::filtermodel::ForestModel;
use crate::matcher::{build_index, MatchIndex};
use crate::terminology::{load_lexicon, load_mapping, Lexicon};
use crate::textproc::Segmenter;

#[derive(Debug, Parser)]
#[command(
    name = "comorbid",
    version,
    about = "Condition mention extraction, annotation and evaluation"
)]
pub struct Cli {
    /// Pipeline config file (TOML). Falls back to $COMORBID_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Lexicon TSV (cui, preferred term, synonyms, ICD code).
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// ICD-10 → CUI mapping CSV.
    #[arg(long, global = true)]
    pub mapping: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and save the match index.
    Index {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract mentions from a corpus.
    Extract(ExtractArgs),
    /// Per-chapter Cohen's kappa from annotation records.
    Kappa {
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Mentions dump used to look up chapters when no lexicon is given.
        #[arg(long)]
        mentions: Option<PathBuf>,
        /// Write the JSON report here; the text table goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the gold standard from annotation records.
    Gold {
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one filter model per condition.
    Train {
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        mentions: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Cross-validate the filter models and report per-chapter metrics.
    Eval {
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        mentions: Option<PathBuf>,
        /// Output prefix; writes `<prefix>.csv`, `.txt` and `.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Keep negated and historic gold instances.
        #[arg(long)]
        include_irrelevant: bool,
    },
    /// Start the annotation service.
    Serve {
        #[arg(long)]
        mentions: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Annotation log (JSONL), created if missing.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Write a synthetic corpus with simulated annotations.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 120)]
        documents: usize,
        #[arg(long, default_value_t = 0)]
        min_bytes: usize,
    },
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV `patient_id,index_date`; enables the cohort window filter.
    #[arg(long)]
    index_dates: Option<PathBuf>,
    #[arg(long)]
    study_end: Option<NaiveDate>,
    /// Directory of trained models; adds `filter_score` to each mention.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn required(value: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    value.ok_or_else(|| Error::Argument(format!("no {what} given (flag or config)")))
}

struct Ctx {
    config: PipelineConfig,
}

impl Ctx {
    fn lexicon(&self) -> Result<Option<Lexicon>> {
        match (&self.config.lexicon, &self.config.mapping) {
            (Some(l), Some(m)) => Ok(Some(load_lexicon(l, &load_mapping(m)?)?)),
            (Some(_), None) => Err(Error::Argument("--lexicon requires --mapping".into())),
            _ => Ok(None),
        }
    }

    fn index(&self) -> Result<MatchIndex> {
        if let Some(lex) = self.lexicon()? {
            return build_index(&lex);
        }
        match &self.config.index {
            Some(p) if p.exists() => MatchIndex::load(p),
            _ => Err(Error::Argument(
                "need --lexicon and --mapping, or an index file in the config".into(),
            )),
        }
    }

    fn triggers(&self) -> Result<TriggerSet> {
        match &self.config.triggers {
            Some(p) => TriggerSet::load(p),
            None => Ok(TriggerSet::bundled().clone()),
        }
    }

    fn mentions(&self, flag: Option<PathBuf>) -> Result<Vec<MentionRecord>> {
        read_jsonl(required(flag.or(self.config.mentions.clone()), "mentions file")?)
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut config = PipelineConfig::from_env(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if cli.lexicon.is_some() {
        config.lexicon = cli.lexicon;
    }
    if cli.mapping.is_some() {
        config.mapping = cli.mapping;
    }
    config.validate()?;
    let ctx = Ctx { config };
    let say = |out: &mut dyn Write, msg: String| {
        let _ = writeln!(out, "{msg}");
    };

    match cli.command {
        Command::Index { out: path } => {
            let index = ctx.index()?;
            let path = path
                .or(ctx.config.index.clone())
                .unwrap_or_else(|| PathBuf::from("index.json"));
            index.save(&path)?;
            say(out, format!("indexed {} patterns -> {}", index.len(), path.display()));
        }
        Command::Extract(args) => {
            let corpus_path = required(args.corpus.or(ctx.config.corpus.clone()), "corpus")?;
            let filter = match (
                args.index_dates.or(ctx.config.index_dates.clone()),
                args.study_end.or(ctx.config.study_end),
            ) {
                (Some(p), Some(end)) => Some(CohortFilter::load(p, end)?),
                (Some(_), None) => return Err(Error::Argument("--index-dates requires --study-end".into())),
                _ => None,
            };
            let corpus = ingest_corpus(&corpus_path, filter.as_ref())?;
            let mut extractor = Extractor::new(ctx.index()?, ctx.triggers()?);
            if let Some(p) = &ctx.config.abbreviations {
                extractor = extractor.with_segmenter(Segmenter::from_file(p)?);
            }
            let mut records = match args.threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Argument(e.to_string()))?
                    .install(|| run_extract(&corpus, &extractor)),
                None => run_extract(&corpus, &extractor),
            };
            if let Some(dir) = args.models.or(ctx.config.model_dir.clone()).filter(|d| d.is_dir()) {
                apply_models(&mut records, &load_models(&dir)?);
            }
            let path = required(args.out.or(ctx.config.mentions.clone()), "output path")?;
            write_jsonl(&path, &records)?;
            say(
                out,
                format!(
                    "{} documents ({} excluded), {} mentions -> {}",
                    corpus.len(),
                    corpus.excluded,
                    records.len(),
                    path.display()
                ),
            );
        }
        Command::Kappa {
            annotations,
            mentions,
            out: path,
        } => {
            let records: Vec<AnnotationRecord> = read_jsonl(required(
                annotations.or(ctx.config.annotations.clone()),
                "annotations file",
            )?)?;
            let chapters: BTreeMap<_, _> = match ctx.lexicon()? {
                Some(lex) => lex.entries().iter().map(|e| (e.cui, e.chapter)).collect(),
                None => ctx.mentions(mentions)?.iter().map(|m| (m.cui, m.chapter)).collect(),
            };
            let pairs = annotator_pairs(&records);
            let report = kappa_report(&records, &pairs, &|m| chapters.get(&m.cui).copied());
            if let Some(p) = path {
                write_file(
                    &p,
                    &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
                )?;
            }
            let _ = write!(out, "{}", report.to_table());
        }
        Command::Gold { annotations, out: path } => {
            let records: Vec<AnnotationRecord> = read_jsonl(required(
                annotations.or(ctx.config.annotations.clone()),
                "annotations file",
            )?)?;
            let outcome = build_gold(&records);
            let path = required(path.or(ctx.config.gold.clone()), "gold output path")?;
            write_jsonl(&path, &outcome.gold)?;
            say(
                out,
                format!(
                    "{} gold instances, {} discarded on disagreement, {} with a single annotator -> {}",
                    outcome.gold.len(),
                    outcome.discarded,
                    outcome.under_annotated,
                    path.display()
                ),
            );
        }
        Command::Train {
            gold,
            mentions,
            out_dir,
        } => {
            let gold: Vec<GoldInstance> = read_jsonl(required(gold.or(ctx.config.gold.clone()), "gold file")?)?;
            let instances = eval_instances(&gold, &ctx.mentions(mentions)?)?;
            let (models, skipped) = train_models(
                &instances,
                &ctx.config.forest,
                ctx.config.seed,
                ctx.config.include_irrelevant,
            )?;
            let dir = required(out_dir.or(ctx.config.model_dir.clone()), "model directory")?;
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (cui, model) in &models {
                model.save(dir.join(format!("{cui}.cmrf")))?;
            }
            for s in &skipped {
                say(
                    out,
                    format!("warning: skipped {} ({} instances): {}", s.cui, s.instances, s.reason),
                );
            }
            say(out, format!("trained {} models -> {}", models.len(), dir.display()));
        }
        Command::Eval {
            gold,
            mentions,
            out: path,
            k,
            include_irrelevant,
        } => {
            let gold: Vec<GoldInstance> = read_jsonl(required(gold.or(ctx.config.gold.clone()), "gold file")?)?;
            let instances = eval_instances(&gold, &ctx.mentions(mentions)?)?;
            let options = EvalOptions {
                include_irrelevant: include_irrelevant || ctx.config.include_irrelevant,
            };
            let report = evaluate(
                &instances,
                k.unwrap_or(ctx.config.k),
                &ctx.config.forest,
                ctx.config.seed,
                options,
            )?;
            if let Some(prefix) = path.or(ctx.config.report.clone()) {
                write_file(&with_suffix(&prefix, "csv"), &report.to_csv())?;
                write_file(&with_suffix(&prefix, "txt"), &report.to_table())?;
                write_file(&with_suffix(&prefix, "json"), &report.to_json())?;
            }
            let _ = write!(out, "{}", report.to_table());
        }
        Command::Serve {
            mentions,
            corpus,
            annotations,
            port,
            host,
        } => {
            let mentions = ctx.mentions(mentions)?;
            let documents = match corpus.or(ctx.config.corpus.clone()) {
                Some(p) => ingest_corpus(p, None)?.documents,
                None => Vec::new(),
            };
            let queue = ServiceState::task_queue(&mentions);
            let store = match annotations.or(ctx.config.annotations.clone()) {
                Some(p) => AnnotationStore::open(queue, p)?,
                None => AnnotationStore::new(queue),
            };
            let lexicon = ctx.lexicon()?;
            let state = std::sync::Arc::new(ServiceState::new(store, mentions, documents, lexicon.as_ref()));
            let addr = std::net::SocketAddr::new(host, port.unwrap_or(ctx.config.port));
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Network(e.to_string()))?;
            rt.block_on(serve(state, addr))?;
        }
        Command::Synth {
            out_dir,
            documents,
            min_bytes,
        } => {
            let cfg = SynthConfig {
                seed: ctx.config.seed,
                documents,
                min_bytes,
            };
            let data = generate(&cfg)?;
            write_synthetic(&data, &out_dir, cfg.seed)?;
            say(
                out,
                format!(
                    "{} documents, {} planted mentions -> {}",
                    data.documents.len(),
                    data.planted.len(),
                    out_dir.display()
                ),
            );
        }
    }
    Ok(())
}

/// Loads every `*.cmrf` model in `dir`, keyed by condition.
pub fn load_models(dir: &Path) -> Result<BTreeMap<crate::terminology::Cui, ForestModel>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cmrf"))
        .collect();
    paths.sort();
    for p in paths {
        let m = ForestModel::load(&p)?;
        out.insert(m.condition_cui, m);
    }
    Ok(out)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
