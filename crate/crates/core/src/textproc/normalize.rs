use unicode_normalization::UnicodeNormalization;

fn fold_once(s: &str) -> String {
    let folded = if s.is_ascii() {
        s.to_ascii_lowercase()
    } else {
        let lowered: String = s.nfkc().collect::<String>().to_lowercase();
        lowered.nfkc().collect()
    };
    folded.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
}

/// Canonical form used for lexicon lookup: NFKC, lowercase, leading and
/// trailing non-alphanumeric characters removed. Idempotent.
pub fn normalize(surface: &str) -> String {
    let mut cur = fold_once(surface);
    // NFKC and case mapping can interact on rare code points; iterate to a
    // fixed point.
    for _ in 0..8 {
        let next = fold_once(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}
