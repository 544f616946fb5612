use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use super::Sentence;
use crate::error::{Error, Result};

/// The bundled abbreviation guard list (`abbrev.txt`).
pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbrev.txt");

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closer(c: char) -> bool {
    matches!(c, ')' | ']' | '"' | '\'' | '\u{201D}' | '\u{2019}' | '\u{BB}')
}

/// Rule-based sentence splitter.
///
/// A sentence ends at a newline, or after a run of `.`, `?`, `!` (plus any
/// closing quotes or brackets) that is followed by whitespace or the end of
/// the text. A lone `.` ending a word on the abbreviation list does not end
/// the sentence. Spans are trimmed of surrounding whitespace and empty spans
/// are dropped.
#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Segmenter::from_abbreviations(DEFAULT_ABBREVIATIONS)
    }
}

impl Segmenter {
    /// Parses an abbreviation list: one lowercase token per line, blank lines
    /// and `#` comments ignored.
    pub fn from_abbreviations(text: &str) -> Self {
        let abbreviations = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Segmenter { abbreviations }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_abbreviations(&text))
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.contains(&word.to_lowercase())
    }

    pub fn segment(&self, text: &str) -> Vec<Sentence> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let n = chars.len();
        let byte_at = |ci: usize| if ci < n { chars[ci].0 } else { text.len() };

        let mut sentences = Vec::new();
        let push = |from: usize, to: usize, out: &mut Vec<Sentence>| {
            let mut s = from;
            let mut e = to;
            while s < e && chars[s].1.is_whitespace() {
                s += 1;
            }
            while e > s && chars[e - 1].1.is_whitespace() {
                e -= 1;
            }
            if s < e {
                out.push(Sentence::from_parts(out.len(), s, e, byte_at(s), byte_at(e)));
            }
        };

        let mut seg_start = 0;
        let mut word_start = 0;
        let mut i = 0;
        while i < n {
            let c = chars[i].1;
            if c == '\n' {
                push(seg_start, i, &mut sentences);
                seg_start = i + 1;
                word_start = i + 1;
                i += 1;
                continue;
            }
            if c.is_whitespace() {
                word_start = i + 1;
                i += 1;
                continue;
            }
            if is_terminal(c) {
                let run_start = i;
                let mut j = i;
                while j < n && is_terminal(chars[j].1) {
                    j += 1;
                }
                let terminal_len = j - run_start;
                while j < n && is_closer(chars[j].1) {
                    j += 1;
                }
                let at_boundary = j == n || chars[j].1.is_whitespace();
                if at_boundary {
                    let guarded = terminal_len == 1
                        && chars[run_start].1 == '.'
                        && j == run_start + 1
                        && self.guards(&chars[word_start..=run_start]);
                    if !guarded {
                        push(seg_start, j, &mut sentences);
                        seg_start = j;
                    }
                }
                i = j;
                continue;
            }
            i += 1;
        }
        push(seg_start, n, &mut sentences);
        sentences
    }

    fn guards(&self, word: &[(usize, char)]) -> bool {
        let w: String = word
            .iter()
            .map(|&(_, c)| c)
            .skip_while(|c| !c.is_alphanumeric())
            .collect();
        !w.is_empty() && self.is_abbreviation(&w)
    }
}

fn default_segmenter() -> &'static Segmenter {
    static SEG: OnceLock<Segmenter> = OnceLock::new();
    SEG.get_or_init(Segmenter::default)
}

/// Splits `text` with the bundled abbreviation list.
pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    default_segmenter().segment(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(text: &str) -> Vec<(usize, usize)> {
        segment_sentences(text).iter().map(|s| (s.start, s.end)).collect()
    }

    #[test]
    fn two_sentences() {
        assert_eq!(spans("Has asthma. Denies pain."), vec![(0, 11), (12, 24)]);
    }

    #[test]
    fn empty_input() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("  \n\n \t").is_empty());
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(spans("Seen by Dr. Smith today."), vec![(0, 24)]);
        assert_eq!(spans("Chronic conditions (e.g. asthma) noted. Plan reviewed.").len(), 2);
    }

    #[test]
    fn decimals_do_not_split() {
        assert_eq!(spans("HbA1c was 6.5 today. Stable.").len(), 2);
    }

    #[test]
    fn newline_runs_split() {
        let text = "Problem list\n\n- asthma\n- hypertension";
        let s = segment_sentences(text);
        let got: Vec<&str> = s.iter().map(|s| s.text(text)).collect();
        assert_eq!(got, vec!["Problem list", "- asthma", "- hypertension"]);
    }

    #[test]
    fn terminal_runs_and_closers() {
        let text = "Really?! (He said so.) Then left";
        let s = segment_sentences(text);
        let got: Vec<&str> = s.iter().map(|s| s.text(text)).collect();
        assert_eq!(got, vec!["Really?!", "(He said so.)", "Then left"]);
    }

    #[test]
    fn indices_are_ordinal() {
        let s = segment_sentences("A. B. C.");
        assert_eq!(s.iter().map(|s| s.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn multibyte_offsets_are_chars() {
        let text = "Café noted. Naïve.";
        let s = segment_sentences(text);
        assert_eq!((s[1].start, s[1].end), (12, 18));
        assert_eq!(s[1].text(text), "Naïve.");
    }

    #[test]
    fn custom_abbreviation_list() {
        let seg = Segmenter::from_abbreviations("# clinical\nfu.\n");
        assert_eq!(seg.segment("Seen in fu. clinic.").len(), 1);
        assert_eq!(seg.segment("Seen by Dr. Smith.").len(), 2);
    }
}
