use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::token_key;
use crate::error::{Error, Result};
use crate::textproc::{tokenize, Sentence};

/// The committed default trigger lists (`triggers.toml`).
pub const DEFAULT_TRIGGERS: &str = include_str!("../../data/triggers.toml");

const DEFAULT_WINDOW: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    NegationPre,
    NegationPost,
    Historic,
    Terminator,
}

impl TriggerKind {
    /// Pre-triggers scope forward over the tokens that follow them.
    pub fn is_pre(self) -> bool {
        matches!(self, TriggerKind::NegationPre | TriggerKind::Historic)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TriggerFile {
    window: Option<usize>,
    #[serde(default)]
    negation_pre: Vec<String>,
    #[serde(default)]
    negation_post: Vec<String>,
    #[serde(default)]
    historic: Vec<String>,
    #[serde(default)]
    terminators: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TriggerSet {
    pub window: usize,
    negation_pre: Vec<String>,
    negation_post: Vec<String>,
    historic: Vec<String>,
    terminators: Vec<String>,
    lookup: HashMap<Vec<String>, (TriggerKind, usize)>,
    max_len: usize,
}

fn phrase_keys(phrase: &str) -> Vec<String> {
    let n = phrase.chars().count();
    match Sentence::new(phrase, 0, 0, n) {
        Some(s) => tokenize(phrase, &s).iter().map(token_key).collect(),
        None => Vec::new(),
    }
}

impl TriggerSet {
    pub fn new(
        negation_pre: Vec<String>,
        negation_post: Vec<String>,
        historic: Vec<String>,
        terminators: Vec<String>,
        window: usize,
    ) -> Result<Self> {
        if window == 0 {
            return Err(Error::Validation("trigger window must be at least 1".into()));
        }
        let mut set = TriggerSet {
            window,
            negation_pre: Vec::new(),
            negation_post: Vec::new(),
            historic: Vec::new(),
            terminators: Vec::new(),
            lookup: HashMap::new(),
            max_len: 0,
        };
        let lists = [
            (TriggerKind::NegationPre, negation_pre),
            (TriggerKind::NegationPost, negation_post),
            (TriggerKind::Historic, historic),
            (TriggerKind::Terminator, terminators),
        ];
        for (kind, phrases) in lists {
            for phrase in phrases {
                let keys = phrase_keys(&phrase);
                if keys.is_empty() {
                    return Err(Error::Validation(format!("empty trigger phrase in {kind:?}")));
                }
                let canonical = keys.join(" ");
                match set.lookup.get(&keys) {
                    Some((k, _)) if *k == kind => continue,
                    Some((k, _)) => {
                        return Err(Error::Validation(format!(
                            "trigger {canonical:?} appears in both {k:?} and {kind:?}"
                        )))
                    }
                    None => {}
                }
                let list = set.list_mut(kind);
                list.push(canonical);
                let idx = list.len() - 1;
                set.max_len = set.max_len.max(keys.len());
                set.lookup.insert(keys, (kind, idx));
            }
        }
        Ok(set)
    }

    /// Parses the TOML trigger configuration.
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: TriggerFile = toml::from_str(text).map_err(|e| Error::Format(format!("trigger file: {e}")))?;
        Self::new(
            f.negation_pre,
            f.negation_post,
            f.historic,
            f.terminators,
            f.window.unwrap_or(DEFAULT_WINDOW),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn bundled() -> &'static TriggerSet {
        static SET: OnceLock<TriggerSet> = OnceLock::new();
        SET.get_or_init(|| TriggerSet::from_toml(DEFAULT_TRIGGERS).expect("bundled triggers are valid"))
    }

    fn list_mut(&mut self, kind: TriggerKind) -> &mut Vec<String> {
        match kind {
            TriggerKind::NegationPre => &mut self.negation_pre,
            TriggerKind::NegationPost => &mut self.negation_post,
            TriggerKind::Historic => &mut self.historic,
            TriggerKind::Terminator => &mut self.terminators,
        }
    }

    pub fn phrases(&self, kind: TriggerKind) -> &[String] {
        match kind {
            TriggerKind::NegationPre => &self.negation_pre,
            TriggerKind::NegationPost => &self.negation_post,
            TriggerKind::Historic => &self.historic,
            TriggerKind::Terminator => &self.terminators,
        }
    }

    pub fn phrase(&self, kind: TriggerKind, idx: usize) -> &str {
        &self.phrases(kind)[idx]
    }

    /// Longest trigger phrase that is a prefix of `keys`:
    /// `(phrase index, kind, token length)`.
    pub(crate) fn longest_at(&self, keys: &[String]) -> Option<(usize, TriggerKind, usize)> {
        let upper = self.max_len.min(keys.len());
        (1..=upper)
            .rev()
            .find_map(|len| self.lookup.get(&keys[..len]).map(|&(kind, idx)| (idx, kind, len)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lists_load() {
        let t = TriggerSet::bundled();
        assert_eq!(t.window, 6);
        assert!(t
            .phrases(TriggerKind::NegationPre)
            .contains(&"no evidence of".to_string()));
        assert!(t.phrases(TriggerKind::Terminator).contains(&";".to_string()));
    }

    #[test]
    fn overlapping_lists_rejected() {
        let err = TriggerSet::new(vec!["no".into()], vec![], vec!["No".into()], vec![], 6).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn phrases_are_normalized() {
        let t = TriggerSet::new(vec!["No Evidence Of".into()], vec![], vec![], vec![], 6).unwrap();
        assert_eq!(t.phrases(TriggerKind::NegationPre), ["no evidence of"]);
    }

    #[test]
    fn bad_toml() {
        assert!(TriggerSet::from_toml("negation_pre = 3").is_err());
        assert!(TriggerSet::from_toml("unknown = []").is_err());
        assert!(TriggerSet::from_toml("window = 0").is_err());
    }

    #[test]
    fn custom_window() {
        let t = TriggerSet::from_toml("window = 2\nnegation_pre = [\"no\"]").unwrap();
        assert_eq!(t.window, 2);
    }
}
