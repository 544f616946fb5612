use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Candidate;
use crate::error::{Error, Result};
use crate::terminology::{ChapterId, Cui, IcdCode, Lexicon};
use crate::textproc::{tokenize, Sentence};

const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedPattern {
    /// Normalized word tokens.
    pub tokens: Vec<String>,
    pub cui: Cui,
    pub icd_code: IcdCode,
    pub chapter: ChapterId,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    patterns: Vec<IndexedPattern>,
}

/// Immutable token trie over normalized lexicon patterns.
#[derive(Debug, Clone, Default)]
pub struct MatchIndex {
    patterns: Vec<IndexedPattern>,
    vocab: HashMap<String, u32>,
    /// (node, token id) → child node. Node 0 is the root.
    edges: HashMap<(u32, u32), u32>,
    /// Pattern ending at each node, if any.
    terminal: Vec<Option<u32>>,
    /// (node, losing concept) pairs.
    ambiguous: HashSet<(u32, Cui)>,
}

/// Splits a normalized phrase into its word tokens.
pub(crate) fn phrase_tokens(phrase: &str) -> Vec<String> {
    let n = phrase.chars().count();
    match Sentence::new(phrase, 0, 0, n) {
        Some(s) => tokenize(phrase, &s)
            .into_iter()
            .filter(|t| t.is_word())
            .map(|t| t.norm)
            .collect(),
        None => Vec::new(),
    }
}

/// Indexes every synonym and preferred term of `lexicon`. When two concepts
/// share a normalized pattern the first one in lexicon order keeps it.
pub fn build_index(lexicon: &Lexicon) -> Result<MatchIndex> {
    let mut index = MatchIndex {
        terminal: vec![None],
        ..Default::default()
    };
    for entry in lexicon.entries() {
        let phrases = entry
            .synonyms
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(entry.preferred_term.as_str()));
        for phrase in phrases {
            let tokens = phrase_tokens(phrase);
            if tokens.is_empty() {
                return Err(Error::Validation(format!(
                    "pattern {phrase:?} of {} is empty after normalization",
                    entry.cui
                )));
            }
            index.insert(IndexedPattern {
                tokens,
                cui: entry.cui,
                icd_code: entry.icd_code,
                chapter: entry.chapter,
            });
        }
    }
    if !index.ambiguous.is_empty() {
        log::warn!(
            "{} patterns are shared by more than one concept; the first concept in lexicon order was kept",
            index.ambiguous.len()
        );
    }
    Ok(index)
}

impl MatchIndex {
    fn insert(&mut self, pattern: IndexedPattern) {
        let mut node = 0u32;
        for tok in &pattern.tokens {
            let next_id = self.vocab.len() as u32;
            let tid = *self.vocab.entry(tok.clone()).or_insert(next_id);
            node = match self.edges.get(&(node, tid)) {
                Some(&child) => child,
                None => {
                    let child = self.terminal.len() as u32;
                    self.terminal.push(None);
                    self.edges.insert((node, tid), child);
                    child
                }
            };
        }
        match self.terminal[node as usize] {
            Some(existing) => {
                if self.patterns[existing as usize].cui != pattern.cui {
                    self.ambiguous.insert((node, pattern.cui));
                }
            }
            None => {
                self.terminal[node as usize] = Some(self.patterns.len() as u32);
                self.patterns.push(pattern);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[IndexedPattern] {
        &self.patterns
    }

    pub fn pattern(&self, id: usize) -> &IndexedPattern {
        &self.patterns[id]
    }

    /// Number of patterns dropped because another concept already owned them.
    pub fn ambiguous_patterns(&self) -> usize {
        self.ambiguous.len()
    }

    pub fn token_id(&self, norm: &str) -> Option<u32> {
        self.vocab.get(norm).copied()
    }

    /// All pattern occurrences in a sequence of word-token ids (`None` for
    /// tokens that appear in no pattern).
    pub fn candidates(&self, ids: &[Option<u32>]) -> Vec<Candidate> {
        let mut out = Vec::new();
        for start in 0..ids.len() {
            let mut node = 0u32;
            for (offset, id) in ids[start..].iter().enumerate() {
                let Some(id) = id else { break };
                match self.edges.get(&(node, *id)) {
                    Some(&child) => node = child,
                    None => break,
                }
                if let Some(p) = self.terminal[node as usize] {
                    out.push(Candidate {
                        start,
                        end: start + offset + 1,
                        pattern: p as usize,
                    });
                }
            }
        }
        out
    }

    pub fn from_patterns(patterns: Vec<IndexedPattern>) -> Result<Self> {
        let mut index = MatchIndex {
            terminal: vec![None],
            ..Default::default()
        };
        for p in patterns {
            if p.tokens.is_empty() || p.tokens.iter().any(|t| t.is_empty()) {
                return Err(Error::Validation(format!("empty pattern for {}", p.cui)));
            }
            index.insert(p);
        }
        Ok(index)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&IndexFile {
            version: INDEX_FORMAT_VERSION,
            patterns: self.patterns.clone(),
        })
        .expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: IndexFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("match index: {e}")))?;
        if file.version != INDEX_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "match index version {} (expected {INDEX_FORMAT_VERSION})",
                file.version
            )));
        }
        Self::from_patterns(file.patterns)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::tests::entry;

    #[test]
    fn counts_synonyms_and_preferred_terms() {
        let mut a = entry("C0008354", "A00", "I", &["cholera", "cholerae infection"]);
        a.preferred_term = "Cholera (disease)".into();
        let mut b = entry("C0004096", "J45", "X", &["asthma"]);
        b.preferred_term = "Bronchial asthma".into();
        let lex = Lexicon::from_entries(vec![a, b]).unwrap();
        assert_eq!(build_index(&lex).unwrap().len(), 5);
    }

    #[test]
    fn duplicates_collapse() {
        // preferred term identical to a synonym after normalization
        let lex = Lexicon::from_entries(vec![entry("C0008354", "A00", "I", &["cholera", "Cholera"])]).unwrap();
        assert_eq!(build_index(&lex).unwrap().len(), 1);
    }

    #[test]
    fn empty_lexicon() {
        let idx = build_index(&Lexicon::from_entries(vec![]).unwrap()).unwrap();
        assert!(idx.is_empty());
    }

    #[test]
    fn punctuation_only_synonym_rejected() {
        let lex = Lexicon::from_entries(vec![entry("C0008354", "A00", "I", &[","])]).unwrap();
        assert!(matches!(build_index(&lex), Err(Error::Validation(_))));
    }

    #[test]
    fn shared_pattern_keeps_first_concept() {
        let lex = Lexicon::from_entries(vec![
            entry("C0009443", "J00", "X", &["cold"]),
            entry("C0009264", "T69", "XIX", &["cold"]),
        ])
        .unwrap();
        let idx = build_index(&lex).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.patterns()[0].cui.to_string(), "C0009443");
        assert_eq!(idx.ambiguous_patterns(), 1);
    }

    #[test]
    fn json_round_trip() {
        let lex = Lexicon::from_entries(vec![
            entry("C0008354", "A00", "I", &["cholera", "cholerae infection"]),
            entry("C0004096", "J45", "X", &["asthma"]),
        ])
        .unwrap();
        let idx = build_index(&lex).unwrap();
        let back = MatchIndex::from_json(&idx.to_json()).unwrap();
        assert_eq!(back.patterns(), idx.patterns());
        assert!(MatchIndex::from_json("{\"version\":9,\"patterns\":[]}").is_err());
    }
}
