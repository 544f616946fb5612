//! Dictionary matching of lexicon synonyms over tokenized text.
//!
//! Patterns are sequences of normalized word tokens. Punctuation tokens
//! (whose normalized form is empty) are skipped on both sides, so
//! `type-2 diabetes` and `type 2 diabetes` are the same pattern. Matching
//! never crosses a sentence boundary.

mod index;

use std::ops::Range;

pub use index::{build_index, IndexedPattern, MatchIndex};

use crate::context::MentionAttributes;
use crate::interface::Document;
use crate::terminology::{ChapterId, Cui, IcdCode};
use crate::textproc::{Sentence, Token};

/// A located concept occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub doc_id: String,
    pub cui: Cui,
    pub icd_code: IcdCode,
    pub chapter: ChapterId,
    /// Char offsets, half-open.
    pub start: usize,
    pub end: usize,
    pub matched_text: String,
    pub sentence_index: usize,
    /// Indices into the sentence's token list covered by the match.
    pub tokens: Range<usize>,
    pub attributes: MentionAttributes,
    pub filter_score: Option<f64>,
}

/// A candidate match in word-token coordinates of one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    /// Half-open range over the sentence's word tokens.
    pub start: usize,
    pub end: usize,
    pub pattern: usize,
}

impl Candidate {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Picks a non-overlapping subset: longer matches (in word tokens) first,
/// ties broken by the leftmost start. Output is sorted by start.
pub fn resolve_overlaps(mut candidates: Vec<Candidate>) -> Vec<Candidate> {
    candidates.sort_by(|a, b| b.len().cmp(&a.len()).then(a.start.cmp(&b.start)));
    let mut kept: Vec<Candidate> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| c.end <= k.start || k.end <= c.start) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|c| c.start);
    kept
}

/// Finds lexicon mentions in `doc`. `tokens[i]` must be the tokens of
/// `sentences[i]` as produced by [`crate::textproc::tokenize`].
pub fn find_mentions(
    doc: &Document,
    index: &MatchIndex,
    sentences: &[Sentence],
    tokens: &[Vec<Token>],
) -> Vec<Mention> {
    let mut out = Vec::new();
    if index.is_empty() {
        return out;
    }
    for (sentence, toks) in sentences.iter().zip(tokens) {
        let words: Vec<usize> = toks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_word())
            .map(|(i, _)| i)
            .collect();
        let ids: Vec<Option<u32>> = words.iter().map(|&i| index.token_id(&toks[i].norm)).collect();
        let candidates = index.candidates(&ids);
        for c in resolve_overlaps(candidates) {
            let first = &toks[words[c.start]];
            let last = &toks[words[c.end - 1]];
            let p = index.pattern(c.pattern);
            out.push(Mention {
                doc_id: doc.doc_id.clone(),
                cui: p.cui,
                icd_code: p.icd_code,
                chapter: p.chapter,
                start: first.start,
                end: last.end,
                matched_text: doc.text[first.byte_range().start..last.byte_range().end].to_string(),
                sentence_index: sentence.index,
                tokens: words[c.start]..words[c.end - 1] + 1,
                attributes: MentionAttributes::default(),
                filter_score: None,
            });
        }
    }
    out.sort_by_key(|m| m.start);
    out
}
