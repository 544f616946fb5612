//! Sentence segmentation, tokenization and token normalization.
//!
//! All public offsets count Unicode scalar values (Rust `char`s), not bytes,
//! so spans agree with clients that index text by code point.

mod normalize;
mod segment;
mod tokenize;

pub use normalize::normalize;
pub use segment::{segment_sentences, Segmenter, DEFAULT_ABBREVIATIONS};
pub use tokenize::{tokenize, Token};

/// Half-open `[start, end)` span of one sentence, in chars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    byte_start: usize,
    byte_end: usize,
}

impl Sentence {
    /// Builds a sentence from char offsets into `text`. Returns `None` when
    /// the span is empty or falls outside the text.
    pub fn new(text: &str, index: usize, start: usize, end: usize) -> Option<Self> {
        if start >= end {
            return None;
        }
        let mut bounds = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
        let byte_start = bounds.nth(start)?;
        let byte_end = if end == start {
            byte_start
        } else {
            bounds.nth(end - start - 1)?
        };
        Some(Sentence {
            index,
            start,
            end,
            byte_start,
            byte_end,
        })
    }

    pub(crate) fn from_parts(index: usize, start: usize, end: usize, byte_start: usize, byte_end: usize) -> Self {
        Sentence {
            index,
            start,
            end,
            byte_start,
            byte_end,
        }
    }

    pub fn byte_range(&self) -> std::ops::Range<usize> {
        self.byte_start..self.byte_end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn text<'a>(&self, doc: &'a str) -> &'a str {
        &doc[self.byte_range()]
    }
}

/// Returns the substring between char offsets `start` and `end`.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut idx = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let b0 = idx.nth(start).unwrap_or(text.len());
    let b1 = if end <= start {
        b0
    } else {
        idx.nth(end - start - 1).unwrap_or(text.len())
    };
    &text[b0..b1]
}
