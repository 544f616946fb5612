//! Negation and temporality attribution for mentions, and the relevance
//! predicate built on them.
//!
//! Scoping follows NegEx: a trigger opens a window of `window` word tokens
//! (default 6) after it (pre-triggers) or before it (post-triggers). A
//! terminator between trigger and mention closes the window. Windows never
//! leave the sentence because attribution only ever sees one sentence's
//! tokens.

mod triggers;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use triggers::{TriggerKind, TriggerSet, DEFAULT_TRIGGERS};

use crate::error::Error;
use crate::matcher::Mention;
use crate::textproc::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Temporality {
    #[default]
    Recent,
    Historic,
}

impl fmt::Display for Temporality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Temporality::Recent => "recent",
            Temporality::Historic => "historic",
        })
    }
}

impl FromStr for Temporality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "recent" => Ok(Temporality::Recent),
            "historic" => Ok(Temporality::Historic),
            other => Err(Error::Validation(format!("unknown temporality {other:?}"))),
        }
    }
}

/// A trigger occurrence that affected a mention. Offsets are document chars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredTrigger {
    pub phrase: String,
    pub kind: TriggerKind,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MentionAttributes {
    pub negated: bool,
    pub temporality: Temporality,
    /// Non-empty exactly when `negated` or historic.
    pub triggers: Vec<FiredTrigger>,
}

/// A mention is relevant when it is recent and not negated.
pub fn is_relevant(attrs: &MentionAttributes) -> bool {
    !attrs.negated && attrs.temporality == Temporality::Recent
}

/// Trigger occurrence over a sentence's token indices.
#[derive(Debug, Clone)]
struct Occurrence {
    tokens: Range<usize>,
    kind: TriggerKind,
    phrase: usize,
}

/// Matching key of a token: its normalized form, or for punctuation the
/// lowercased surface.
pub(crate) fn token_key(t: &Token) -> String {
    if t.is_word() {
        t.norm.clone()
    } else {
        t.surface.to_lowercase()
    }
}

fn occurrences(tokens: &[Token], triggers: &TriggerSet) -> Vec<Occurrence> {
    let keys: Vec<String> = tokens.iter().map(token_key).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        match triggers.longest_at(&keys[i..]) {
            Some((phrase, kind, len)) => {
                out.push(Occurrence {
                    tokens: i..i + len,
                    kind,
                    phrase,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

fn word_count(tokens: &[Token], range: Range<usize>) -> usize {
    tokens[range].iter().filter(|t| t.is_word()).count()
}

fn terminated(occs: &[Occurrence], between: Range<usize>) -> bool {
    occs.iter()
        .any(|o| o.kind == TriggerKind::Terminator && o.tokens.start >= between.start && o.tokens.end <= between.end)
}

fn fired(tokens: &[Token], triggers: &TriggerSet, o: &Occurrence) -> FiredTrigger {
    FiredTrigger {
        phrase: triggers.phrase(o.kind, o.phrase).to_string(),
        kind: o.kind,
        start: tokens[o.tokens.start].start,
        end: tokens[o.tokens.end - 1].end,
    }
}

/// Applies scope rules for triggers of `kind` to the mention covering token
/// range `span` of the sentence.
fn in_scope(
    tokens: &[Token],
    occs: &[Occurrence],
    span: &Range<usize>,
    kind: TriggerKind,
    window: usize,
) -> Vec<usize> {
    let mut hits = Vec::new();
    for (i, o) in occs.iter().enumerate() {
        if o.kind != kind || (o.tokens.start < span.end && span.start < o.tokens.end) {
            continue;
        }
        let between = if kind.is_pre() {
            if o.tokens.end > span.start {
                continue;
            }
            o.tokens.end..span.start
        } else {
            if o.tokens.start < span.end {
                continue;
            }
            span.end..o.tokens.start
        };
        if word_count(tokens, between.clone()) < window && !terminated(occs, between) {
            hits.push(i);
        }
    }
    hits
}

/// Negation status of the mention covering `span` (indices into
/// `sentence_tokens`), plus the triggers responsible.
pub fn detect_negation_span(
    span: Range<usize>,
    sentence_tokens: &[Token],
    triggers: &TriggerSet,
) -> (bool, Vec<FiredTrigger>) {
    let occs = occurrences(sentence_tokens, triggers);
    let mut hits = in_scope(sentence_tokens, &occs, &span, TriggerKind::NegationPre, triggers.window);
    hits.extend(in_scope(
        sentence_tokens,
        &occs,
        &span,
        TriggerKind::NegationPost,
        triggers.window,
    ));
    hits.sort_unstable();
    let fired: Vec<FiredTrigger> = hits
        .iter()
        .map(|&i| fired(sentence_tokens, triggers, &occs[i]))
        .collect();
    (!fired.is_empty(), fired)
}

pub fn detect_temporality_span(
    span: Range<usize>,
    sentence_tokens: &[Token],
    triggers: &TriggerSet,
) -> (Temporality, Vec<FiredTrigger>) {
    let occs = occurrences(sentence_tokens, triggers);
    let hits = in_scope(sentence_tokens, &occs, &span, TriggerKind::Historic, triggers.window);
    let fired: Vec<FiredTrigger> = hits
        .iter()
        .map(|&i| fired(sentence_tokens, triggers, &occs[i]))
        .collect();
    let t = if fired.is_empty() {
        Temporality::Recent
    } else {
        Temporality::Historic
    };
    (t, fired)
}

pub fn detect_negation(
    mention: &Mention,
    sentence_tokens: &[Token],
    triggers: &TriggerSet,
) -> (bool, Vec<FiredTrigger>) {
    detect_negation_span(mention.tokens.clone(), sentence_tokens, triggers)
}

pub fn detect_temporality(
    mention: &Mention,
    sentence_tokens: &[Token],
    triggers: &TriggerSet,
) -> (Temporality, Vec<FiredTrigger>) {
    detect_temporality_span(mention.tokens.clone(), sentence_tokens, triggers)
}

/// Computes both attributes for a mention.
pub fn attribute(mention: &Mention, sentence_tokens: &[Token], triggers: &TriggerSet) -> MentionAttributes {
    let (negated, mut fired) = detect_negation(mention, sentence_tokens, triggers);
    let (temporality, hist) = detect_temporality(mention, sentence_tokens, triggers);
    fired.extend(hist);
    fired.sort_by_key(|t| t.start);
    MentionAttributes {
        negated,
        temporality,
        triggers: fired,
    }
}
