//! Annotator verdicts, gold-standard adjudication and inter-annotator
//! agreement.

mod agreement;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use agreement::{
    annotator_pairs, cohens_kappa, contingency, kappa_report, AgreementTable, ChapterKappa, KappaReport, PairKappa,
};
pub use store::{Ack, AnnotationStore};

use crate::context::Temporality;
use crate::error::{Error, Result};
use crate::filtermodel::Label;
use crate::terminology::Cui;

/// Identifies an extracted mention by document, char span and concept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MentionRef {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub cui: Cui,
}

impl fmt::Display for MentionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}..{}]{}", self.doc_id, self.start, self.end, self.cui)
    }
}

/// One annotator's verdict on one mention. Serialized as one JSON object
/// per line with fields `doc_id, start, end, cui, annotator_id, correct,
/// negated, temporality, timestamp`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    #[serde(flatten)]
    pub mention: MentionRef,
    pub annotator_id: String,
    pub correct: bool,
    pub negated: bool,
    pub temporality: Temporality,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldInstance {
    #[serde(flatten)]
    pub mention: MentionRef,
    pub label: Label,
    /// `None` when the annotators disagreed on the attribute.
    pub gold_negated: Option<bool>,
    pub gold_temporality: Option<Temporality>,
}

impl GoldInstance {
    /// Recent and not negated according to the annotators. Disputed
    /// attributes do not exclude an instance.
    pub fn is_relevant(&self) -> bool {
        self.gold_negated != Some(true) && self.gold_temporality != Some(Temporality::Historic)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldOutcome {
    pub gold: Vec<GoldInstance>,
    /// Mentions with at least two annotators who disagreed on `correct`.
    pub discarded: usize,
    /// Mentions seen by fewer than two annotators.
    pub under_annotated: usize,
}

/// Collapses records to the latest verdict per (mention, annotator),
/// grouped by mention.
pub(crate) fn latest_by_mention(
    records: &[AnnotationRecord],
) -> BTreeMap<&MentionRef, BTreeMap<&str, &AnnotationRecord>> {
    let mut by_mention: BTreeMap<&MentionRef, BTreeMap<&str, &AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_mention
            .entry(&r.mention)
            .or_default()
            .insert(r.annotator_id.as_str(), r);
    }
    by_mention
}

fn unanimous<T: PartialEq + Copy>(mut values: impl Iterator<Item = T>) -> Option<T> {
    let first = values.next()?;
    values.all(|v| v == first).then_some(first)
}

/// Builds the gold standard from mentions on which every annotator gave the
/// same `correct` verdict. Attributes are kept only where annotators agree
/// on them too.
pub fn build_gold(records: &[AnnotationRecord]) -> GoldOutcome {
    let mut out = GoldOutcome::default();
    for (mention, verdicts) in latest_by_mention(records) {
        if verdicts.len() < 2 {
            out.under_annotated += 1;
            continue;
        }
        match unanimous(verdicts.values().map(|r| r.correct)) {
            Some(correct) => out.gold.push(GoldInstance {
                mention: mention.clone(),
                label: Label::from_bool(correct),
                gold_negated: unanimous(verdicts.values().map(|r| r.negated)),
                gold_temporality: unanimous(verdicts.values().map(|r| r.temporality)),
            }),
            None => out.discarded += 1,
        }
    }
    out
}

/// Reads line-delimited JSON records. Blank lines are skipped.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn parse_jsonl<T: for<'de> Deserialize<'de>>(reader: impl BufRead, source_name: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("records serialize");
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn mref(doc: &str, start: usize) -> MentionRef {
        MentionRef {
            doc_id: doc.to_string(),
            start,
            end: start + 6,
            cui: "C0004096".parse().unwrap(),
        }
    }

    pub fn rec(m: &MentionRef, annotator: &str, correct: bool) -> AnnotationRecord {
        AnnotationRecord {
            mention: m.clone(),
            annotator_id: annotator.to_string(),
            correct,
            negated: false,
            temporality: Temporality::Recent,
            timestamp: DateTime::parse_from_rfc3339("2020-01-01T00:00:00Z")
                .unwrap()
                .with_timezone(&Utc),
        }
    }

    #[test]
    fn unanimous_true_becomes_gold() {
        let m = mref("d1", 0);
        let out = build_gold(&[rec(&m, "a", true), rec(&m, "b", true)]);
        assert_eq!(out.gold.len(), 1);
        assert_eq!(out.gold[0].label, Label::TrueMention);
        assert_eq!(out.gold[0].gold_negated, Some(false));
        assert_eq!(out.discarded, 0);
    }

    #[test]
    fn unanimous_false_is_not_mention() {
        let m = mref("d1", 0);
        let out = build_gold(&[rec(&m, "a", false), rec(&m, "b", false)]);
        assert_eq!(out.gold[0].label, Label::NotMention);
    }

    #[test]
    fn disagreement_discarded() {
        let m = mref("d1", 0);
        let out = build_gold(&[rec(&m, "a", true), rec(&m, "b", false)]);
        assert!(out.gold.is_empty());
        assert_eq!(out.discarded, 1);
    }

    #[test]
    fn single_annotator_excluded() {
        let out = build_gold(&[rec(&mref("d1", 0), "a", true)]);
        assert_eq!(
            out,
            GoldOutcome {
                under_annotated: 1,
                ..Default::default()
            }
        );
    }

    #[test]
    fn later_record_replaces_earlier() {
        let m = mref("d1", 0);
        let out = build_gold(&[rec(&m, "a", false), rec(&m, "b", true), rec(&m, "a", true)]);
        assert_eq!(out.gold.len(), 1);
    }

    #[test]
    fn attribute_disagreement_nulls_field() {
        let m = mref("d1", 0);
        let mut b = rec(&m, "b", true);
        b.negated = true;
        b.temporality = Temporality::Historic;
        let out = build_gold(&[rec(&m, "a", true), b]);
        assert_eq!(out.gold[0].gold_negated, None);
        assert_eq!(out.gold[0].gold_temporality, None);
        assert!(out.gold[0].is_relevant());
    }

    #[test]
    fn gold_counts_at_scale() {
        // 2403 doubly annotated mentions, 319 of them disputed
        let mut records = Vec::new();
        for i in 0..2403 {
            let m = mref("d", i * 10);
            records.push(rec(&m, "a", true));
            records.push(rec(&m, "b", i >= 319));
        }
        let out = build_gold(&records);
        assert_eq!(out.gold.len(), 2084);
        assert_eq!(out.discarded, 319);
    }

    #[test]
    fn record_json_schema() {
        let r = rec(&mref("d1", 4), "ann1", true);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "annotator_id",
                "correct",
                "cui",
                "doc_id",
                "end",
                "negated",
                "start",
                "temporality",
                "timestamp"
            ]
        );
        assert_eq!(v["temporality"], "recent");
        let back: AnnotationRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
