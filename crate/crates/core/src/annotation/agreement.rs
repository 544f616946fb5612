use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{latest_by_mention, AnnotationRecord, MentionRef};
use crate::error::{Error, Result};
use crate::terminology::ChapterId;

/// 2×2 contingency table of two annotators' `correct` verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AgreementTable {
    pub both_true: u64,
    pub a_true_b_false: u64,
    pub a_false_b_true: u64,
    pub both_false: u64,
}

impl AgreementTable {
    pub fn new(both_true: u64, a_true_b_false: u64, a_false_b_true: u64, both_false: u64) -> Self {
        AgreementTable {
            both_true,
            a_true_b_false,
            a_false_b_true,
            both_false,
        }
    }

    pub fn total(&self) -> u64 {
        self.both_true + self.a_true_b_false + self.a_false_b_true + self.both_false
    }

    /// The table with annotators A and B exchanged.
    pub fn transpose(&self) -> Self {
        AgreementTable::new(
            self.both_true,
            self.a_false_b_true,
            self.a_true_b_false,
            self.both_false,
        )
    }

    /// The table with both annotators' labels flipped.
    pub fn flip_labels(&self) -> Self {
        AgreementTable::new(
            self.both_false,
            self.a_false_b_true,
            self.a_true_b_false,
            self.both_true,
        )
    }
}

/// Cohen's κ = (p_o − p_e) / (1 − p_e).
///
/// Computed from integer counts as
/// `(n·agree − Σ marginal products) / (n² − Σ marginal products)` so the only
/// rounding is the final division.
pub fn cohens_kappa(table: &AgreementTable) -> Result<f64> {
    let n = u128::from(table.total());
    if n == 0 {
        return Err(Error::Argument("κ of an empty table".into()));
    }
    let a_true = u128::from(table.both_true + table.a_true_b_false);
    let b_true = u128::from(table.both_true + table.a_false_b_true);
    let chance = a_true * b_true + (n - a_true) * (n - b_true);
    let agree = u128::from(table.both_true + table.both_false);
    let denom = n * n - chance;
    if denom == 0 {
        return Err(Error::Degenerate(
            "chance agreement is 1: both annotators gave one identical constant label".into(),
        ));
    }
    let numer = (n * agree) as f64 - chance as f64;
    Ok(numer / denom as f64)
}

/// Tabulates verdicts of annotators `pair.0` (A) and `pair.1` (B) on the
/// mentions both judged, optionally restricted to one chapter.
pub fn contingency(
    records: &[AnnotationRecord],
    pair: (&str, &str),
    chapter: Option<ChapterId>,
    chapter_of: &dyn Fn(&MentionRef) -> Option<ChapterId>,
) -> Result<AgreementTable> {
    let mut table = AgreementTable::default();
    for (mention, verdicts) in latest_by_mention(records) {
        if let Some(ch) = chapter {
            if chapter_of(mention) != Some(ch) {
                continue;
            }
        }
        let (Some(a), Some(b)) = (verdicts.get(pair.0), verdicts.get(pair.1)) else {
            continue;
        };
        match (a.correct, b.correct) {
            (true, true) => table.both_true += 1,
            (true, false) => table.a_true_b_false += 1,
            (false, true) => table.a_false_b_true += 1,
            (false, false) => table.both_false += 1,
        }
    }
    if table.total() == 0 {
        let scope = chapter.map_or(String::new(), |c| format!(" in chapter {c}"));
        return Err(Error::EmptyScope(format!(
            "{} and {} share no annotated mentions{scope}",
            pair.0, pair.1
        )));
    }
    Ok(table)
}

/// Annotator pairs `(a, b)` with `a < b` that share at least one mention.
pub fn annotator_pairs(records: &[AnnotationRecord]) -> Vec<(String, String)> {
    let mut pairs = BTreeSet::new();
    for verdicts in latest_by_mention(records).values() {
        let names: Vec<&str> = verdicts.keys().copied().collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                pairs.insert((a.to_string(), b.to_string()));
            }
        }
    }
    pairs.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairKappa {
    pub a: String,
    pub b: String,
    pub table: Option<AgreementTable>,
    /// `None` when the pair shares no mentions in the chapter or the table
    /// is degenerate.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterKappa {
    pub chapter: ChapterId,
    pub pairs: Vec<PairKappa>,
    /// Unweighted mean over pairs with a computable κ.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub chapters: Vec<ChapterKappa>,
    /// Unweighted mean over chapters with a computable κ.
    pub average: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-chapter κ for each pair, averaged without weighting first over pairs
/// and then over chapters.
pub fn kappa_report(
    records: &[AnnotationRecord],
    pairs: &[(String, String)],
    chapter_of: &dyn Fn(&MentionRef) -> Option<ChapterId>,
) -> KappaReport {
    let chapters: BTreeSet<ChapterId> = records.iter().filter_map(|r| chapter_of(&r.mention)).collect();
    let mut out = Vec::new();
    for ch in chapters {
        let per_pair: Vec<PairKappa> = pairs
            .iter()
            .map(|(a, b)| {
                let table = contingency(records, (a, b), Some(ch), chapter_of).ok();
                PairKappa {
                    a: a.clone(),
                    b: b.clone(),
                    table,
                    kappa: table.and_then(|t| cohens_kappa(&t).ok()),
                }
            })
            .collect();
        let kappa = mean(per_pair.iter().filter_map(|p| p.kappa));
        out.push(ChapterKappa {
            chapter: ch,
            pairs: per_pair,
            kappa,
        });
    }
    let average = mean(out.iter().filter_map(|c| c.kappa));
    KappaReport { chapters: out, average }
}

impl KappaReport {
    pub fn chapter(&self, ch: ChapterId) -> Option<&ChapterKappa> {
        self.chapters.iter().find(|c| c.chapter == ch)
    }

    /// Two-row plain-text table, chapters across; absent values print as `-`.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |k| format!("{k:.3}"));
        let mut s = String::new();
        let _ = write!(s, "{:<14}", "ICD10 chapter");
        for c in &self.chapters {
            let _ = write!(s, "{:>8}", c.chapter.roman());
        }
        s.push('\n');
        let _ = write!(s, "{:<14}", "Cohen's k");
        for c in &self.chapters {
            let _ = write!(s, "{:>8}", fmt(c.kappa));
        }
        s.push('\n');
        let _ = writeln!(s, "average {}", fmt(self.average));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::tests::{mref, rec};

    fn x(_: &MentionRef) -> Option<ChapterId> {
        Some("X".parse().unwrap())
    }

    #[test]
    fn hand_computed_kappas() {
        assert_eq!(cohens_kappa(&AgreementTable::new(10, 0, 0, 10)).unwrap(), 1.0);
        assert!((cohens_kappa(&AgreementTable::new(1, 1, 1, 1)).unwrap() - 0.0).abs() < 1e-12);
        assert!((cohens_kappa(&AgreementTable::new(20, 5, 10, 15)).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn degenerate_marginals() {
        assert!(matches!(
            cohens_kappa(&AgreementTable::new(7, 0, 0, 0)),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            cohens_kappa(&AgreementTable::new(0, 0, 0, 3)),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            cohens_kappa(&AgreementTable::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn contingency_counts() {
        let (m1, m2, m3) = (mref("d", 0), mref("d", 10), mref("d", 20));
        let records = vec![
            rec(&m1, "a", true),
            rec(&m1, "b", true),
            rec(&m2, "a", true),
            rec(&m2, "b", false),
            rec(&m3, "a", false),
            rec(&m3, "b", false),
        ];
        let t = contingency(&records, ("a", "b"), None, &x).unwrap();
        assert_eq!(t, AgreementTable::new(1, 1, 0, 1));
        assert_eq!(contingency(&records, ("b", "a"), None, &x).unwrap(), t.transpose());
    }

    #[test]
    fn disjoint_mentions_empty_scope() {
        let records = vec![rec(&mref("d", 0), "a", true), rec(&mref("d", 10), "b", true)];
        assert!(matches!(
            contingency(&records, ("a", "b"), None, &x),
            Err(Error::EmptyScope(_))
        ));
    }

    #[test]
    fn chapter_filter_excluding_everything() {
        let records = vec![rec(&mref("d", 0), "a", true), rec(&mref("d", 0), "b", true)];
        let iv: ChapterId = "IV".parse().unwrap();
        assert!(matches!(
            contingency(&records, ("a", "b"), Some(iv), &x),
            Err(Error::EmptyScope(_))
        ));
    }

    fn records_for(table: AgreementTable, a: &str, b: &str, doc: &str) -> Vec<AnnotationRecord> {
        let mut out = Vec::new();
        let mut i = 0;
        let cells = [
            (table.both_true, true, true),
            (table.a_true_b_false, true, false),
            (table.a_false_b_true, false, true),
            (table.both_false, false, false),
        ];
        for (count, va, vb) in cells {
            for _ in 0..count {
                let m = mref(doc, i * 10);
                out.push(rec(&m, a, va));
                out.push(rec(&m, b, vb));
                i += 1;
            }
        }
        out
    }

    #[test]
    fn report_single_pair_equals_kappa() {
        let records = records_for(AgreementTable::new(20, 5, 10, 15), "a", "b", "d");
        let pairs = annotator_pairs(&records);
        assert_eq!(pairs, vec![("a".to_string(), "b".to_string())]);
        let report = kappa_report(&records, &pairs, &x);
        assert_eq!(report.chapters.len(), 1);
        assert!((report.chapters[0].kappa.unwrap() - 0.4).abs() < 1e-12);
        assert!((report.average.unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn report_means_over_pairs() {
        // pair (a,b): κ 0.4; pair (c,d): κ 0.8 via (9,1,0,5)? use exact tables
        let mut records = records_for(AgreementTable::new(20, 5, 10, 15), "a", "b", "d1");
        // (45,5,0,50): n=100, po=.95, pa=.5, pb=.45, pe=.5*.45+.5*.55=.5 → κ=.9
        // (40,10,0,50): po=.9, pa=.5, pb=.4, pe=.5 → κ=.8
        records.extend(records_for(AgreementTable::new(40, 10, 0, 50), "c", "d", "d2"));
        let pairs = vec![("a".to_string(), "b".to_string()), ("c".to_string(), "d".to_string())];
        let report = kappa_report(&records, &pairs, &x);
        let ch = &report.chapters[0];
        assert!((ch.pairs[0].kappa.unwrap() - 0.4).abs() < 1e-12);
        assert!((ch.pairs[1].kappa.unwrap() - 0.8).abs() < 1e-12);
        assert!((ch.kappa.unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn chapters_without_kappa_are_absent() {
        let ch_of = |m: &MentionRef| -> Option<ChapterId> {
            Some(if m.doc_id == "d1" {
                "X".parse().unwrap()
            } else {
                "IV".parse().unwrap()
            })
        };
        let mut records = records_for(AgreementTable::new(20, 5, 10, 15), "a", "b", "d1");
        // chapter IV: perfectly constant verdicts → degenerate
        records.extend(records_for(AgreementTable::new(3, 0, 0, 0), "a", "b", "d2"));
        let pairs = annotator_pairs(&records);
        let report = kappa_report(&records, &pairs, &ch_of);
        let iv = report.chapter("IV".parse().unwrap()).unwrap();
        assert_eq!(iv.kappa, None);
        assert!((report.average.unwrap() - 0.4).abs() < 1e-12);
        assert!(report.to_table().contains('-'));
    }
}
