//! Stratified k-fold cross-validation of the per-condition filter models and
//! per-chapter macro-averaged precision, recall and F1.
//!
//! Chapter metrics are unweighted means over the chapter's evaluated
//! conditions; chapter F1 is the mean of condition F1 values, not the
//! harmonic mean of the chapter's mean precision and recall. The overall
//! row is the unweighted mean over chapters.

mod folds;
mod metrics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use folds::{kfold_split, FoldPlan};
pub use metrics::{f1_score, prf, Prf};

use crate::error::{Error, Result};
use crate::filtermodel::{predict, train_forest, FeatureKey, FeatureVocab, ForestParams, Label, TrainInstance};
use crate::rng::mix_seed;
use crate::terminology::{ChapterId, Cui};

/// A gold mention with its raw (unencoded) context features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalInstance {
    pub cui: Cui,
    pub chapter: ChapterId,
    pub label: Label,
    pub context: BTreeSet<FeatureKey>,
    /// Gold relevance (not negated, not historic).
    pub relevant: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Keep negated and historic gold instances. Off by default.
    pub include_irrelevant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMetrics {
    pub cui: Cui,
    pub chapter: ChapterId,
    pub instances: usize,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterMetrics {
    pub chapter: ChapterId,
    /// Gold mentions of the chapter's evaluated conditions.
    pub instances: usize,
    pub conditions: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCondition {
    pub cui: Cui,
    pub chapter: ChapterId,
    pub instances: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroAverage {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterMetricsReport {
    pub k: usize,
    pub seed: u64,
    pub chapters: Vec<ChapterMetrics>,
    pub overall: MacroAverage,
    pub conditions: Vec<ConditionMetrics>,
    pub skipped: Vec<SkippedCondition>,
}

enum Outcome {
    Done(ConditionMetrics),
    Skipped(SkippedCondition),
}

fn evaluate_condition(
    cui: Cui,
    instances: &[&EvalInstance],
    folds: &[usize],
    k: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<Outcome> {
    let chapter = instances[0].chapter;
    let skip = |reason: String| {
        Ok(Outcome::Skipped(SkippedCondition {
            cui,
            chapter,
            instances: instances.len(),
            reason,
        }))
    };
    let positives = instances.iter().filter(|i| i.label == Label::TrueMention).count();
    if positives == 0 || positives == instances.len() {
        return skip("single-class".into());
    }
    let mut counts = [[0u64; 2]; 2]; // [gold][predicted]
    for fold in 0..k {
        let train: Vec<&EvalInstance> = (0..instances.len())
            .filter(|&i| folds[i] != fold)
            .map(|i| instances[i])
            .collect();
        let test: Vec<&EvalInstance> = (0..instances.len())
            .filter(|&i| folds[i] == fold)
            .map(|i| instances[i])
            .collect();
        if test.is_empty() {
            continue;
        }
        let train_pos = train.iter().filter(|i| i.label == Label::TrueMention).count();
        if train_pos == 0 || train_pos == train.len() {
            return skip(format!("fold {fold} training split is single-class"));
        }
        let vocab = FeatureVocab::from_key_sets(train.iter().map(|i| &i.context));
        let data: Vec<TrainInstance> = train
            .iter()
            .map(|i| TrainInstance {
                features: vocab.encode(&i.context),
                label: i.label,
                cui,
                chapter,
            })
            .collect();
        let model = train_forest(
            &data,
            &vocab,
            params,
            mix_seed(&[seed, u64::from(cui.number()), fold as u64]),
        )?;
        for t in test {
            let p = predict(&model, &vocab.encode(&t.context));
            counts[t.label.index()][p.label.index()] += 1;
        }
    }
    let (tn, fp, fn_, tp) = (counts[0][0], counts[0][1], counts[1][0], counts[1][1]);
    let m = prf(tp, fp, fn_);
    Ok(Outcome::Done(ConditionMetrics {
        cui,
        chapter,
        instances: instances.len(),
        tp,
        fp,
        fn_,
        tn,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
    }))
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Cross-validates one forest per condition and aggregates per chapter.
///
/// Folds come from one [`kfold_split`] over all kept instances, stratified
/// by `(condition, label)`. A condition is skipped when it is single-class
/// or when some fold leaves its training split single-class. The forest of
/// condition `c` in fold `f` is seeded with `mix_seed([seed, c, f])`, so
/// the report does not depend on scheduling.
type Getter = fn(&ChapterMetrics) -> f64;

pub fn evaluate(
    instances: &[EvalInstance],
    k: usize,
    params: &ForestParams,
    seed: u64,
    options: EvalOptions,
) -> Result<ChapterMetricsReport> {
    if instances.is_empty() {
        return Err(Error::Argument("no gold instances to evaluate".into()));
    }
    let kept: Vec<&EvalInstance> = instances
        .iter()
        .filter(|i| options.include_irrelevant || i.relevant)
        .collect();
    if kept.is_empty() {
        return Err(Error::Argument("every gold instance is negated or historic".into()));
    }
    let strata: Vec<(Cui, Label)> = kept.iter().map(|i| (i.cui, i.label)).collect();
    let plan = kfold_split(&strata, k, seed)?;

    let mut by_cui: BTreeMap<Cui, (Vec<&EvalInstance>, Vec<usize>)> = BTreeMap::new();
    for (i, inst) in kept.iter().enumerate() {
        let e = by_cui.entry(inst.cui).or_default();
        e.0.push(inst);
        e.1.push(plan.assignments[i]);
    }
    let groups: Vec<_> = by_cui.into_iter().collect();
    let outcomes: Vec<Outcome> = groups
        .par_iter()
        .map(|(cui, (insts, folds))| evaluate_condition(*cui, insts, folds, k, params, seed))
        .collect::<Result<_>>()?;

    let mut conditions = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Done(c) => conditions.push(c),
            Outcome::Skipped(s) => {
                log::warn!("condition {} skipped: {}", s.cui, s.reason);
                skipped.push(s)
            }
        }
    }

    let mut per_chapter: BTreeMap<ChapterId, Vec<&ConditionMetrics>> = BTreeMap::new();
    for c in &conditions {
        per_chapter.entry(c.chapter).or_default().push(c);
    }
    let chapters: Vec<ChapterMetrics> = per_chapter
        .into_iter()
        .map(|(chapter, cs)| {
            let col = |f: fn(&ConditionMetrics) -> f64| mean(&cs.iter().map(|c| f(c)).collect::<Vec<_>>());
            ChapterMetrics {
                chapter,
                instances: cs.iter().map(|c| c.instances).sum(),
                conditions: cs.len(),
                precision: col(|c| c.precision),
                recall: col(|c| c.recall),
                f1: col(|c| c.f1),
            }
        })
        .collect();
    let overall = MacroAverage {
        precision: mean(&chapters.iter().map(|c| c.precision).collect::<Vec<_>>()),
        recall: mean(&chapters.iter().map(|c| c.recall).collect::<Vec<_>>()),
        f1: mean(&chapters.iter().map(|c| c.f1).collect::<Vec<_>>()),
    };
    Ok(ChapterMetricsReport {
        k,
        seed,
        chapters,
        overall,
        conditions,
        skipped,
    })
}

impl ChapterMetricsReport {
    pub fn chapter(&self, id: ChapterId) -> Option<&ChapterMetrics> {
        self.chapters.iter().find(|c| c.chapter == id)
    }

    pub fn condition(&self, cui: Cui) -> Option<&ConditionMetrics> {
        self.conditions.iter().find(|c| c.cui == cui)
    }

    /// One row per chapter, header `chapter,instances,precision,recall,f1`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("chapter,instances,precision,recall,f1\n");
        for c in &self.chapters {
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6}",
                c.chapter, c.instances, c.precision, c.recall, c.f1
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text table with chapters across, six per block, rows
    /// Instances / Precision / Recall / F1, followed by the macro average
    /// and any skipped conditions.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for block in self.chapters.chunks(6) {
            let _ = write!(s, "{:<14}", "ICD10 chapter");
            for c in block {
                let _ = write!(s, "{:>8}", c.chapter.roman());
            }
            s.push('\n');
            let _ = write!(s, "{:<14}", "Instances");
            for c in block {
                let _ = write!(s, "{:>8}", c.instances);
            }
            s.push('\n');
            let rows: [(&str, Getter); 3] = [
                ("Precision", |c| c.precision),
                ("Recall", |c| c.recall),
                ("F1", |c| c.f1),
            ];
            for (name, get) in rows {
                let _ = write!(s, "{name:<14}");
                for c in block {
                    let _ = write!(s, "{:>8.3}", get(c));
                }
                s.push('\n');
            }
        }
        let _ = writeln!(
            s,
            "Macro average  P {:.3}  R {:.3}  F1 {:.3}",
            self.overall.precision, self.overall.recall, self.overall.f1
        );
        for sk in &self.skipped {
            let _ = writeln!(
                s,
                "skipped {} ({}, {} instances): {}",
                sk.cui, sk.chapter, sk.instances, sk.reason
            );
        }
        s
    }
}
