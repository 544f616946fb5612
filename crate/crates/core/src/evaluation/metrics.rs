use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// tp + fp == 0; precision reported as 0.
    pub precision_undefined: bool,
    /// tp + fn == 0; recall reported as 0.
    pub recall_undefined: bool,
}

/// Precision, recall and F1 of the positive class. Zero denominators give 0
/// with the matching flag set instead of an error.
pub fn prf(tp: u64, fp: u64, fn_: u64) -> Prf {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Prf {
        precision,
        recall,
        f1: f1_score(precision, recall),
        precision_undefined: tp + fp == 0,
        recall_undefined: tp + fn_ == 0,
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
