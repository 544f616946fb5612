use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Xoshiro256;

/// Assignment of instances (by position) to `k` test folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// `assignments[i]` is the test fold of instance `i`.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold split. `strata[i]` is the stratum key of instance `i`
/// (the pipeline uses `(condition, label)`).
///
/// Strata are visited in key order. Each is shuffled with one shared
/// generator and dealt round-robin, starting at the fold after the one the
/// previous stratum ended on, so every stratum's fold counts differ by at
/// most one and total fold sizes stay balanced as well.
pub fn kfold_split<K: Ord>(strata: &[K], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Argument(format!("k must be at least 2, got {k}")));
    }
    let mut groups: BTreeMap<&K, Vec<usize>> = BTreeMap::new();
    for (i, key) in strata.iter().enumerate() {
        groups.entry(key).or_default().push(i);
    }
    let mut rng = Xoshiro256::seed_from_u64(seed);
    let mut assignments = vec![0; strata.len()];
    let mut offset = 0;
    for members in groups.values_mut() {
        rng.shuffle(members);
        for (j, &i) in members.iter().enumerate() {
            assignments[i] = (offset + j) % k;
        }
        offset = (offset + members.len()) % k;
    }
    Ok(FoldPlan { k, seed, assignments })
}
