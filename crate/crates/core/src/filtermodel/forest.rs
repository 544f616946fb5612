use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, FeatureVocab};
use crate::error::{Error, Result};
use crate::rng::Xoshiro256;
use crate::terminology::{ChapterId, Cui};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    NotMention,
    TrueMention,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::NotMention => 0,
            Label::TrueMention => 1,
        }
    }

    pub fn from_bool(correct: bool) -> Self {
        if correct {
            Label::TrueMention
        } else {
            Label::NotMention
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainInstance {
    pub features: FeatureVector,
    pub label: Label,
    pub cui: Cui,
    pub chapter: ChapterId,
}

/// Number of candidate features drawn at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// floor(sqrt(vocabulary size)), at least 1.
    #[default]
    Sqrt,
    All,
    Fixed(u32),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => n_features.max(1),
            MaxFeatures::Fixed(k) => (k as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: u32,
    pub max_features: MaxFeatures,
    pub min_leaf: u32,
    /// `None` grows until leaves are pure or cannot be split.
    pub max_depth: Option<u32>,
    /// Draw a same-size resample with replacement per tree; when false every
    /// tree sees the full training set.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_leaf: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    /// Instances lacking `feature` go to `absent`, the rest to `present`.
    Split { feature: u32, absent: u32, present: u32 },
    /// Class counts `[NotMention, TrueMention]` of the training samples
    /// reaching this leaf.
    Leaf { counts: [u32; 2] },
}

/// Binary decision tree stored in pre-order; node 0 is the root and every
/// child index is greater than its parent's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf majority; an evenly split leaf votes TrueMention.
    pub fn predict(&self, features: &FeatureVector) -> Label {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    absent,
                    present,
                } => {
                    i = if features.contains(feature) { present } else { absent } as usize;
                }
                Node::Leaf { counts } => {
                    return if counts[1] >= counts[0] {
                        Label::TrueMention
                    } else {
                        Label::NotMention
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { absent, present, .. } => 1 + walk(t, absent as usize).max(walk(t, present as usize)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestModel {
    pub condition_cui: Cui,
    pub trees: Vec<Tree>,
    pub params: ForestParams,
    pub vocab: FeatureVocab,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Fraction of trees voting TrueMention.
    pub score: f64,
    pub votes: u32,
}

/// Gini impurity of binary class counts.
pub fn gini(counts: [u64; 2]) -> Result<f64> {
    let total = counts[0] + counts[1];
    if total == 0 {
        return Err(Error::Argument("gini of an empty node".into()));
    }
    let p0 = counts[0] as f64 / total as f64;
    let p1 = counts[1] as f64 / total as f64;
    Ok(1.0 - (p0 * p0 + p1 * p1))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    /// Worker threads for per-tree parallelism; `None` uses the global pool.
    /// Results are identical for any value.
    pub threads: Option<usize>,
    /// Keep each tree's bootstrap sample indices in the report.
    pub record_samples: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub samples: Vec<Vec<usize>>,
}

pub fn train_forest(
    instances: &[TrainInstance],
    vocab: &FeatureVocab,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    train_forest_with(instances, vocab, params, seed, TrainOptions::default()).map(|(m, _)| m)
}

/// Trains one forest for one condition. Tree `t` draws all of its randomness
/// from a generator seeded with `seed + t`, so trees are independent and the
/// model is a pure function of `(instances, vocab, params, seed)`.
pub fn train_forest_with(
    instances: &[TrainInstance],
    vocab: &FeatureVocab,
    params: &ForestParams,
    seed: u64,
    options: TrainOptions,
) -> Result<(ForestModel, TrainReport)> {
    if instances.is_empty() {
        return Err(Error::Argument("no training instances".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::Argument("n_trees must be at least 1".into()));
    }
    if params.min_leaf == 0 {
        return Err(Error::Argument("min_leaf must be at least 1".into()));
    }
    let cui = instances[0].cui;
    if let Some(other) = instances.iter().find(|i| i.cui != cui) {
        return Err(Error::Argument(format!(
            "instances mix conditions {cui} and {}",
            other.cui
        )));
    }
    let positives = instances.iter().filter(|i| i.label == Label::TrueMention).count();
    if positives == 0 || positives == instances.len() {
        return Err(Error::Degenerate(format!(
            "training data for {cui} contains a single class"
        )));
    }
    let n_features = vocab.len();
    if let Some(bad) = instances
        .iter()
        .flat_map(|i| i.features.ids())
        .find(|&&f| f as usize >= n_features)
    {
        return Err(Error::Argument(format!(
            "feature id {bad} outside vocabulary of size {n_features}"
        )));
    }

    let builder = TreeBuilder {
        instances,
        max_features: params.max_features.resolve(n_features),
        min_leaf: params.min_leaf as usize,
        max_depth: params.max_depth.map(|d| d as usize),
    };
    let grow = |t: u32| -> (Tree, Vec<usize>) {
        let mut rng = Xoshiro256::seed_from_u64(seed.wrapping_add(u64::from(t)));
        let n = instances.len();
        let sample: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.index(n)).collect()
        } else {
            (0..n).collect()
        };
        let tree = builder.grow(&sample, &mut rng);
        (tree, sample)
    };
    let grown: Vec<(Tree, Vec<usize>)> = match options.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
            pool.install(|| (0..params.n_trees).into_par_iter().map(grow).collect())
        }
        None => (0..params.n_trees).into_par_iter().map(grow).collect(),
    };

    let mut report = TrainReport::default();
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, sample) in grown {
        trees.push(tree);
        if options.record_samples {
            report.samples.push(sample);
        }
    }
    Ok((
        ForestModel {
            condition_cui: cui,
            trees,
            params: *params,
            vocab: vocab.clone(),
            seed,
        },
        report,
    ))
}

struct TreeBuilder<'a> {
    instances: &'a [TrainInstance],
    max_features: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
}

/// Split quality `Σ_child (n_not² + n_true²) / n_child` as an exact fraction
/// `(numerator, denominator)`. Maximizing it minimizes the weighted Gini
/// impurity of the children.
fn split_score(absent: [u64; 2], present: [u64; 2]) -> (u128, u128) {
    let sq = |c: [u64; 2]| u128::from(c[0]) * u128::from(c[0]) + u128::from(c[1]) * u128::from(c[1]);
    let na = u128::from(absent[0] + absent[1]);
    let np = u128::from(present[0] + present[1]);
    (sq(absent) * np + sq(present) * na, na * np)
}

fn cmp_fraction(a: (u128, u128), b: (u128, u128)) -> Ordering {
    (a.0 * b.1).cmp(&(b.0 * a.1))
}

impl TreeBuilder<'_> {
    fn grow(&self, sample: &[usize], rng: &mut Xoshiro256) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        self.build(&mut tree, sample.to_vec(), 0, rng);
        tree
    }

    fn build(&self, tree: &mut Tree, sample: Vec<usize>, depth: usize, rng: &mut Xoshiro256) -> u32 {
        let id = tree.nodes.len() as u32;
        let mut counts = [0u64; 2];
        for &i in &sample {
            counts[self.instances[i].label.index()] += 1;
        }
        let leaf = Node::Leaf {
            counts: [counts[0] as u32, counts[1] as u32],
        };
        tree.nodes.push(leaf);

        let n = sample.len();
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || n < 2 * self.min_leaf {
            return id;
        }

        // Per-feature class counts among samples that have the feature.
        let mut present: BTreeMap<u32, [u64; 2]> = BTreeMap::new();
        for &i in &sample {
            let inst = &self.instances[i];
            for &f in inst.features.ids() {
                present.entry(f).or_insert([0, 0])[inst.label.index()] += 1;
            }
        }
        // Only features that vary inside the node can split it.
        let pool: Vec<u32> = present
            .iter()
            .filter(|(_, c)| (c[0] + c[1]) < n as u64)
            .map(|(&f, _)| f)
            .collect();
        if pool.is_empty() {
            return id;
        }
        let candidates = rng.sample(&pool, self.max_features);

        let mut best: Option<(u32, (u128, u128))> = None;
        for f in candidates {
            let p = present[&f];
            let a = [counts[0] - p[0], counts[1] - p[1]];
            if ((p[0] + p[1]) as usize) < self.min_leaf || ((a[0] + a[1]) as usize) < self.min_leaf {
                continue;
            }
            let score = split_score(a, p);
            let better = match best {
                None => true,
                Some((bf, bs)) => match cmp_fraction(score, bs) {
                    Ordering::Greater => true,
                    Ordering::Equal => f < bf,
                    Ordering::Less => false,
                },
            };
            if better {
                best = Some((f, score));
            }
        }
        let Some((feature, _)) = best else {
            return id;
        };

        let (with, without): (Vec<usize>, Vec<usize>) = sample
            .into_iter()
            .partition(|&i| self.instances[i].features.contains(feature));
        let absent = self.build(tree, without, depth + 1, rng);
        let present = self.build(tree, with, depth + 1, rng);
        tree.nodes[id as usize] = Node::Split {
            feature,
            absent,
            present,
        };
        id
    }
}

/// Majority vote over trees. Exactly half the trees voting TrueMention
/// yields TrueMention.
pub fn predict(model: &ForestModel, features: &FeatureVector) -> Prediction {
    let votes = model
        .trees
        .iter()
        .filter(|t| t.predict(features) == Label::TrueMention)
        .count() as u32;
    let n = model.trees.len() as u32;
    Prediction {
        label: if 2 * votes >= n {
            Label::TrueMention
        } else {
            Label::NotMention
        },
        score: f64::from(votes) / f64::from(n),
        votes,
    }
}

impl ForestModel {
    pub fn predict(&self, features: &FeatureVector) -> Prediction {
        predict(self, features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtermodel::FeatureKey;

    fn vocab(n: u32) -> FeatureVocab {
        FeatureVocab::from_keys(
            (0..n)
                .map(|i| FeatureKey::same(Cui::from_number(i + 1).unwrap()))
                .collect(),
        )
    }

    fn inst(features: &[u32], label: Label) -> TrainInstance {
        TrainInstance {
            features: FeatureVector::from_ids(features.to_vec()),
            label,
            cui: "C0004096".parse().unwrap(),
            chapter: "X".parse().unwrap(),
        }
    }

    fn leaf_model(votes: &[Label]) -> ForestModel {
        let trees = votes
            .iter()
            .map(|l| Tree {
                nodes: vec![Node::Leaf {
                    counts: if *l == Label::TrueMention { [0, 1] } else { [1, 0] },
                }],
            })
            .collect::<Vec<_>>();
        ForestModel {
            condition_cui: "C0004096".parse().unwrap(),
            params: ForestParams {
                n_trees: trees.len() as u32,
                ..Default::default()
            },
            trees,
            vocab: vocab(1),
            seed: 0,
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini([10, 0]).unwrap(), 0.0);
        assert_eq!(gini([5, 5]).unwrap(), 0.5);
        assert!((gini([3, 1]).unwrap() - 0.375).abs() < 1e-15);
        assert!(matches!(gini([0, 0]), Err(Error::Argument(_))));
    }

    #[test]
    fn single_class_is_degenerate() {
        let data = vec![inst(&[0], Label::TrueMention), inst(&[], Label::TrueMention)];
        let err = train_forest(&data, &vocab(1), &ForestParams::default(), 1).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn empty_is_argument_error() {
        assert!(matches!(
            train_forest(&[], &vocab(1), &ForestParams::default(), 1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn mixed_conditions_rejected() {
        let mut b = inst(&[], Label::NotMention);
        b.cui = "C0008354".parse().unwrap();
        let data = vec![inst(&[0], Label::TrueMention), b];
        assert!(matches!(
            train_forest(&data, &vocab(1), &ForestParams::default(), 1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn separable_training_accuracy() {
        // feature 0 present exactly for true mentions; features 1-3 noise
        let mut data = Vec::new();
        for i in 0..20u32 {
            let label = if i % 2 == 0 {
                Label::TrueMention
            } else {
                Label::NotMention
            };
            let mut f = vec![1 + i % 3];
            if label == Label::TrueMention {
                f.push(0);
            }
            data.push(inst(&f, label));
        }
        let model = train_forest(&data, &vocab(4), &ForestParams::default(), 42).unwrap();
        assert_eq!(model.trees.len(), 100);
        let correct = data
            .iter()
            .filter(|d| model.predict(&d.features).label == d.label)
            .count();
        assert_eq!(correct, 20);
    }

    #[test]
    fn vote_rules() {
        use Label::*;
        let p = predict(&leaf_model(&[TrueMention; 3]), &FeatureVector::default());
        assert_eq!((p.label, p.score), (TrueMention, 1.0));
        let p = predict(&leaf_model(&[NotMention; 3]), &FeatureVector::default());
        assert_eq!((p.label, p.score), (NotMention, 0.0));
        let p = predict(
            &leaf_model(&[TrueMention, NotMention, NotMention, TrueMention]),
            &FeatureVector::default(),
        );
        assert_eq!((p.label, p.score), (TrueMention, 0.5));
        let p = predict(
            &leaf_model(&[TrueMention, NotMention, NotMention]),
            &FeatureVector::default(),
        );
        assert_eq!(p.label, NotMention);
        assert_eq!(p.votes, 1);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(0), 1);
        assert_eq!(MaxFeatures::Sqrt.resolve(10), 3);
        assert_eq!(MaxFeatures::Sqrt.resolve(16), 4);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
        assert_eq!(MaxFeatures::Fixed(0).resolve(7), 1);
    }

    #[test]
    fn bootstrap_samples_have_training_size() {
        let data: Vec<_> = (0..13u32)
            .map(|i| {
                inst(
                    &[i % 4],
                    if i % 3 == 0 {
                        Label::TrueMention
                    } else {
                        Label::NotMention
                    },
                )
            })
            .collect();
        let params = ForestParams {
            n_trees: 7,
            ..Default::default()
        };
        let (_, report) = train_forest_with(
            &data,
            &vocab(4),
            &params,
            9,
            TrainOptions {
                record_samples: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.samples.len(), 7);
        assert!(report
            .samples
            .iter()
            .all(|s| s.len() == 13 && s.iter().all(|&i| i < 13)));
    }

    #[test]
    fn min_leaf_is_respected() {
        let data: Vec<_> = (0..30u32)
            .map(|i| {
                inst(
                    &[i % 5, 5 + i % 2],
                    if i % 3 == 0 {
                        Label::TrueMention
                    } else {
                        Label::NotMention
                    },
                )
            })
            .collect();
        let params = ForestParams {
            n_trees: 5,
            min_leaf: 4,
            ..Default::default()
        };
        let model = train_forest(&data, &vocab(7), &params, 3).unwrap();
        for t in &model.trees {
            for n in &t.nodes {
                if let Node::Leaf { counts } = n {
                    assert!(counts[0] + counts[1] >= 4);
                }
            }
        }
    }

    #[test]
    fn max_depth_is_respected() {
        let data: Vec<_> = (0..40u32)
            .map(|i| {
                inst(
                    &[i % 7, 7 + i % 3],
                    if i % 4 == 0 {
                        Label::TrueMention
                    } else {
                        Label::NotMention
                    },
                )
            })
            .collect();
        let params = ForestParams {
            n_trees: 5,
            max_depth: Some(2),
            ..Default::default()
        };
        let model = train_forest(&data, &vocab(10), &params, 3).unwrap();
        assert!(model.trees.iter().all(|t| t.depth() <= 2));
    }
}
