//! Reference data and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use comorbid::filtermodel::{FeatureVector, Label, Node, TrainInstance, Tree};
use comorbid::rng::Xoshiro256;
use comorbid::terminology::{Cui, Lexicon, LexiconEntry};
use num_rational::Ratio;

pub fn fixture(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

/// Reference per-chapter (chapter, precision, recall, F1) rows, rounded to
/// three decimals.
pub const CHAPTER_RATES: [(&str, f64, f64, f64); 18] = [
    ("I", 0.662, 0.953, 0.781),
    ("II", 0.748, 0.958, 0.840),
    ("III", 0.737, 0.952, 0.831),
    ("IV", 0.866, 0.961, 0.911),
    ("V", 0.920, 0.991, 0.954),
    ("VI", 0.767, 0.984, 0.862),
    ("VII", 0.802, 0.952, 0.870),
    ("IX", 0.858, 0.916, 0.886),
    ("X", 0.879, 1.000, 0.936),
    ("XI", 0.907, 0.964, 0.935),
    ("XII", 0.873, 0.993, 0.929),
    ("XIII", 0.904, 0.975, 0.938),
    ("XIV", 0.885, 0.969, 0.925),
    ("XV", 0.874, 0.976, 0.922),
    ("XVII", 0.479, 0.806, 0.601),
    ("XVIII", 0.816, 0.952, 0.878),
    ("XIX", 0.682, 0.897, 0.775),
    ("XX", 0.610, 0.826, 0.702),
];

// ---------------------------------------------------------------- matcher

const WORDS: [&str; 8] = ["alpha", "beta", "gamma", "delta", "omega", "zeta", "kappa", "sigma"];
const SEPARATORS: [&str; 6] = [" ", " ", " ", ", ", "-", " ("];

/// A random lexicon over a small vocabulary and a document built from the
/// same words, so overlapping and nested matches are common.
#[derive(Debug, Clone)]
pub struct MatcherCase {
    /// Per concept, its patterns as word indices.
    pub concepts: Vec<Vec<Vec<usize>>>,
    pub text: String,
}

impl MatcherCase {
    pub fn random(rng: &mut Xoshiro256, max_patterns: usize, max_chars: usize) -> Self {
        let mut concepts = Vec::new();
        let total = 1 + rng.index(max_patterns);
        let mut made = 0;
        while made < total {
            let n = (1 + rng.index(3)).min(total - made);
            let pats: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..1 + rng.index(3)).map(|_| rng.index(WORDS.len())).collect())
                .collect();
            made += n;
            concepts.push(pats);
        }
        let mut text = String::new();
        let target = rng.index(max_chars);
        loop {
            let w = WORDS[rng.index(WORDS.len())];
            let w = match rng.index(5) {
                0 => w.to_uppercase(),
                1 => {
                    let mut c = w.chars();
                    c.next().unwrap().to_uppercase().chain(c).collect()
                }
                _ => w.to_string(),
            };
            let sep = match rng.index(12) {
                0 => ". ",
                1 => "\n",
                i => SEPARATORS[i % SEPARATORS.len()],
            };
            if text.chars().count() + w.len() + sep.len() > target.max(1) {
                break;
            }
            text.push_str(&w);
            text.push_str(sep);
        }
        MatcherCase { concepts, text }
    }

    pub fn cui(i: usize) -> Cui {
        Cui::from_number(1000 + i as u32).unwrap()
    }

    pub fn lexicon(&self) -> Lexicon {
        let entries = self
            .concepts
            .iter()
            .enumerate()
            .map(|(i, pats)| {
                let syns: Vec<String> = pats
                    .iter()
                    .map(|p| p.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" "))
                    .collect();
                LexiconEntry {
                    cui: Self::cui(i),
                    preferred_term: syns[0].clone(),
                    synonyms: syns,
                    icd_code: "A00".parse().unwrap(),
                    chapter: "I".parse().unwrap(),
                }
            })
            .collect();
        Lexicon::from_entries(entries).unwrap()
    }
}

/// Brute-force matcher: split sentences at `.`+whitespace and newlines,
/// words at non-alphanumeric characters, try every pattern at every word,
/// then keep longest-first, leftmost-first non-overlapping matches.
/// Returns `(char start, char end, cui)` sorted by start.
pub fn oracle_matches(case: &MatcherCase) -> Vec<(usize, usize, Cui)> {
    let mut owner: HashMap<Vec<String>, usize> = HashMap::new();
    let mut patterns: Vec<(Vec<String>, usize)> = Vec::new();
    for (ci, pats) in case.concepts.iter().enumerate() {
        for p in pats {
            let words: Vec<String> = p.iter().map(|&w| WORDS[w].to_string()).collect();
            if !owner.contains_key(&words) {
                owner.insert(words.clone(), ci);
                patterns.push((words, ci));
            }
        }
    }

    let chars: Vec<char> = case.text.chars().collect();
    let mut sentences: Vec<Vec<(usize, usize, String)>> = vec![Vec::new()];
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            let s = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            let w: String = chars[s..i].iter().collect::<String>().to_lowercase();
            sentences.last_mut().unwrap().push((s, i, w));
            continue;
        }
        let ends = c == '\n' || (c == '.' && chars.get(i + 1).is_none_or(|n| n.is_whitespace()));
        if ends {
            sentences.push(Vec::new());
        }
        i += 1;
    }

    let mut out = Vec::new();
    for words in &sentences {
        let mut cands: Vec<(usize, usize, usize)> = Vec::new(); // (start word, len, concept)
        for (p, ci) in &patterns {
            for s in 0..words.len() {
                if s + p.len() <= words.len() && (0..p.len()).all(|j| words[s + j].2 == p[j]) {
                    cands.push((s, p.len(), *ci));
                }
            }
        }
        cands.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut taken = vec![false; words.len()];
        for (s, len, ci) in cands {
            if (s..s + len).any(|j| taken[j]) {
                continue;
            }
            for t in &mut taken[s..s + len] {
                *t = true;
            }
            out.push((words[s].0, words[s + len - 1].1, MatcherCase::cui(ci)));
        }
    }
    out.sort();
    out
}

// ----------------------------------------------------------------- forest

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleTree {
    Leaf([u32; 2]),
    Split {
        feature: u32,
        absent: Box<OracleTree>,
        present: Box<OracleTree>,
    },
}

fn weighted_gini(groups: &[[i64; 2]]) -> Ratio<i64> {
    let n: i64 = groups.iter().map(|g| g[0] + g[1]).sum();
    let mut total = Ratio::from_integer(0);
    for g in groups {
        let m = g[0] + g[1];
        if m == 0 {
            continue;
        }
        let p0 = Ratio::new(g[0], m);
        let p1 = Ratio::new(g[1], m);
        let gini = Ratio::from_integer(1) - p0 * p0 - p1 * p1;
        total += Ratio::new(m, n) * gini;
    }
    total
}

/// One training row: present feature ids and the label.
pub type Row = (Vec<u32>, Label);

fn class_counts(rows: &[&Row]) -> [i64; 2] {
    let mut c = [0i64; 2];
    for r in rows {
        c[r.1.index()] += 1;
    }
    c
}

/// Exhaustive greedy CART: at every impure node try every feature that
/// splits the node into two non-empty parts and take the one with the
/// lowest weighted Gini impurity (exact rationals), lowest feature id on
/// ties. Stops at pure nodes or when no feature splits.
pub fn oracle_tree(data: &[Row], n_features: u32) -> OracleTree {
    fn grow(rows: Vec<&Row>, n_features: u32) -> OracleTree {
        let c = class_counts(&rows);
        let leaf = OracleTree::Leaf([c[0] as u32, c[1] as u32]);
        if c[0] == 0 || c[1] == 0 {
            return leaf;
        }
        let mut best: Option<(u32, Ratio<i64>)> = None;
        for f in 0..n_features {
            let (with, without): (Vec<&Row>, Vec<&Row>) = rows.iter().partition(|r| r.0.contains(&f));
            if with.is_empty() || without.is_empty() {
                continue;
            }
            let g = weighted_gini(&[class_counts(&without), class_counts(&with)]);
            if best.as_ref().is_none_or(|(_, b)| g < *b) {
                best = Some((f, g));
            }
        }
        let Some((f, _)) = best else { return leaf };
        let (with, without): (Vec<&Row>, Vec<&Row>) = rows.into_iter().partition(|r| r.0.contains(&f));
        OracleTree::Split {
            feature: f,
            absent: Box::new(grow(without, n_features)),
            present: Box::new(grow(with, n_features)),
        }
    }
    grow(data.iter().collect(), n_features)
}

/// Converts a trained tree to the recursive form for comparison.
pub fn to_oracle_form(tree: &Tree) -> OracleTree {
    fn go(tree: &Tree, id: usize) -> OracleTree {
        match tree.nodes[id] {
            Node::Leaf { counts } => OracleTree::Leaf(counts),
            Node::Split {
                feature,
                absent,
                present,
            } => OracleTree::Split {
                feature,
                absent: Box::new(go(tree, absent as usize)),
                present: Box::new(go(tree, present as usize)),
            },
        }
    }
    go(tree, 0)
}

/// Random two-class dataset with at most `max_n` rows and `n_features`
/// binary features; `None` when the draw came out single-class.
pub fn random_dataset(rng: &mut Xoshiro256, max_n: usize, n_features: u32) -> Option<Vec<Row>> {
    let n = 2 + rng.index(max_n - 1);
    let data: Vec<Row> = (0..n)
        .map(|_| {
            let feats = (0..n_features).filter(|_| rng.below(2) == 1).collect();
            (feats, Label::from_bool(rng.below(2) == 1))
        })
        .collect();
    let pos = data.iter().filter(|d| d.1 == Label::TrueMention).count();
    (pos > 0 && pos < n).then_some(data)
}

pub fn train_instances(data: &[Row]) -> Vec<TrainInstance> {
    data.iter()
        .map(|(f, l)| TrainInstance {
            features: FeatureVector::from_ids(f.clone()),
            label: *l,
            cui: "C0004096".parse().unwrap(),
            chapter: "X".parse().unwrap(),
        })
        .collect()
}

// ---------------------------------------------------------------- context

pub struct NegationCase {
    pub sentence: String,
    pub target: String,
    pub negated: bool,
    pub temporality: comorbid::context::Temporality,
}

pub fn negation_fixture() -> Vec<NegationCase> {
    let text = std::fs::read_to_string(fixture("negation.tsv")).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            assert_eq!(cols.len(), 4, "bad fixture line {l:?}");
            NegationCase {
                sentence: cols[0].to_string(),
                target: cols[1].to_string(),
                negated: cols[2].parse().unwrap(),
                temporality: cols[3].parse().unwrap(),
            }
        })
        .collect()
}

/// Runs attribution for the first occurrence of the target in the sentence.
pub fn attribute_case(case: &NegationCase) -> (bool, comorbid::context::Temporality) {
    use comorbid::context::{detect_negation_span, detect_temporality_span, TriggerSet};
    use comorbid::textproc::{tokenize, Sentence};
    let text = &case.sentence;
    let s = Sentence::new(text, 0, 0, text.chars().count()).unwrap();
    let toks = tokenize(text, &s);
    let byte = text.find(&case.target).expect("target in sentence");
    let start = text[..byte].chars().count();
    let end = start + case.target.chars().count();
    let a = toks
        .iter()
        .position(|t| t.start == start)
        .expect("target starts a token");
    let b = toks.iter().position(|t| t.end == end).expect("target ends a token");
    let triggers = TriggerSet::bundled();
    let negated = detect_negation_span(a..b + 1, &toks, triggers).0;
    let temporality = detect_temporality_span(a..b + 1, &toks, triggers).0;
    (negated, temporality)
}
