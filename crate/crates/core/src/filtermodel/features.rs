use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::matcher::Mention;
use crate::terminology::Cui;

/// Where a co-occurring concept was seen relative to the target mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    SameSentence,
    PriorSentence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureKey {
    pub slot: Slot,
    pub cui: Cui,
}

impl FeatureKey {
    pub fn same(cui: Cui) -> Self {
        FeatureKey {
            slot: Slot::SameSentence,
            cui,
        }
    }

    pub fn prior(cui: Cui) -> Self {
        FeatureKey {
            slot: Slot::PriorSentence,
            cui,
        }
    }
}

/// Bag-of-CUI context of a mention: every concept mentioned in its sentence
/// (itself included) and in the sentence before.
pub fn context_keys<I>(target_sentence: usize, doc_mentions: I) -> BTreeSet<FeatureKey>
where
    I: IntoIterator<Item = (usize, Cui)>,
{
    let mut keys = BTreeSet::new();
    for (sentence, cui) in doc_mentions {
        if sentence == target_sentence {
            keys.insert(FeatureKey::same(cui));
        } else if target_sentence > 0 && sentence == target_sentence - 1 {
            keys.insert(FeatureKey::prior(cui));
        }
    }
    keys
}

/// Sorted, de-duplicated active feature ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct FeatureVector(Vec<u32>);

impl FeatureVector {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        FeatureVector(ids)
    }

    pub fn contains(&self, id: u32) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Maps `(slot, cui)` pairs to dense feature ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVocab {
    keys: Vec<FeatureKey>,
    ids: HashMap<FeatureKey, u32>,
}

impl FeatureVocab {
    /// Builds a frozen vocabulary; ids follow the sorted key order so the
    /// result does not depend on instance order.
    pub fn from_key_sets<'a, I>(sets: I) -> Self
    where
        I: IntoIterator<Item = &'a BTreeSet<FeatureKey>>,
    {
        let all: BTreeSet<FeatureKey> = sets.into_iter().flat_map(|s| s.iter().copied()).collect();
        Self::from_keys(all.into_iter().collect())
    }

    /// Uses `keys` in the given order as ids `0..n`.
    pub fn from_keys(keys: Vec<FeatureKey>) -> Self {
        let mut vocab = FeatureVocab::default();
        for k in keys {
            vocab.insert(k);
        }
        vocab
    }

    fn insert(&mut self, key: FeatureKey) -> u32 {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.keys.push(key);
        self.ids.insert(key, id);
        id
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[FeatureKey] {
        &self.keys
    }

    pub fn id(&self, key: &FeatureKey) -> Option<u32> {
        self.ids.get(key).copied()
    }

    /// Encodes against the frozen vocabulary; unknown keys are ignored.
    pub fn encode<'a, I>(&self, keys: I) -> FeatureVector
    where
        I: IntoIterator<Item = &'a FeatureKey>,
    {
        FeatureVector::from_ids(keys.into_iter().filter_map(|k| self.id(k)).collect())
    }
}

pub enum VocabMode<'a> {
    /// Unseen keys get fresh ids.
    Build(&'a mut FeatureVocab),
    /// Unseen keys are dropped.
    Frozen(&'a FeatureVocab),
}

/// Encodes the context of `mention` among all mentions of its document.
pub fn encode_features(mention: &Mention, all_doc_mentions: &[Mention], vocab: VocabMode<'_>) -> FeatureVector {
    let keys = context_keys(
        mention.sentence_index,
        all_doc_mentions
            .iter()
            .filter(|m| m.doc_id == mention.doc_id)
            .map(|m| (m.sentence_index, m.cui)),
    );
    match vocab {
        VocabMode::Build(v) => FeatureVector::from_ids(keys.iter().map(|k| v.insert(*k)).collect()),
        VocabMode::Frozen(v) => v.encode(&keys),
    }
}
