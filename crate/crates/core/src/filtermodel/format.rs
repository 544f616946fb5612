//! Single-file binary model format.
//!
//! ```text
//! magic       4 bytes  "CMRF"
//! version     u8       FORMAT_VERSION
//! cui         u32      condition CUI number
//! n_trees     u32
//! max_feat    u8 tag (0 sqrt, 1 all, 2 fixed) + u32 value
//! min_leaf    u32
//! max_depth   u32      u32::MAX = unlimited
//! bootstrap   u8
//! seed        u64
//! vocab       u32 count, then per key: u8 slot (0 same, 1 prior) + u32 cui
//! trees       u32 count, then per tree: u32 node count, then per node:
//!               u8 0 = leaf: u32 not-mention count, u32 true-mention count
//!               u8 1 = split: u32 feature, u32 absent child, u32 present child
//! checksum    32 bytes SHA-256 of everything above
//! ```
//!
//! All integers are little-endian.

use sha2::{Digest, Sha256};

use super::features::{FeatureKey, FeatureVocab, Slot};
use super::forest::{ForestModel, ForestParams, MaxFeatures, Node, Tree};
use crate::error::{Error, Result};
use crate::terminology::Cui;

pub const MAGIC: &[u8; 4] = b"CMRF";
pub const FORMAT_VERSION: u8 = 1;
const CHECKSUM_LEN: usize = 32;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn serialize_model(model: &ForestModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u8(FORMAT_VERSION);
    w.u32(model.condition_cui.number());

    let p = &model.params;
    w.u32(p.n_trees);
    match p.max_features {
        MaxFeatures::Sqrt => {
            w.u8(0);
            w.u32(0);
        }
        MaxFeatures::All => {
            w.u8(1);
            w.u32(0);
        }
        MaxFeatures::Fixed(k) => {
            w.u8(2);
            w.u32(k);
        }
    }
    w.u32(p.min_leaf);
    w.u32(p.max_depth.unwrap_or(u32::MAX));
    w.u8(u8::from(p.bootstrap));
    w.u64(model.seed);

    w.u32(model.vocab.len() as u32);
    for key in model.vocab.keys() {
        w.u8(match key.slot {
            Slot::SameSentence => 0,
            Slot::PriorSentence => 1,
        });
        w.u32(key.cui.number());
    }

    w.u32(model.trees.len() as u32);
    for tree in &model.trees {
        w.u32(tree.nodes.len() as u32);
        for node in &tree.nodes {
            match *node {
                Node::Leaf { counts } => {
                    w.u8(0);
                    w.u32(counts[0]);
                    w.u32(counts[1]);
                }
                Node::Split {
                    feature,
                    absent,
                    present,
                } => {
                    w.u8(1);
                    w.u32(feature);
                    w.u32(absent);
                    w.u32(present);
                }
            }
        }
    }
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("model truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn deserialize_model(bytes: &[u8]) -> Result<ForestModel> {
    if bytes.len() < MAGIC.len() + 1 {
        return Err(Error::Format("model truncated while reading header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::Version {
            expected: FORMAT_VERSION,
            found: bytes[4],
        });
    }
    if bytes.len() < 5 + CHECKSUM_LEN {
        return Err(Error::Format("model truncated while reading header".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);

    let mut r = Reader { buf: body, pos: 5 };
    let cui = Cui::from_number(r.u32("cui")?).map_err(|e| Error::Format(e.to_string()))?;
    let n_trees = r.u32("n_trees")?;
    let max_features = match (r.u8("max_features")?, r.u32("max_features")?) {
        (0, _) => MaxFeatures::Sqrt,
        (1, _) => MaxFeatures::All,
        (2, k) => MaxFeatures::Fixed(k),
        (t, _) => return Err(Error::Format(format!("unknown max_features tag {t}"))),
    };
    let min_leaf = r.u32("min_leaf")?;
    let max_depth = match r.u32("max_depth")? {
        u32::MAX => None,
        d => Some(d),
    };
    let bootstrap = match r.u8("bootstrap")? {
        0 => false,
        1 => true,
        b => return Err(Error::Format(format!("invalid bootstrap flag {b}"))),
    };
    let seed = r.u64("seed")?;

    let n_keys = r.u32("vocabulary size")? as usize;
    let mut keys = Vec::with_capacity(n_keys.min(body.len() / 5));
    for _ in 0..n_keys {
        let slot = match r.u8("vocabulary slot")? {
            0 => Slot::SameSentence,
            1 => Slot::PriorSentence,
            s => return Err(Error::Format(format!("invalid slot {s}"))),
        };
        let cui = Cui::from_number(r.u32("vocabulary cui")?).map_err(|e| Error::Format(e.to_string()))?;
        keys.push(FeatureKey { slot, cui });
    }
    let vocab = FeatureVocab::from_keys(keys);
    if vocab.len() != n_keys {
        return Err(Error::Format("duplicate vocabulary entries".into()));
    }

    let tree_count = r.u32("tree count")?;
    if tree_count != n_trees {
        return Err(Error::Format(format!(
            "header declares {n_trees} trees but body has {tree_count}"
        )));
    }
    let mut trees = Vec::with_capacity(tree_count as usize);
    for _ in 0..tree_count {
        let n_nodes = r.u32("node count")? as usize;
        if n_nodes == 0 {
            return Err(Error::Format("empty tree".into()));
        }
        let mut nodes = Vec::with_capacity(n_nodes.min(body.len() / 9));
        for i in 0..n_nodes {
            let node = match r.u8("node tag")? {
                0 => Node::Leaf {
                    counts: [r.u32("leaf")?, r.u32("leaf")?],
                },
                1 => {
                    let feature = r.u32("split")?;
                    let absent = r.u32("split")?;
                    let present = r.u32("split")?;
                    let child_ok = |c: u32| (c as usize) > i && (c as usize) < n_nodes;
                    if feature as usize >= n_keys || !child_ok(absent) || !child_ok(present) {
                        return Err(Error::Format(format!("invalid split node {i}")));
                    }
                    Node::Split {
                        feature,
                        absent,
                        present,
                    }
                }
                t => return Err(Error::Format(format!("unknown node tag {t}"))),
            };
            nodes.push(node);
        }
        trees.push(Tree { nodes });
    }
    if r.pos != body.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after model body",
            body.len() - r.pos
        )));
    }
    if Sha256::digest(body).as_slice() != checksum {
        return Err(Error::Format("model checksum mismatch".into()));
    }

    Ok(ForestModel {
        condition_cui: cui,
        trees,
        params: ForestParams {
            n_trees,
            max_features,
            min_leaf,
            max_depth,
            bootstrap,
        },
        vocab,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtermodel::{train_forest, FeatureVector, Label, TrainInstance};

    fn model() -> ForestModel {
        let keys: Vec<FeatureKey> = (1..=6)
            .map(|i| {
                let cui = Cui::from_number(i * 1000).unwrap();
                if i % 2 == 0 {
                    FeatureKey::same(cui)
                } else {
                    FeatureKey::prior(cui)
                }
            })
            .collect();
        let vocab = FeatureVocab::from_keys(keys);
        let data: Vec<TrainInstance> = (0..24u32)
            .map(|i| TrainInstance {
                features: FeatureVector::from_ids(vec![i % 6, (i * 7) % 6]),
                label: if i % 3 == 0 {
                    Label::TrueMention
                } else {
                    Label::NotMention
                },
                cui: "C0004096".parse().unwrap(),
                chapter: "X".parse().unwrap(),
            })
            .collect();
        let params = ForestParams {
            n_trees: 9,
            max_depth: Some(5),
            ..Default::default()
        };
        train_forest(&data, &vocab, &params, 1234).unwrap()
    }

    #[test]
    fn round_trip() {
        let m = model();
        let bytes = serialize_model(&m);
        assert_eq!(deserialize_model(&bytes).unwrap(), m);
        assert_eq!(&bytes[..4], MAGIC);
    }

    #[test]
    fn truncated_payload() {
        let bytes = serialize_model(&model());
        for cut in [0, 3, 5, 20, bytes.len() / 2, bytes.len() - 1] {
            let err = deserialize_model(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "cut {cut}: {err:?}");
        }
    }

    #[test]
    fn unknown_version() {
        let mut bytes = serialize_model(&model());
        bytes[4] = 7;
        let err = deserialize_model(&bytes).unwrap_err();
        assert!(matches!(err, Error::Version { expected: 1, found: 7 }));
        let msg = err.to_string();
        assert!(msg.contains('1') && msg.contains('7'));
    }

    #[test]
    fn corruption_detected() {
        let bytes = serialize_model(&model());
        for pos in (5..bytes.len()).step_by(13) {
            let mut b = bytes.clone();
            b[pos] ^= 0x5a;
            assert!(deserialize_model(&b).is_err(), "flip at {pos}");
        }
    }
}
