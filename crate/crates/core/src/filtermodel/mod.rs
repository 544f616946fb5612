//! Per-condition random forests that separate true condition mentions from
//! false positives using the concepts around each mention.

mod features;
mod forest;
mod format;

pub use features::{context_keys, encode_features, FeatureKey, FeatureVector, FeatureVocab, Slot, VocabMode};
pub use forest::{
    gini, predict, train_forest, train_forest_with, ForestModel, ForestParams, Label, MaxFeatures, Node, Prediction,
    TrainInstance, TrainOptions, TrainReport, Tree,
};
pub use format::{deserialize_model, serialize_model, FORMAT_VERSION, MAGIC};

use std::path::Path;

use crate::error::{Error, Result};

impl ForestModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serialize_model(self)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        deserialize_model(&bytes)
    }
}
