use std::collections::{BTreeMap, HashMap};

use super::pipeline::{by_document, MentionRecord};
use crate::annotation::{GoldInstance, MentionRef};
use crate::error::{Error, Result};
use crate::evaluation::EvalInstance;
use crate::filtermodel::{context_keys, train_forest, FeatureVocab, ForestModel, ForestParams, Label, TrainInstance};
use crate::rng::mix_seed;
use crate::terminology::Cui;

/// Joins gold verdicts with the extraction dump. Each gold mention must be
/// present in the dump; its context is taken from every extracted mention
/// in the same document.
pub fn eval_instances(gold: &[GoldInstance], mentions: &[MentionRecord]) -> Result<Vec<EvalInstance>> {
    let docs = by_document(mentions);
    let index: HashMap<MentionRef, &MentionRecord> = mentions.iter().map(|m| (m.mention_ref(), m)).collect();
    gold.iter()
        .map(|g| {
            let m = index
                .get(&g.mention)
                .ok_or_else(|| Error::UnknownMention(g.mention.to_string()))?;
            let context = context_keys(
                m.sentence_index,
                docs[m.doc_id.as_str()].iter().map(|o| (o.sentence_index, o.cui)),
            );
            Ok(EvalInstance {
                cui: m.cui,
                chapter: m.chapter,
                label: g.label,
                context,
                relevant: g.is_relevant(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedModel {
    pub cui: Cui,
    pub instances: usize,
    pub reason: String,
}

/// Trains one forest per condition on all given instances. Conditions whose
/// instances are all one class are skipped. The forest of condition `c` is
/// seeded with `mix_seed([seed, c])`.
pub fn train_models(
    instances: &[EvalInstance],
    params: &ForestParams,
    seed: u64,
    include_irrelevant: bool,
) -> Result<(BTreeMap<Cui, ForestModel>, Vec<SkippedModel>)> {
    let mut by_cui: BTreeMap<Cui, Vec<&EvalInstance>> = BTreeMap::new();
    for i in instances.iter().filter(|i| include_irrelevant || i.relevant) {
        by_cui.entry(i.cui).or_default().push(i);
    }
    let mut models = BTreeMap::new();
    let mut skipped = Vec::new();
    for (cui, insts) in by_cui {
        let pos = insts.iter().filter(|i| i.label == Label::TrueMention).count();
        if pos == 0 || pos == insts.len() {
            log::warn!(
                "condition {cui}: all {} gold instances share one label; no model trained",
                insts.len()
            );
            skipped.push(SkippedModel {
                cui,
                instances: insts.len(),
                reason: "single-class".into(),
            });
            continue;
        }
        let vocab = FeatureVocab::from_key_sets(insts.iter().map(|i| &i.context));
        let data: Vec<TrainInstance> = insts
            .iter()
            .map(|i| TrainInstance {
                features: vocab.encode(&i.context),
                label: i.label,
                cui,
                chapter: i.chapter,
            })
            .collect();
        let model = train_forest(&data, &vocab, params, mix_seed(&[seed, u64::from(cui.number())]))?;
        models.insert(cui, model);
    }
    Ok((models, skipped))
}
