use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{Corpus, Document};
use crate::annotation::MentionRef;
use crate::context::{attribute, is_relevant, Temporality, TriggerSet};
use crate::filtermodel::{context_keys, ForestModel};
use crate::matcher::{find_mentions, MatchIndex, Mention};
use crate::terminology::{ChapterId, Cui, IcdCode};
use crate::textproc::{tokenize, Segmenter, Sentence, Token};

/// One line of the mentions dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub doc_id: String,
    pub cui: Cui,
    pub icd_code: IcdCode,
    pub chapter: ChapterId,
    pub start: usize,
    pub end: usize,
    pub matched_text: String,
    pub sentence_index: usize,
    pub negated: bool,
    pub temporality: Temporality,
    pub relevant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_score: Option<f64>,
}

impl MentionRecord {
    pub fn from_mention(m: &Mention) -> Self {
        MentionRecord {
            doc_id: m.doc_id.clone(),
            cui: m.cui,
            icd_code: m.icd_code,
            chapter: m.chapter,
            start: m.start,
            end: m.end,
            matched_text: m.matched_text.clone(),
            sentence_index: m.sentence_index,
            negated: m.attributes.negated,
            temporality: m.attributes.temporality,
            relevant: is_relevant(&m.attributes),
            filter_score: m.filter_score,
        }
    }

    pub fn mention_ref(&self) -> MentionRef {
        MentionRef {
            doc_id: self.doc_id.clone(),
            start: self.start,
            end: self.end,
            cui: self.cui,
        }
    }
}

/// A processed document: sentences, their tokens and attributed mentions.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub sentences: Vec<Sentence>,
    pub tokens: Vec<Vec<Token>>,
    pub mentions: Vec<Mention>,
}

/// Segment → tokenize → match → attribute, for one document at a time.
#[derive(Debug, Clone)]
pub struct Extractor {
    index: MatchIndex,
    triggers: TriggerSet,
    segmenter: Segmenter,
}

impl Extractor {
    pub fn new(index: MatchIndex, triggers: TriggerSet) -> Self {
        Extractor {
            index,
            triggers,
            segmenter: Segmenter::default(),
        }
    }

    pub fn with_segmenter(mut self, segmenter: Segmenter) -> Self {
        self.segmenter = segmenter;
        self
    }

    pub fn index(&self) -> &MatchIndex {
        &self.index
    }

    pub fn analyze(&self, doc: &Document) -> Analysis {
        let sentences = self.segmenter.segment(&doc.text);
        let tokens: Vec<Vec<Token>> = sentences.iter().map(|s| tokenize(&doc.text, s)).collect();
        let mut mentions = find_mentions(doc, &self.index, &sentences, &tokens);
        for m in &mut mentions {
            let pos = sentences
                .iter()
                .position(|s| s.index == m.sentence_index)
                .expect("mention sentence exists");
            m.attributes = attribute(m, &tokens[pos], &self.triggers);
        }
        Analysis {
            sentences,
            tokens,
            mentions,
        }
    }

    pub fn extract(&self, doc: &Document) -> Vec<MentionRecord> {
        self.analyze(doc)
            .mentions
            .iter()
            .map(MentionRecord::from_mention)
            .collect()
    }
}

/// Extracts every document in parallel. Output is sorted by
/// `(doc_id, start)` whatever the scheduling.
pub fn run_extract(corpus: &Corpus, extractor: &Extractor) -> Vec<MentionRecord> {
    let mut out: Vec<MentionRecord> = corpus
        .documents
        .par_iter()
        .flat_map_iter(|d| extractor.extract(d))
        .collect();
    sort_records(&mut out);
    out
}

/// Single-threaded [`run_extract`].
pub fn run_extract_serial(corpus: &Corpus, extractor: &Extractor) -> Vec<MentionRecord> {
    let mut out: Vec<MentionRecord> = corpus.documents.iter().flat_map(|d| extractor.extract(d)).collect();
    sort_records(&mut out);
    out
}

fn sort_records(records: &mut [MentionRecord]) {
    records.sort_by(|a, b| (&a.doc_id, a.start, a.end).cmp(&(&b.doc_id, b.start, b.end)));
}

/// Groups a sorted dump by document.
pub fn by_document(records: &[MentionRecord]) -> BTreeMap<&str, Vec<&MentionRecord>> {
    let mut out: BTreeMap<&str, Vec<&MentionRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.doc_id.as_str()).or_default().push(r);
    }
    out
}

/// Sets `filter_score` on every mention whose condition has a model.
pub fn apply_models(records: &mut [MentionRecord], models: &BTreeMap<Cui, ForestModel>) {
    let contexts: Vec<_> = {
        let docs = by_document(records);
        records
            .iter()
            .map(|r| {
                context_keys(
                    r.sentence_index,
                    docs[r.doc_id.as_str()].iter().map(|o| (o.sentence_index, o.cui)),
                )
            })
            .collect()
    };
    for (r, ctx) in records.iter_mut().zip(contexts) {
        if let Some(model) = models.get(&r.cui) {
            r.filter_score = Some(model.predict(&model.vocab.encode(&ctx)).score);
        }
    }
}
