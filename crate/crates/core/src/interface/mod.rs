//! Corpus ingestion, pipeline orchestration, the annotation service and the
//! command-line surface.

pub mod cli;
mod config;
mod corpus;
mod dataset;
mod pipeline;
pub mod service;
pub mod synth;

pub use config::{PipelineConfig, CONFIG_ENV, DEFAULT_PORT, DEFAULT_SEED, PORT_ENV};
pub use corpus::{ingest_corpus, parse_corpus, write_corpus, CohortFilter, Corpus, Document};
pub use dataset::{eval_instances, train_models, SkippedModel};
pub use pipeline::{apply_models, by_document, run_extract, run_extract_serial, Analysis, Extractor, MentionRecord};
