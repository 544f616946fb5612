//! Extraction of physical-health condition mentions from clinical notes.
//!
//! The pipeline runs in stages that mirror the modules of this crate:
//!
//! * [`terminology`] loads the ICD-10 → CUI mapping and the synonym lexicon.
//! * [`textproc`] segments and tokenizes note text with exact character offsets.
//! * [`matcher`] finds lexicon synonyms in tokenized text.
//! * [`context`] attributes negation and temporality to each mention.
//! * [`filtermodel`] trains and applies per-condition random forests over
//!   bag-of-CUI context features.
//! * [`annotation`] stores annotator verdicts, builds the gold standard and
//!   computes Cohen's κ.
//! * [`evaluation`] runs stratified k-fold cross-validation and reports
//!   per-chapter precision, recall and F1.
//! * [`interface`] ties everything together: corpus ingestion, the extraction
//!   pipeline, configuration, the synthetic corpus generator and the
//!   annotation service.

pub mod annotation;
pub mod context;
pub mod error;
pub mod evaluation;
pub mod filtermodel;
pub mod interface;
pub mod matcher;
pub mod rng;
pub mod terminology;
pub mod textproc;

pub use error::{Error, Result};
