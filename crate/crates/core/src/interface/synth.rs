//! Seeded synthetic corpus with planted condition mentions, known labels
//! and two simulated annotators.
//!
//! Every target mention sits in a sentence with one "companion" concept.
//! For separable conditions the companion decides the label (one concept
//! for true mentions, another for false ones); for noisy conditions it is
//! drawn independently of the label.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::corpus::Document;
use crate::annotation::{write_jsonl, AnnotationRecord, MentionRef};
use crate::context::Temporality;
use crate::error::{Error, Result};
use crate::filtermodel::Label;
use crate::rng::Xoshiro256;
use crate::terminology::{chapter_of, ChapterId, Cui, IcdCode};

struct Concept {
    cui: &'static str,
    code: &'static str,
    preferred: &'static str,
    synonyms: &'static [&'static str],
}

struct Target {
    concept: Concept,
    separable: bool,
    /// Percent of planted mentions that are true mentions.
    true_pct: u64,
    /// Per-mille chance that the second annotator flips `correct`.
    flip_permille: u64,
}

const fn c(
    cui: &'static str,
    code: &'static str,
    preferred: &'static str,
    synonyms: &'static [&'static str],
) -> Concept {
    Concept {
        cui,
        code,
        preferred,
        synonyms,
    }
}

const TARGETS: [Target; 12] = [
    Target {
        concept: c("C0008354", "A00", "Cholera", &["cholera"]),
        separable: true,
        true_pct: 60,
        flip_permille: 60,
    },
    Target {
        concept: c(
            "C0006142",
            "C50",
            "Malignant neoplasm of breast",
            &["breast cancer", "carcinoma of breast"],
        ),
        separable: true,
        true_pct: 65,
        flip_permille: 90,
    },
    Target {
        concept: c(
            "C0162316",
            "D50",
            "Iron deficiency anaemia",
            &["iron deficiency anaemia", "iron deficiency anemia"],
        ),
        separable: false,
        true_pct: 60,
        flip_permille: 120,
    },
    Target {
        concept: c(
            "C0011860",
            "E11",
            "Type 2 diabetes mellitus",
            &["type 2 diabetes", "t2dm", "diabetes mellitus type 2"],
        ),
        separable: true,
        true_pct: 70,
        flip_permille: 40,
    },
    Target {
        concept: c("C0014544", "G40", "Epilepsy", &["epilepsy", "seizure disorder"]),
        separable: true,
        true_pct: 60,
        flip_permille: 80,
    },
    Target {
        concept: c(
            "C0020538",
            "I10",
            "Essential hypertension",
            &["hypertension", "high blood pressure"],
        ),
        separable: true,
        true_pct: 70,
        flip_permille: 50,
    },
    Target {
        concept: c(
            "C0018801",
            "I50",
            "Heart failure",
            &["heart failure", "cardiac failure"],
        ),
        separable: false,
        true_pct: 55,
        flip_permille: 100,
    },
    Target {
        concept: c("C0004096", "J45", "Asthma", &["asthma"]),
        separable: true,
        true_pct: 65,
        flip_permille: 30,
    },
    Target {
        concept: c(
            "C0017168",
            "K21",
            "Gastro-oesophageal reflux disease",
            &["reflux", "gord", "gerd"],
        ),
        separable: false,
        true_pct: 60,
        flip_permille: 150,
    },
    Target {
        concept: c("C0033860", "L40", "Psoriasis", &["psoriasis"]),
        separable: true,
        true_pct: 60,
        flip_permille: 70,
    },
    Target {
        concept: c("C0029456", "M81", "Osteoporosis", &["osteoporosis"]),
        separable: true,
        true_pct: 65,
        flip_permille: 60,
    },
    Target {
        concept: c(
            "C0042029",
            "N39",
            "Urinary tract infection",
            &["urinary tract infection", "uti"],
        ),
        separable: false,
        true_pct: 55,
        flip_permille: 110,
    },
];

const COMPANIONS: [Concept; 12] = [
    c("C0028754", "E66", "Obesity", &["obesity"]),
    c(
        "C0020473",
        "E78",
        "Hyperlipidaemia",
        &["hyperlipidaemia", "high cholesterol"],
    ),
    c("C0032285", "J18", "Pneumonia", &["pneumonia"]),
    c("C0017152", "K29", "Gastritis", &["gastritis"]),
    c("C0007642", "L03", "Cellulitis", &["cellulitis"]),
    c("C0024031", "M54", "Low back pain", &["back pain"]),
    c("C0149931", "G43", "Migraine", &["migraine"]),
    c(
        "C1561643",
        "N18",
        "Chronic kidney disease",
        &["chronic kidney disease", "ckd"],
    ),
    c("C0019693", "B20", "HIV disease", &["hiv"]),
    c(
        "C0010054",
        "I25",
        "Coronary artery disease",
        &["coronary artery disease"],
    ),
    c("C0020676", "E03", "Hypothyroidism", &["hypothyroidism"]),
    c("C0041296", "A15", "Tuberculosis", &["tuberculosis"]),
];

const RECENT: [&str; 4] = [
    "{T} is managed alongside {C}.",
    "Patient reports {T} with {C}.",
    "Ongoing {T} and {C} reviewed today.",
    "GP letter confirms {T} and {C}.",
];
const NEGATED: [&str; 2] = [
    "No evidence of {T} on assessment, {C} noted.",
    "{T} was ruled out, {C} remains.",
];
const HISTORIC: [&str; 2] = ["History of {T} noted with {C}.", "Previous {T} alongside {C}."];
const FALSE_USE: [&str; 4] = [
    "Leaflet about {T} given at the {C} clinic.",
    "Sister has {T} and {C}.",
    "Screening for {T} requested after {C} review.",
    "Discussed {T} awareness campaign, {C} follow up.",
];
const FILLER: [&str; 7] = [
    "Mood stable.",
    "Attended appointment with care coordinator.",
    "Medication reviewed with pharmacist.",
    "Sleep improved over the week.",
    "Plan to review in four weeks.",
    "Engaging well with the team.",
    "Family visited at the weekend.",
];

pub const ANNOTATORS: [&str; 2] = ["ann1", "ann2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    pub documents: usize,
    /// Keep adding documents until the corpus text reaches this many bytes.
    pub min_bytes: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            documents: 120,
            min_bytes: 0,
        }
    }
}

/// Ground truth of one planted target mention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedMention {
    #[serde(flatten)]
    pub mention: MentionRef,
    pub chapter: ChapterId,
    pub label: Label,
    pub negated: bool,
    pub temporality: Temporality,
    pub separable: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub lexicon_tsv: String,
    pub mapping_csv: String,
    pub documents: Vec<Document>,
    pub planted: Vec<PlantedMention>,
    pub annotations: Vec<AnnotationRecord>,
}

fn chance(rng: &mut Xoshiro256, per_mille: u64) -> bool {
    rng.below(1000) < per_mille
}

fn pick<'a>(rng: &mut Xoshiro256, items: &[&'a str]) -> &'a str {
    items[rng.index(items.len())]
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(f) => f.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

/// Renders a template, returning the sentence and the char offset of the
/// target term within it.
fn render(template: &str, term: &str, companion: &str) -> (String, usize) {
    let t_at = template.find("{T}").expect("template has {T}");
    let term = if t_at == 0 { capitalize(term) } else { term.to_string() };
    let companion = if template.starts_with("{C}") {
        capitalize(companion)
    } else {
        companion.to_string()
    };
    let before = &template[..t_at];
    let sentence = template.replacen("{T}", &term, 1).replacen("{C}", &companion, 1);
    (sentence, before.chars().count())
}

/// A rendered target sentence waiting for its position in the document.
struct Planned {
    target: usize,
    label: Label,
    negated: bool,
    temporality: Temporality,
    sentence: String,
    /// Char offset of the term within the sentence.
    offset: usize,
    term: &'static str,
}

pub fn generate(config: &SynthConfig) -> Result<SyntheticData> {
    let mut rng = Xoshiro256::seed_from_u64(config.seed);
    let base_date = NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date");
    let mut documents = Vec::new();
    let mut planted = Vec::new();
    let mut bytes = 0;
    let mut d = 0;
    while d < config.documents || bytes < config.min_bytes {
        let doc_id = format!("doc{d:05}");
        let mut sentences: Vec<Option<Planned>> = Vec::new();
        for _ in 0..3 + rng.below(3) {
            let ti = rng.index(TARGETS.len());
            let t = &TARGETS[ti];
            let label = Label::from_bool(chance(&mut rng, t.true_pct * 10));
            let term = pick(&mut rng, t.concept.synonyms);
            let companion = if t.separable {
                let ci = match label {
                    Label::TrueMention => ti,
                    Label::NotMention => (ti + 5) % COMPANIONS.len(),
                };
                &COMPANIONS[ci]
            } else {
                &COMPANIONS[rng.index(COMPANIONS.len())]
            };
            let comp_term = pick(&mut rng, companion.synonyms);
            let (negated, temporality, template) = match label {
                Label::NotMention => (false, Temporality::Recent, pick(&mut rng, &FALSE_USE)),
                Label::TrueMention => match rng.below(100) {
                    0..=12 => (true, Temporality::Recent, pick(&mut rng, &NEGATED)),
                    13..=24 => (false, Temporality::Historic, pick(&mut rng, &HISTORIC)),
                    _ => (false, Temporality::Recent, pick(&mut rng, &RECENT)),
                },
            };
            let (sentence, offset) = render(template, term, comp_term);
            sentences.push(Some(Planned {
                target: ti,
                label,
                negated,
                temporality,
                sentence,
                offset,
                term,
            }));
        }
        for _ in 0..2 + rng.below(3) {
            sentences.push(None);
        }
        rng.shuffle(&mut sentences);

        let mut text = String::new();
        let mut chars = 0;
        for (si, s) in sentences.into_iter().enumerate() {
            if si > 0 {
                let sep = if rng.below(4) == 0 { "\n" } else { " " };
                text.push_str(sep);
                chars += 1;
            }
            let sentence = match s {
                None => pick(&mut rng, &FILLER).to_string(),
                Some(Planned {
                    target,
                    label,
                    negated,
                    temporality,
                    sentence,
                    offset,
                    term,
                }) => {
                    let t = &TARGETS[target];
                    let start = chars + offset;
                    planted.push(PlantedMention {
                        mention: MentionRef {
                            doc_id: doc_id.clone(),
                            start,
                            end: start + term.chars().count(),
                            cui: t.concept.cui.parse()?,
                        },
                        chapter: chapter_of(t.concept.code.parse()?)?.id,
                        label,
                        negated,
                        temporality,
                        separable: t.separable,
                    });
                    sentence
                }
            };
            chars += sentence.chars().count();
            text.push_str(&sentence);
        }
        bytes += text.len();
        let date = base_date + Duration::days(rng.below(730) as i64);
        documents.push(Document::new(doc_id, format!("pat{:04}", d / 3), date, text));
        d += 1;
    }
    let annotations = simulate_annotations(&planted, config.seed)?;
    Ok(SyntheticData {
        lexicon_tsv: lexicon_tsv(),
        mapping_csv: mapping_csv()?,
        documents,
        planted,
        annotations,
    })
}

fn all_concepts() -> impl Iterator<Item = &'static Concept> {
    TARGETS.iter().map(|t| &t.concept).chain(COMPANIONS.iter())
}

fn lexicon_tsv() -> String {
    let mut s = String::from("cui\tpreferred_term\tsynonyms\ticd_code\n");
    for c in all_concepts() {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", c.cui, c.preferred, c.synonyms.join("|"), c.code);
    }
    s
}

fn mapping_csv() -> Result<String> {
    let mut rows = Vec::new();
    for c in all_concepts() {
        let code: IcdCode = c.code.parse()?;
        rows.push((code, chapter_of(code)?.id, c.cui));
    }
    rows.sort();
    let mut s = String::from("icd_code,chapter,cui\n");
    for (code, ch, cui) in rows {
        let _ = writeln!(s, "{code},{ch},{cui}");
    }
    Ok(s)
}

/// The first annotator records the truth; the second flips `correct` at the
/// condition's rate. Attributes are only marked on mentions judged correct.
fn simulate_annotations(planted: &[PlantedMention], seed: u64) -> Result<Vec<AnnotationRecord>> {
    let mut rng = Xoshiro256::seed_from_u64(seed ^ 0xA11_0CA7E);
    let base: DateTime<Utc> = DateTime::parse_from_rfc3339("2021-01-01T09:00:00Z")
        .map_err(|e| Error::Format(e.to_string()))?
        .with_timezone(&Utc);
    let mut out = Vec::new();
    for (i, p) in planted.iter().enumerate() {
        let target = TARGETS
            .iter()
            .find(|t| t.concept.cui == p.mention.cui.to_string())
            .expect("planted target");
        let truth = p.label == Label::TrueMention;
        for (a, annotator) in ANNOTATORS.iter().enumerate() {
            let correct = if a == 1 && chance(&mut rng, target.flip_permille) {
                !truth
            } else {
                truth
            };
            let (negated, temporality) = if correct && truth {
                (p.negated, p.temporality)
            } else {
                (false, Temporality::Recent)
            };
            out.push(AnnotationRecord {
                mention: p.mention.clone(),
                annotator_id: annotator.to_string(),
                correct,
                negated,
                temporality,
                timestamp: base + Duration::seconds((2 * i + a) as i64 * 30),
            });
        }
    }
    Ok(out)
}

/// Writes `corpus.jsonl`, `lexicon.tsv`, `mapping.csv`,
/// `annotations.jsonl`, `planted.jsonl` and a `config.toml` that points at
/// them.
pub fn write_synthetic(data: &SyntheticData, dir: impl AsRef<Path>, seed: u64) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, content: &str| {
        let p = dir.join(name);
        std::fs::write(&p, content).map_err(|e| Error::io(&p, e))
    };
    write("lexicon.tsv", &data.lexicon_tsv)?;
    write("mapping.csv", &data.mapping_csv)?;
    write_jsonl(dir.join("corpus.jsonl"), &data.documents)?;
    write_jsonl(dir.join("annotations.jsonl"), &data.annotations)?;
    write_jsonl(dir.join("planted.jsonl"), &data.planted)?;
    write(
        "config.toml",
        &format!(
            "lexicon = \"lexicon.tsv\"\nmapping = \"mapping.csv\"\ncorpus = \"corpus.jsonl\"\n\
             annotations = \"annotations.jsonl\"\nmentions = \"mentions.jsonl\"\ngold = \"gold.jsonl\"\n\
             model_dir = \"models\"\nreport = \"report\"\nseed = {seed}\nk = 10\n"
        ),
    )
}

/// CUIs of the conditions whose label is decided by context.
pub fn separable_conditions() -> Vec<Cui> {
    TARGETS
        .iter()
        .filter(|t| t.separable)
        .map(|t| t.concept.cui.parse().expect("valid CUI"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn planted_spans_match_text() {
        let data = generate(&SynthConfig::default()).unwrap();
        for p in &data.planted {
            let doc = data.documents.iter().find(|d| d.doc_id == p.mention.doc_id).unwrap();
            let span: String = doc
                .text
                .chars()
                .skip(p.mention.start)
                .take(p.mention.end - p.mention.start)
                .collect();
            let target = TARGETS
                .iter()
                .find(|t| t.concept.cui == p.mention.cui.to_string())
                .unwrap();
            assert!(
                target.concept.synonyms.iter().any(|s| span.eq_ignore_ascii_case(s)),
                "{span:?} in {:?}",
                doc.text
            );
        }
    }

    #[test]
    fn coverage() {
        let data = generate(&SynthConfig::default()).unwrap();
        assert!(data.planted.len() >= 300);
        let cuis: BTreeSet<_> = data.planted.iter().map(|p| p.mention.cui).collect();
        let chapters: BTreeSet<_> = data.planted.iter().map(|p| p.chapter).collect();
        assert!(cuis.len() >= 10 && chapters.len() >= 5);
        assert_eq!(data.annotations.len(), 2 * data.planted.len());
    }

    #[test]
    fn seeded() {
        let a = generate(&SynthConfig::default()).unwrap();
        let b = generate(&SynthConfig::default()).unwrap();
        assert_eq!(a.documents, b.documents);
        let c = generate(&SynthConfig {
            seed: 7,
            ..Default::default()
        })
        .unwrap();
        assert_ne!(a.documents, c.documents);
    }

    #[test]
    fn min_bytes_grows_corpus() {
        let data = generate(&SynthConfig {
            documents: 1,
            min_bytes: 20_000,
            seed: 1,
        })
        .unwrap();
        assert!(data.documents.iter().map(|d| d.text.len()).sum::<usize>() >= 20_000);
    }
}
