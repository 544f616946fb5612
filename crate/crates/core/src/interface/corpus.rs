use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One clinical note. Serialized as one JSON object per line with fields
/// `doc_id, patient_id, date (YYYY-MM-DD), text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub doc_id: String,
    pub patient_id: String,
    pub date: NaiveDate,
    pub text: String,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        patient_id: impl Into<String>,
        date: NaiveDate,
        text: impl Into<String>,
    ) -> Self {
        Document {
            doc_id: doc_id.into(),
            patient_id: patient_id.into(),
            date,
            text: text.into(),
        }
    }
}

/// Per-patient study window: documents dated within
/// `[index_date − 3 months, study_end]` (both ends inclusive) are kept.
/// Patients without an index date are excluded entirely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortFilter {
    index_dates: BTreeMap<String, NaiveDate>,
    study_end: NaiveDate,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexDateRow {
    patient_id: String,
    index_date: NaiveDate,
}

impl CohortFilter {
    pub const LOOKBACK_MONTHS: u32 = 3;

    pub fn new(index_dates: BTreeMap<String, NaiveDate>, study_end: NaiveDate) -> Result<Self> {
        let filter = CohortFilter { index_dates, study_end };
        for (patient, &d) in &filter.index_dates {
            if filter.window_start_for(d) >= study_end {
                return Err(Error::Validation(format!(
                    "patient {patient}: window start {} is not before study end {study_end}",
                    filter.window_start_for(d)
                )));
            }
        }
        Ok(filter)
    }

    /// Reads a CSV with header `patient_id,index_date`.
    pub fn load(path: impl AsRef<Path>, study_end: NaiveDate) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Format(format!("{other:?}")),
        })?;
        let mut dates = BTreeMap::new();
        for (i, row) in reader.deserialize::<IndexDateRow>().enumerate() {
            let row = row.map_err(|e| Error::parse(&name, i + 2, e.to_string()))?;
            if dates.insert(row.patient_id.clone(), row.index_date).is_some() {
                return Err(Error::parse(
                    &name,
                    i + 2,
                    format!("duplicate patient {}", row.patient_id),
                ));
            }
        }
        Self::new(dates, study_end)
    }

    fn window_start_for(&self, index_date: NaiveDate) -> NaiveDate {
        index_date
            .checked_sub_months(Months::new(Self::LOOKBACK_MONTHS))
            .unwrap_or(NaiveDate::MIN)
    }

    pub fn window(&self, patient_id: &str) -> Option<(NaiveDate, NaiveDate)> {
        self.index_dates
            .get(patient_id)
            .map(|&d| (self.window_start_for(d), self.study_end))
    }

    pub fn admits(&self, doc: &Document) -> bool {
        self.window(&doc.patient_id)
            .is_some_and(|(start, end)| start <= doc.date && doc.date <= end)
    }
}

/// An ingested, de-duplicated set of documents in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Documents dropped by the cohort filter.
    pub excluded: usize,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }
}

pub fn parse_corpus(reader: impl BufRead, source_name: &str, filter: Option<&CohortFilter>) -> Result<Corpus> {
    let mut seen = HashSet::new();
    let mut corpus = Corpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateDocument(format!(
                "{} ({source_name}:{})",
                doc.doc_id,
                i + 1
            )));
        }
        if filter.is_some_and(|f| !f.admits(&doc)) {
            corpus.excluded += 1;
            continue;
        }
        corpus.documents.push(doc);
    }
    Ok(corpus)
}

/// Reads a line-delimited document file.
pub fn ingest_corpus(path: impl AsRef<Path>, filter: Option<&CohortFilter>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(std::io::BufReader::new(file), &path.display().to_string(), filter)
}

pub fn write_corpus(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    crate::annotation::write_jsonl(path, docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn line(id: &str, patient: &str, date: &str) -> String {
        format!(r#"{{"doc_id":"{id}","patient_id":"{patient}","date":"{date}","text":"x"}}"#)
    }

    fn filter() -> CohortFilter {
        CohortFilter::new([("p1".to_string(), d(2020, 6, 15))].into(), d(2021, 1, 1)).unwrap()
    }

    #[test]
    fn three_docs_no_filter() {
        let text = [
            line("a", "p1", "2020-01-01"),
            line("b", "p1", "2020-01-02"),
            line("c", "p2", "2020-01-03"),
        ]
        .join("\n");
        let c = parse_corpus(text.as_bytes(), "t", None).unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn four_months_before_excluded() {
        let text = line("a", "p1", "2020-02-15");
        let c = parse_corpus(text.as_bytes(), "t", Some(&filter())).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.excluded, 1);
    }

    #[test]
    fn window_boundaries_inclusive() {
        let text = [
            line("a", "p1", "2020-03-15"),
            line("b", "p1", "2021-01-01"),
            line("c", "p1", "2021-01-02"),
        ]
        .join("\n");
        let c = parse_corpus(text.as_bytes(), "t", Some(&filter())).unwrap();
        let ids: Vec<&str> = c.documents.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn unknown_patient_excluded() {
        let c = parse_corpus(line("a", "p9", "2020-06-01").as_bytes(), "t", Some(&filter())).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = [line("a", "p1", "2020-01-01"), line("a", "p1", "2020-01-02")].join("\n");
        assert!(matches!(
            parse_corpus(text.as_bytes(), "t", None),
            Err(Error::DuplicateDocument(_))
        ));
    }

    #[test]
    fn parse_error_has_line() {
        let text = format!("{}\n{{bad", line("a", "p1", "2020-01-01"));
        match parse_corpus(text.as_bytes(), "t", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn month_end_arithmetic() {
        let f = CohortFilter::new([("p".to_string(), d(2020, 5, 31))].into(), d(2021, 1, 1)).unwrap();
        assert_eq!(f.window("p").unwrap().0, d(2020, 2, 29));
    }

    #[test]
    fn window_must_be_nonempty() {
        assert!(CohortFilter::new([("p".to_string(), d(2020, 5, 31))].into(), d(2020, 1, 1)).is_err());
    }
}
