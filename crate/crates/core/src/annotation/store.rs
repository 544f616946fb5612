use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{parse_jsonl, AnnotationRecord, MentionRef};
use crate::error::{Error, Result};
use crate::terminology::ChapterId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    /// Version of the stored record after the write (first write is 1).
    pub version: u64,
    /// True when no record existed for this (mention, annotator).
    pub created: bool,
}

#[derive(Serialize, Deserialize)]
struct LogLine {
    #[serde(flatten)]
    record: AnnotationRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<u64>,
}

#[derive(Debug, Clone)]
struct Stored {
    record: AnnotationRecord,
    version: u64,
}

/// Annotation verdicts keyed by (mention, annotator), with an optional
/// append-only JSONL log. Every accepted write is appended; [`compact`]
/// rewrites the log with only the current records.
///
/// Writers must be serialized by the caller (the service holds the store
/// behind a lock).
///
/// [`compact`]: AnnotationStore::compact
#[derive(Debug, Default)]
pub struct AnnotationStore {
    /// Known mentions in task order, with their chapter.
    mentions: Vec<(MentionRef, ChapterId)>,
    mention_pos: HashMap<MentionRef, usize>,
    records: BTreeMap<(MentionRef, String), Stored>,
    log_path: Option<PathBuf>,
}

impl AnnotationStore {
    /// An in-memory store over the given mentions (task order = slice order).
    pub fn new(mentions: impl IntoIterator<Item = (MentionRef, ChapterId)>) -> Self {
        let mut store = AnnotationStore::default();
        for (m, ch) in mentions {
            if !store.mention_pos.contains_key(&m) {
                store.mention_pos.insert(m.clone(), store.mentions.len());
                store.mentions.push((m, ch));
            }
        }
        store
    }

    /// Opens (or creates) a log-backed store and replays the existing log.
    pub fn open(mentions: impl IntoIterator<Item = (MentionRef, ChapterId)>, log: impl AsRef<Path>) -> Result<Self> {
        let mut store = Self::new(mentions);
        let path = log.as_ref().to_path_buf();
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let lines: Vec<LogLine> = parse_jsonl(BufReader::new(file), &path.display().to_string())?;
            for line in lines {
                store.apply(line.record, None, line.version)?;
            }
        }
        store.log_path = Some(path);
        Ok(store)
    }

    pub fn mentions(&self) -> &[(MentionRef, ChapterId)] {
        &self.mentions
    }

    pub fn contains_mention(&self, m: &MentionRef) -> bool {
        self.mention_pos.contains_key(m)
    }

    pub fn chapter_of(&self, m: &MentionRef) -> Option<ChapterId> {
        self.mention_pos.get(m).map(|&i| self.mentions[i].1)
    }

    /// Number of stored (mention, annotator) records.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Current version of the record, 0 if none exists.
    pub fn version(&self, mention: &MentionRef, annotator: &str) -> u64 {
        self.records
            .get(&(mention.clone(), annotator.to_string()))
            .map_or(0, |s| s.version)
    }

    pub fn get(&self, mention: &MentionRef, annotator: &str) -> Option<&AnnotationRecord> {
        self.records
            .get(&(mention.clone(), annotator.to_string()))
            .map(|s| &s.record)
    }

    /// Upsert, last write wins.
    pub fn record_annotation(&mut self, record: AnnotationRecord) -> Result<Ack> {
        self.write(record, None)
    }

    /// Upsert guarded by the version the caller last saw (0 for a new
    /// record). A stale version is rejected with [`Error::Conflict`].
    pub fn record_versioned(&mut self, record: AnnotationRecord, expected_version: u64) -> Result<Ack> {
        self.write(record, Some(expected_version))
    }

    fn write(&mut self, record: AnnotationRecord, expected: Option<u64>) -> Result<Ack> {
        let ack = self.apply(record.clone(), expected, None)?;
        if let Some(path) = &self.log_path {
            let line = LogLine {
                record,
                version: Some(ack.version),
            };
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            let mut buf = serde_json::to_vec(&line).expect("record serializes");
            buf.push(b'\n');
            f.write_all(&buf).map_err(|e| Error::io(path, e))?;
        }
        Ok(ack)
    }

    fn apply(&mut self, record: AnnotationRecord, expected: Option<u64>, logged_version: Option<u64>) -> Result<Ack> {
        if !self.contains_mention(&record.mention) {
            return Err(Error::UnknownMention(record.mention.to_string()));
        }
        let key = (record.mention.clone(), record.annotator_id.clone());
        let current = self.records.get(&key).map_or(0, |s| s.version);
        if let Some(expected) = expected {
            if expected != current {
                return Err(Error::Conflict { expected, current });
            }
        }
        let version = logged_version.unwrap_or(current + 1).max(current + 1);
        self.records.insert(key, Stored { record, version });
        Ok(Ack {
            version,
            created: current == 0,
        })
    }

    /// All current records, ordered by mention then annotator.
    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.records.values().map(|s| s.record.clone()).collect()
    }

    pub fn annotated_by(&self, annotator: &str) -> usize {
        self.records.keys().filter(|(_, a)| a == annotator).count()
    }

    /// First mention in task order this annotator has not judged.
    pub fn next_task(&self, annotator: &str) -> Option<&(MentionRef, ChapterId)> {
        self.mentions
            .iter()
            .find(|(m, _)| !self.records.contains_key(&(m.clone(), annotator.to_string())))
    }

    /// Rewrites the log so it holds exactly one line per current record.
    pub fn compact(&self) -> Result<()> {
        let Some(path) = &self.log_path else {
            return Ok(());
        };
        let tmp = path.with_extension("compact.tmp");
        let mut buf = Vec::new();
        for s in self.records.values() {
            let line = LogLine {
                record: s.record.clone(),
                version: Some(s.version),
            };
            serde_json::to_writer(&mut buf, &line).expect("record serializes");
            buf.push(b'\n');
        }
        std::fs::write(&tmp, &buf).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}
