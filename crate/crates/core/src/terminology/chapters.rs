use std::sync::OnceLock;

use super::codes::{ChapterId, IcdCode};
use crate::error::{Error, Result};

pub const CHAPTER_TABLE_VERSION: &str = "2019.1";

const BUNDLED: &str = include_str!("../../data/icd10_chapters.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chapter {
    pub id: ChapterId,
    pub title: String,
    /// Inclusive range.
    pub first: IcdCode,
    pub last: IcdCode,
}

impl Chapter {
    pub fn contains(&self, code: IcdCode) -> bool {
        self.first <= code && code <= self.last
    }
}

#[derive(Debug, Clone)]
pub struct ChapterTable {
    chapters: Vec<Chapter>,
}

impl ChapterTable {
    /// Parses the tab-separated chapter fixture. Lines starting with `#` are
    /// comments. Ranges must not overlap.
    pub fn parse(text: &str) -> Result<Self> {
        let mut chapters = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::parse("chapter table", i + 1, "expected 4 tab-separated columns"));
            }
            let id: ChapterId = cols[0]
                .parse()
                .map_err(|e: Error| Error::parse("chapter table", i + 1, e.to_string()))?;
            let first: IcdCode = cols[1]
                .parse()
                .map_err(|e: Error| Error::parse("chapter table", i + 1, e.to_string()))?;
            let last: IcdCode = cols[2]
                .parse()
                .map_err(|e: Error| Error::parse("chapter table", i + 1, e.to_string()))?;
            if first > last {
                return Err(Error::parse("chapter table", i + 1, "range start after range end"));
            }
            chapters.push(Chapter {
                id,
                title: cols[3].to_string(),
                first,
                last,
            });
        }
        let mut sorted: Vec<&Chapter> = chapters.iter().collect();
        sorted.sort_by_key(|c| c.first);
        for pair in sorted.windows(2) {
            if pair[1].first <= pair[0].last {
                return Err(Error::Validation(format!(
                    "chapter ranges {} and {} overlap",
                    pair[0].id, pair[1].id
                )));
            }
        }
        Ok(ChapterTable { chapters })
    }

    pub fn chapters(&self) -> &[Chapter] {
        &self.chapters
    }

    pub fn get(&self, id: ChapterId) -> Option<&Chapter> {
        self.chapters.iter().find(|c| c.id == id)
    }

    /// Looks up the chapter containing `code`, ignoring the pipeline scope.
    pub fn lookup(&self, code: IcdCode) -> Option<&Chapter> {
        self.chapters.iter().find(|c| c.contains(code))
    }
}

/// The bundled chapter table.
pub fn chapter_table() -> &'static ChapterTable {
    static TABLE: OnceLock<ChapterTable> = OnceLock::new();
    TABLE.get_or_init(|| ChapterTable::parse(BUNDLED).expect("bundled chapter table is valid"))
}

/// The pipeline covers physical diseases, A00 through N99.
pub fn in_scope(code: IcdCode) -> bool {
    code.letter() <= 'N'
}

/// Resolves the chapter of an in-scope code.
pub fn chapter_of(code: IcdCode) -> Result<&'static Chapter> {
    if !in_scope(code) {
        return Err(Error::OutOfScope(code.to_string()));
    }
    chapter_table()
        .lookup(code)
        .ok_or_else(|| Error::OutOfScope(code.to_string()))
}
