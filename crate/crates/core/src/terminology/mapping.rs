use std::collections::BTreeMap;
use std::path::Path;

use super::chapters::chapter_of;
use super::codes::{ChapterId, Cui, IcdCode};
use crate::error::{Error, Result};

const HEADER: [&str; 3] = ["icd_code", "chapter", "cui"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappingEntry {
    pub icd_code: IcdCode,
    pub chapter: ChapterId,
    pub cui: Cui,
}

/// ICD-10 category → UMLS CUI, one CUI per code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IcdMapping {
    entries: BTreeMap<IcdCode, MappingEntry>,
}

impl IcdMapping {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry after checking the CUI is unique for the code and the
    /// chapter agrees with the bundled chapter table.
    pub fn insert(&mut self, entry: MappingEntry) -> Result<()> {
        let expected = chapter_of(entry.icd_code)?.id;
        if expected != entry.chapter {
            return Err(Error::Validation(format!(
                "{} belongs to chapter {expected}, not {}",
                entry.icd_code, entry.chapter
            )));
        }
        if self.entries.contains_key(&entry.icd_code) {
            return Err(Error::DuplicateCode(entry.icd_code.to_string()));
        }
        self.entries.insert(entry.icd_code, entry);
        Ok(())
    }

    pub fn get(&self, code: IcdCode) -> Option<&MappingEntry> {
        self.entries.get(&code)
    }

    pub fn contains(&self, code: IcdCode) -> bool {
        self.entries.contains_key(&code)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in code order.
    pub fn iter(&self) -> impl Iterator<Item = &MappingEntry> {
        self.entries.values()
    }

    /// Serializes to the mapping CSV format, sorted by code.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("icd_code,chapter,cui\n");
        for e in self.entries.values() {
            out.push_str(&format!("{},{},{}\n", e.icd_code, e.chapter, e.cui));
        }
        out
    }
}

pub fn load_mapping(path: impl AsRef<Path>) -> Result<IcdMapping> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mapping(&text, &path.display().to_string())
}

/// Parses mapping CSV text. `source_name` is used in error messages.
pub fn parse_mapping(text: &str, source_name: &str) -> Result<IcdMapping> {
    let mut mapping = IcdMapping::new();
    if text.trim().is_empty() {
        log::warn!("{source_name}: mapping file is empty");
        return Ok(mapping);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(source_name, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::parse(
            source_name,
            1,
            format!("expected header {:?}", HEADER.join(",")),
        ));
    }
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(source_name, line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != 3 {
            return Err(Error::parse(
                source_name,
                line,
                format!("expected 3 fields, found {}", row.len()),
            ));
        }
        let icd_code: IcdCode = row[0]
            .parse()
            .map_err(|e: Error| Error::parse(source_name, line, e.to_string()))?;
        let chapter: ChapterId = row[1]
            .parse()
            .map_err(|e: Error| Error::parse(source_name, line, e.to_string()))?;
        let cui: Cui = row[2].parse()?;
        mapping.insert(MappingEntry { icd_code, chapter, cui })?;
    }
    Ok(mapping)
}
