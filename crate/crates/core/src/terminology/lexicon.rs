use std::collections::HashMap;
use std::path::Path;

use super::codes::{ChapterId, Cui, IcdCode};
use super::mapping::IcdMapping;
use crate::error::{Error, Result};
use crate::textproc::normalize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub cui: Cui,
    pub preferred_term: String,
    /// Normalized synonym strings.
    pub synonyms: Vec<String>,
    pub icd_code: IcdCode,
    pub chapter: ChapterId,
}

/// Synonym lexicon keyed by CUI. Entry order follows the source file.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    by_cui: HashMap<Cui, usize>,
}

impl Lexicon {
    /// Builds a lexicon from already-constructed entries. Checks CUI
    /// uniqueness and that every entry has at least one synonym; synonyms are
    /// taken as given.
    pub fn from_entries(entries: Vec<LexiconEntry>) -> Result<Self> {
        let mut by_cui = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.synonyms.is_empty() {
                return Err(Error::Validation(format!("{} has no synonyms", e.cui)));
            }
            if by_cui.insert(e.cui, i).is_some() {
                return Err(Error::DuplicateCui(e.cui.to_string()));
            }
        }
        Ok(Lexicon { entries, by_cui })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn get(&self, cui: Cui) -> Option<&LexiconEntry> {
        self.by_cui.get(&cui).map(|&i| &self.entries[i])
    }

    pub fn chapter_of_cui(&self, cui: Cui) -> Option<ChapterId> {
        self.get(cui).map(|e| e.chapter)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_lexicon(path: impl AsRef<Path>, mapping: &IcdMapping) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&text, &path.display().to_string(), mapping)
}

/// Parses the 4-column lexicon TSV:
/// `cui <TAB> preferred_term <TAB> syn1|syn2|... <TAB> icd_code`.
///
/// Blank lines and `#` comments are skipped, as is a first line whose first
/// column is literally `cui`.
pub fn parse_lexicon(text: &str, source_name: &str, mapping: &IcdMapping) -> Result<Lexicon> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if entries.is_empty() && cols.first().map(|c| c.trim()) == Some("cui") {
            continue;
        }
        if cols.len() != 4 {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let cui: Cui = cols[0]
            .trim()
            .parse()
            .map_err(|e: Error| Error::parse(source_name, line_no, e.to_string()))?;
        let icd_code: IcdCode = cols[3]
            .trim()
            .parse()
            .map_err(|e: Error| Error::parse(source_name, line_no, e.to_string()))?;
        let chapter = mapping.get(icd_code).map(|m| m.chapter).ok_or_else(|| {
            Error::Validation(format!(
                "{source_name}:{line_no}: {cui} references ICD code {icd_code} which is not in the mapping"
            ))
        })?;
        let mut synonyms = Vec::new();
        for raw_syn in cols[2].split('|').filter(|s| !s.trim().is_empty()) {
            let syn = normalize(raw_syn);
            if syn.is_empty() {
                return Err(Error::Validation(format!(
                    "{source_name}:{line_no}: synonym {raw_syn:?} of {cui} is empty after normalization"
                )));
            }
            if !synonyms.contains(&syn) {
                synonyms.push(syn);
            }
        }
        if synonyms.is_empty() {
            return Err(Error::Validation(format!(
                "{source_name}:{line_no}: {cui} has an empty synonym list"
            )));
        }
        entries.push(LexiconEntry {
            cui,
            preferred_term: cols[1].trim().to_string(),
            synonyms,
            icd_code,
            chapter,
        });
    }
    Lexicon::from_entries(entries)
}
