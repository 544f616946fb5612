//! ICD-10 codes, chapters, the ICD → CUI mapping and the synonym lexicon.

mod chapters;
mod codes;
mod lexicon;
mod mapping;
pub mod sparql;

pub use chapters::{chapter_of, chapter_table, Chapter, ChapterTable, CHAPTER_TABLE_VERSION};
pub use codes::{ChapterId, Cui, IcdCode};
pub use lexicon::{load_lexicon, parse_lexicon, Lexicon, LexiconEntry};
pub use mapping::{load_mapping, parse_mapping, IcdMapping, MappingEntry};
pub use sparql::{build_sparql_query, fetch_mappings, FetchOutcome, HttpTransport, SparqlQuery, Transport};
