mod common;

use common::fixture;
use comorbid::context::TriggerSet;
use comorbid::interface::{ingest_corpus, run_extract, Extractor};
use comorbid::matcher::build_index;
use comorbid::terminology::{load_lexicon, load_mapping};

fn extractor() -> Extractor {
    let mapping = load_mapping(fixture("small/mapping.csv")).unwrap();
    let lexicon = load_lexicon(fixture("small/lexicon.tsv"), &mapping).unwrap();
    Extractor::new(build_index(&lexicon).unwrap(), TriggerSet::bundled().clone())
}

#[test]
fn small_corpus_mentions_and_attributes() {
    let corpus = ingest_corpus(fixture("small/corpus.jsonl"), None).unwrap();
    assert_eq!(corpus.len(), 5);
    let got: Vec<String> = run_extract(&corpus, &extractor())
        .iter()
        .map(|m| {
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                m.doc_id, m.start, m.end, m.cui, m.matched_text, m.negated, m.temporality
            )
        })
        .collect();
    let want: Vec<String> = std::fs::read_to_string(fixture("small/expected_mentions.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect();
    assert_eq!(got, want);
}

#[test]
fn offsets_index_the_document_text() {
    let corpus = ingest_corpus(fixture("small/corpus.jsonl"), None).unwrap();
    for m in run_extract(&corpus, &extractor()) {
        let doc = corpus.documents.iter().find(|d| d.doc_id == m.doc_id).unwrap();
        let span: String = doc.text.chars().skip(m.start).take(m.end - m.start).collect();
        assert_eq!(span, m.matched_text);
        assert_eq!(
            m.relevant,
            !m.negated && m.temporality == comorbid::context::Temporality::Recent
        );
    }
}
