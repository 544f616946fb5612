//! Optional online path: fetch ICD-10 → CUI pairs from an ontology SPARQL
//! endpoint (e.g. BioPortal). The offline mapping CSV remains the canonical
//! input; this only produces one.

use std::collections::BTreeMap;
use std::time::Duration;

use serde_json::Value;

use super::chapters::chapter_of;
use super::codes::{Cui, IcdCode};
use super::mapping::{IcdMapping, MappingEntry};
use crate::error::{Error, Result};

pub const ENDPOINT_ENV: &str = "COMORBID_SPARQL_ENDPOINT";
pub const DEFAULT_ENDPOINT: &str = "http://sparql.bioontology.org/sparql/";
pub const DEFAULT_GRAPH: &str = "http://bioportal.bioontology.org/ontologies/ICD10";

/// Sends a query to an endpoint and returns the raw response body
/// (`application/sparql-results+json`).
pub trait Transport {
    fn execute(&self, endpoint: &str, query: &str) -> std::result::Result<Vec<u8>, String>;
}

impl<F> Transport for F
where
    F: Fn(&str, &str) -> std::result::Result<Vec<u8>, String>,
{
    fn execute(&self, endpoint: &str, query: &str) -> std::result::Result<Vec<u8>, String> {
        self(endpoint, query)
    }
}

#[derive(Debug, Clone)]
pub struct SparqlQuery {
    pub graph: String,
}

impl Default for SparqlQuery {
    fn default() -> Self {
        SparqlQuery {
            graph: DEFAULT_GRAPH.to_string(),
        }
    }
}

impl SparqlQuery {
    pub fn with_graph(graph: impl Into<String>) -> Self {
        SparqlQuery { graph: graph.into() }
    }

    /// Renders a SELECT returning `(?code, ?cui)` rows for the given codes.
    /// Duplicate codes are listed once, in first-seen order.
    pub fn build(&self, codes: &[IcdCode]) -> Result<String> {
        if codes.is_empty() {
            return Err(Error::Argument("SPARQL query needs at least one ICD code".into()));
        }
        let mut seen = Vec::with_capacity(codes.len());
        for c in codes {
            if !seen.contains(c) {
                seen.push(*c);
            }
        }
        let values: Vec<String> = seen.iter().map(|c| format!("\"{c}\"")).collect();
        Ok(format!(
            "PREFIX skos: <http://www.w3.org/2004/02/skos/core#>\n\
             PREFIX umls: <http://bioportal.bioontology.org/ontologies/umls/>\n\
             SELECT DISTINCT ?code ?cui\n\
             FROM <{graph}>\n\
             WHERE {{\n  \
               ?concept skos:notation ?code ;\n           \
                        umls:cui ?cui .\n  \
               VALUES ?code {{ {values} }}\n\
             }}\n\
             ORDER BY ?code ?cui\n",
            graph = self.graph,
            values = values.join(" "),
        ))
    }
}

pub fn build_sparql_query(codes: &[IcdCode]) -> Result<String> {
    SparqlQuery::default().build(codes)
}

#[derive(Debug, Clone, Default)]
pub struct FetchOutcome {
    pub mapping: IcdMapping,
    /// Requested codes for which the endpoint returned no CUI.
    pub misses: Vec<IcdCode>,
}

/// Queries `endpoint` through `transport` and assembles a mapping for the
/// requested codes. No retries: a transport failure is returned as
/// [`Error::Network`].
pub fn fetch_mappings(endpoint: &str, codes: &[IcdCode], transport: &dyn Transport) -> Result<FetchOutcome> {
    for &c in codes {
        chapter_of(c)?;
    }
    let query = build_sparql_query(codes)?;
    let body = transport.execute(endpoint, &query).map_err(Error::Network)?;
    let pairs = parse_bindings(&body)?;

    let mut found: BTreeMap<IcdCode, Cui> = BTreeMap::new();
    for (code, cui) in pairs {
        if !codes.contains(&code) {
            continue;
        }
        match found.get(&code) {
            Some(prev) if *prev != cui => {
                return Err(Error::Validation(format!(
                    "endpoint returned more than one CUI for {code}: {prev} and {cui}"
                )));
            }
            _ => {
                found.insert(code, cui);
            }
        }
    }

    let mut outcome = FetchOutcome::default();
    for (code, cui) in &found {
        outcome.mapping.insert(MappingEntry {
            icd_code: *code,
            chapter: chapter_of(*code)?.id,
            cui: *cui,
        })?;
    }
    for &c in codes {
        if !found.contains_key(&c) && !outcome.misses.contains(&c) {
            outcome.misses.push(c);
        }
    }
    Ok(outcome)
}

/// Extracts `(code, cui)` pairs from a SPARQL JSON results document. Code
/// values may be plain literals (`A00`) or IRIs ending in the code.
fn parse_bindings(body: &[u8]) -> Result<Vec<(IcdCode, Cui)>> {
    let doc: Value =
        serde_json::from_slice(body).map_err(|e| Error::Format(format!("endpoint response is not JSON: {e}")))?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("endpoint response has no results.bindings array".into()))?;
    let mut out = Vec::with_capacity(bindings.len());
    for b in bindings {
        let field = |name: &str| -> Result<&str> {
            b.get(name)
                .and_then(|v| v.get("value"))
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Format(format!("binding is missing ?{name}")))
        };
        let raw_code = field("code")?;
        let raw_code = raw_code.rsplit(['/', '#']).next().unwrap_or(raw_code);
        let code: IcdCode = raw_code
            .parse()
            .map_err(|_| Error::Format(format!("binding has invalid ICD code {raw_code:?}")))?;
        let raw_cui = field("cui")?;
        let cui: Cui = raw_cui
            .parse()
            .map_err(|_| Error::Format(format!("binding has invalid CUI {raw_cui:?}")))?;
        out.push((code, cui));
    }
    Ok(out)
}

/// Blocking HTTP transport. Sends the query as a GET parameter and asks for
/// JSON results. BioPortal requires an API key.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport {
            api_key: None,
            timeout: Duration::from_secs(60),
        }
    }
}

impl HttpTransport {
    /// Endpoint from `COMORBID_SPARQL_ENDPOINT`, falling back to BioPortal.
    pub fn endpoint_from_env() -> String {
        std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string())
    }
}

impl Transport for HttpTransport {
    fn execute(&self, endpoint: &str, query: &str) -> std::result::Result<Vec<u8>, String> {
        let mut req = ureq::get(endpoint)
            .timeout(self.timeout)
            .set("Accept", "application/sparql-results+json")
            .query("query", query)
            .query("format", "json");
        if let Some(key) = &self.api_key {
            req = req.query("apikey", key);
        }
        let resp = req.call().map_err(|e| e.to_string())?;
        let mut body = Vec::new();
        std::io::Read::read_to_end(&mut resp.into_reader(), &mut body).map_err(|e| e.to_string())?;
        Ok(body)
    }
}
