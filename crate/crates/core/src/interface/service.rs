//! HTTP annotation service. Request and response schemas are documented in
//! `docs/api.md`.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::corpus::Document;
use super::pipeline::MentionRecord;
use crate::annotation::{annotator_pairs, kappa_report, AnnotationRecord, AnnotationStore, MentionRef};
use crate::context::Temporality;
use crate::error::Error;
use crate::terminology::{Cui, Lexicon};
use crate::textproc::Segmenter;

pub struct ServiceState {
    store: RwLock<AnnotationStore>,
    mentions: BTreeMap<String, Vec<MentionRecord>>,
    by_ref: HashMap<MentionRef, MentionRecord>,
    documents: HashMap<String, Document>,
    preferred: HashMap<Cui, String>,
    segmenter: Segmenter,
}

impl ServiceState {
    /// The store's task queue must list the same mentions as `mentions`.
    pub fn new(
        store: AnnotationStore,
        mentions: Vec<MentionRecord>,
        documents: Vec<Document>,
        lexicon: Option<&Lexicon>,
    ) -> Self {
        let mut by_doc: BTreeMap<String, Vec<MentionRecord>> = BTreeMap::new();
        let mut by_ref = HashMap::new();
        for m in mentions {
            by_ref.insert(m.mention_ref(), m.clone());
            by_doc.entry(m.doc_id.clone()).or_default().push(m);
        }
        let preferred = lexicon
            .map(|l| l.entries().iter().map(|e| (e.cui, e.preferred_term.clone())).collect())
            .unwrap_or_default();
        ServiceState {
            store: RwLock::new(store),
            mentions: by_doc,
            by_ref,
            documents: documents.into_iter().map(|d| (d.doc_id.clone(), d)).collect(),
            preferred,
            segmenter: Segmenter::default(),
        }
    }

    /// Builds a store whose task order is the dump order.
    pub fn task_queue(mentions: &[MentionRecord]) -> Vec<(MentionRef, crate::terminology::ChapterId)> {
        mentions.iter().map(|m| (m.mention_ref(), m.chapter)).collect()
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.store.read().expect("store lock").records()
    }
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    extra: Option<serde_json::Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            extra: None,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Conflict { current, .. } => ApiError {
                extra: Some(json!(current)),
                ..ApiError::new(StatusCode::CONFLICT, "conflict", e.to_string())
            },
            Error::UnknownMention(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_mention", e.to_string()),
            Error::Io { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io_error", e.to_string()),
            _ => ApiError::new(StatusCode::BAD_REQUEST, "invalid", e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(v) = self.extra {
            body["current_version"] = v;
        }
        (self.status, Json(body)).into_response()
    }
}

type Shared = Arc<ServiceState>;

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator: Option<String>,
}

fn annotator(q: AnnotatorQuery) -> Result<String, ApiError> {
    q.annotator.filter(|a| !a.trim().is_empty()).ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "missing_annotator",
            "query parameter `annotator` is required",
        )
    })
}

#[derive(Serialize)]
struct ContextSentence {
    text: String,
    /// Document char offset of the sentence start.
    start: usize,
}

#[derive(Serialize)]
struct TaskContext {
    prior: Option<ContextSentence>,
    sentence: ContextSentence,
    next: Option<ContextSentence>,
}

#[derive(Serialize)]
struct Task {
    #[serde(flatten)]
    mention: MentionRecord,
    preferred_term: Option<String>,
    version: u64,
    context: Option<TaskContext>,
}

fn context_for(state: &ServiceState, m: &MentionRecord) -> Option<TaskContext> {
    let doc = state.documents.get(&m.doc_id)?;
    let sentences = state.segmenter.segment(&doc.text);
    let pos = sentences.iter().position(|s| s.index == m.sentence_index)?;
    let make = |i: usize| ContextSentence {
        text: sentences[i].text(&doc.text).to_string(),
        start: sentences[i].start,
    };
    Some(TaskContext {
        prior: pos.checked_sub(1).map(make),
        sentence: make(pos),
        next: (pos + 1 < sentences.len()).then(|| make(pos + 1)),
    })
}

async fn next_task(State(state): State<Shared>, Query(q): Query<AnnotatorQuery>) -> Result<Response, ApiError> {
    let who = annotator(q)?;
    let store = state.store.read().expect("store lock");
    let Some((mref, _)) = store.next_task(&who) else {
        return Ok(Json(json!({ "task": null })).into_response());
    };
    let m = state
        .by_ref
        .get(mref)
        .ok_or_else(|| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "task without mention"))?;
    let task = Task {
        mention: m.clone(),
        preferred_term: state.preferred.get(&m.cui).cloned(),
        version: store.version(mref, &who),
        context: context_for(&state, m),
    };
    Ok(Json(json!({ "task": task })).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Submission {
    doc_id: String,
    start: usize,
    end: usize,
    cui: Cui,
    annotator_id: String,
    correct: bool,
    #[serde(default)]
    negated: bool,
    #[serde(default)]
    temporality: Temporality,
    timestamp: Option<DateTime<Utc>>,
    /// Version the client last saw; omitted means last write wins.
    version: Option<u64>,
}

async fn post_annotation(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let sub: Submission = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?;
    if sub.annotator_id.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "missing_annotator",
            "annotator_id is empty",
        ));
    }
    let record = AnnotationRecord {
        mention: MentionRef {
            doc_id: sub.doc_id,
            start: sub.start,
            end: sub.end,
            cui: sub.cui,
        },
        annotator_id: sub.annotator_id,
        correct: sub.correct,
        negated: sub.negated,
        temporality: sub.temporality,
        timestamp: sub
            .timestamp
            .unwrap_or_else(|| DateTime::<Utc>::from(std::time::SystemTime::now())),
    };
    let mut store = state.store.write().expect("store lock");
    let ack = match sub.version {
        Some(v) => store.record_versioned(record, v)?,
        None => store.record_annotation(record)?,
    };
    Ok(Json(ack).into_response())
}

async fn agreement(State(state): State<Shared>) -> Response {
    let store = state.store.read().expect("store lock");
    let records = store.records();
    let pairs = annotator_pairs(&records);
    let report = kappa_report(&records, &pairs, &|m| store.chapter_of(m));
    Json(report).into_response()
}

async fn progress(State(state): State<Shared>, Query(q): Query<AnnotatorQuery>) -> Result<Response, ApiError> {
    let who = annotator(q)?;
    let store = state.store.read().expect("store lock");
    let total = store.mentions().len();
    let done = store.annotated_by(&who);
    Ok(Json(json!({ "annotator": who, "done": done, "remaining": total - done, "total": total })).into_response())
}

async fn doc_mentions(State(state): State<Shared>, Path(doc_id): Path<String>) -> Result<Response, ApiError> {
    let doc = state.documents.get(&doc_id);
    let mentions = state.mentions.get(&doc_id);
    if doc.is_none() && mentions.is_none() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_document",
            format!("unknown document {doc_id}"),
        ));
    }
    Ok(Json(json!({
        "doc_id": doc_id,
        "text": doc.map(|d| d.text.as_str()),
        "mentions": mentions.map(Vec::as_slice).unwrap_or(&[]),
    }))
    .into_response())
}

async fn export(State(state): State<Shared>) -> Response {
    Json(state.records()).into_response()
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/annotations", post(post_annotation).get(export))
        .route("/api/agreement", get(agreement))
        .route("/api/progress", get(progress))
        .route("/api/mentions/{doc_id}", get(doc_mentions))
        .fallback(fallback)
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(state: Shared, addr: SocketAddr) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Network(format!("bind {addr}: {e}")))?;
    log::info!("annotation service listening on {addr}");
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::Network(e.to_string()))
}
