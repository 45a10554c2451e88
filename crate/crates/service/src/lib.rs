//! Local review service: candidates and rule proposals over HTTP, decisions
//! into the append-only log, export of the corrected corpus.
//!
//! All routes live under `/api/v1`. The working corpus is rebuilt from the
//! original corpus, the proposals and the log, so a restart shows the same state.

mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ner_audit_core::corpus::Sentence;
use ner_audit_core::rules::effective_decisions;
use ner_audit_core::{Candidate, CandidateSource, CandidateStatus, Decision, EditProposal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

pub use session::{status_of, DecisionBody, Derived, ExportPaths, ReplacementBody, Session, SessionConfig, SessionError};

pub type SharedSession = Arc<RwLock<Session>>;

const DEFAULT_LIMIT: usize = 50;
const MAX_LIMIT: usize = 1000;

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownId(_) => StatusCode::NOT_FOUND,
            SessionError::BadRequest(_) | SessionError::Rules(_) => StatusCode::BAD_REQUEST,
            SessionError::Input { .. } | SessionError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn read(s: &SharedSession) -> std::sync::RwLockReadGuard<'_, Session> {
    s.read().unwrap_or_else(|e| e.into_inner())
}

#[derive(Debug, Default, Deserialize)]
pub struct CandidateQuery {
    pub status: Option<CandidateStatus>,
    pub source: Option<CandidateSource>,
    pub rule: Option<String>,
    pub offset: Option<usize>,
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Page<T> {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub items: Vec<T>,
}

fn rule_of(session: &Session, c: &Candidate) -> Option<String> {
    match session.proposal(&c.id) {
        Some(p) => Some(p.rule_id.clone()),
        None => c.note.as_deref().and_then(|n| n.split(':').next()).map(str::to_string),
    }
}

async fn list_candidates(State(s): State<SharedSession>, Query(q): Query<CandidateQuery>) -> ApiResult<Page<Candidate>> {
    let session = read(&s);
    let matching: Vec<&Candidate> = session
        .candidates()
        .iter()
        .filter(|c| q.status.is_none_or(|st| c.status == st))
        .filter(|c| q.source.is_none_or(|src| c.source == src))
        .filter(|c| q.rule.as_deref().is_none_or(|r| c.source == CandidateSource::Rule && rule_of(&session, c).as_deref() == Some(r)))
        .collect();
    let offset = q.offset.unwrap_or(0);
    let limit = q.limit.unwrap_or(DEFAULT_LIMIT).min(MAX_LIMIT);
    let items = matching.iter().skip(offset).take(limit).map(|c| (*c).clone()).collect();
    Ok(Json(Page { total: matching.len(), offset, limit, items }))
}

#[derive(Debug, Serialize)]
pub struct SentenceView {
    pub doc_id: String,
    pub sent_index: usize,
    pub tokens: Vec<String>,
    /// Tags after replaying the log.
    pub tags: Vec<String>,
    pub original_tags: Vec<String>,
}

fn tag_strings(s: &Sentence) -> Vec<String> {
    s.tokens.iter().map(|t| t.tag.to_string()).collect()
}

/// The sentence and up to `window` neighbours on each side within the same document.
fn sentence_window(session: &Session, doc_id: &str, sent_index: usize, window: usize) -> Option<Vec<SentenceView>> {
    let original = session.original();
    let pos = original.index().get(doc_id, sent_index)?;
    let derived = session.derived();
    let lo = pos.saturating_sub(window);
    let hi = (pos + window).min(original.sentences.len() - 1);
    Some(
        (lo..=hi)
            .filter(|&i| original.sentences[i].doc_id == doc_id)
            .map(|i| {
                let o = &original.sentences[i];
                SentenceView {
                    doc_id: o.doc_id.clone(),
                    sent_index: o.sent_index,
                    tokens: o.texts(),
                    tags: tag_strings(&derived.working.sentences[i]),
                    original_tags: tag_strings(o),
                }
            })
            .collect(),
    )
}

#[derive(Debug, Default, Deserialize)]
pub struct ContextQuery {
    pub context: Option<usize>,
}

async fn get_candidate(State(s): State<SharedSession>, Path(id): Path<String>, Query(q): Query<ContextQuery>) -> ApiResult<Value> {
    let session = read(&s);
    let c = session.candidate(&id).ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown candidate {id:?}")))?;
    let sentences = c
        .occurrences
        .first()
        .and_then(|o| sentence_window(&session, &o.doc_id, o.sent_index, q.context.unwrap_or(0).min(1)))
        .unwrap_or_default();
    let history: Vec<&Decision> = session.decisions().iter().filter(|d| d.proposal_id == id).collect();
    Ok(Json(json!({
        "candidate": c,
        "proposal": session.proposal(&id),
        "sentences": sentences,
        "decisions": history,
    })))
}

async fn post_decision(State(s): State<SharedSession>, Path(id): Path<String>, Json(body): Json<DecisionBody>) -> ApiResult<Value> {
    let mut session = s.write().unwrap_or_else(|e| e.into_inner());
    let decision = session.decide(&id, body)?;
    let status = status_of(Some(&decision));
    Ok(Json(json!({ "decision": decision, "status": status })))
}

#[derive(Debug, Default, Deserialize)]
pub struct ProposalQuery {
    pub rule: Option<String>,
    pub status: Option<CandidateStatus>,
}

#[derive(Debug, Serialize)]
pub struct ProposalView {
    #[serde(flatten)]
    pub proposal: EditProposal,
    pub status: CandidateStatus,
}

async fn list_proposals(State(s): State<SharedSession>, Query(q): Query<ProposalQuery>) -> ApiResult<Vec<ProposalView>> {
    let session = read(&s);
    let effective = effective_decisions(session.decisions());
    let items = session
        .proposals()
        .iter()
        .map(|p| ProposalView { proposal: p.clone(), status: status_of(effective.get(p.id.as_str()).copied()) })
        .filter(|v| q.rule.as_deref().is_none_or(|r| v.proposal.rule_id == r))
        .filter(|v| q.status.is_none_or(|st| v.status == st))
        .collect();
    Ok(Json(items))
}

async fn stats(State(s): State<SharedSession>) -> ApiResult<Value> {
    let session = read(&s);
    let derived = session.derived();
    let mut by_source = serde_json::Map::new();
    for c in session.candidates() {
        let key = serde_json::to_value(c.source).expect("enum serializes");
        let entry = by_source.entry(key.as_str().unwrap_or_default()).or_insert(json!(0));
        *entry = json!(entry.as_u64().unwrap_or(0) + 1);
    }
    Ok(Json(json!({
        "candidates": session.candidates().len(),
        "status": session.status_counts(),
        "source": by_source,
        "decisions": session.decisions().len(),
        "replay": derived.replay,
        "diff": derived.diff,
    })))
}

async fn export(State(s): State<SharedSession>) -> ApiResult<ExportPaths> {
    let session = read(&s);
    Ok(Json(session.export()?))
}

async fn get_sentence(State(s): State<SharedSession>, Path(rest): Path<String>, Query(q): Query<ContextQuery>) -> ApiResult<Vec<SentenceView>> {
    let not_found = || ApiError(StatusCode::NOT_FOUND, format!("no sentence {rest:?}"));
    let (doc_id, idx) = rest.rsplit_once('/').ok_or_else(not_found)?;
    let idx: usize = idx.parse().map_err(|_| not_found())?;
    let session = read(&s);
    sentence_window(&session, doc_id, idx, q.context.unwrap_or(0).min(1)).map(Json).ok_or_else(not_found)
}

async fn add_mention() -> ApiError {
    ApiError(StatusCode::NOT_IMPLEMENTED, "adding new mentions is not supported yet".into())
}

pub fn router(session: SharedSession, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/candidates", get(list_candidates))
        .route("/candidates/{id}", get(get_candidate))
        .route("/candidates/{id}/decision", post(post_decision))
        .route("/proposals", get(list_proposals))
        .route("/stats", get(stats))
        .route("/export", post(export))
        .route("/sentences/{*rest}", get(get_sentence))
        .route("/mentions", post(add_mention))
        .with_state(session);
    let app = Router::new().nest("/api/v1", api);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serves until Ctrl-C.
pub async fn serve(session: Session, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let app = router(Arc::new(RwLock::new(session)), static_dir);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
