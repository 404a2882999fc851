//! HTTP API over live diagnosis sessions.
//!
//! Conditions and symptoms are addressed by name on the wire and by index
//! inside the engine. Sessions live in memory; each one sits behind its own
//! async mutex so concurrent answers to the same session are serialized and
//! only the one matching the pending question succeeds.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::inference::{Answer, Distribution, SelectionPolicy};
use crate::knowledge::{ConditionId, KnowledgeMatrix, SymptomId};
use crate::session::{Session, SessionConfig, SessionError, Status, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_MAX_QUESTIONS};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(3600);

// ---------------------------------------------------------------------------
// Wire types

/// `"uniform"` or a condition-name → probability map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Named(String),
    Map(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub prior: PriorSpec,
    #[serde(default)]
    pub initial_symptoms: Vec<String>,
    #[serde(default)]
    pub max_questions: Option<usize>,
    #[serde(default)]
    pub confidence_threshold: Option<f64>,
    #[serde(default)]
    pub policy: Option<SelectionPolicy>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    pub symptom: String,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSymptom {
    pub symptom: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedProbability {
    pub condition: String,
    pub index: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    pub symptom: String,
    pub index: usize,
    pub answer: Answer,
    pub initial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigView {
    pub prior: Vec<NamedProbability>,
    pub initial_symptoms: Vec<String>,
    pub max_questions: usize,
    pub confidence_threshold: f64,
    pub policy: SelectionPolicy,
}

/// Snapshot returned by every session endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    /// `awaiting_answer` or `finished`.
    pub status: String,
    pub pending_question: Option<NamedSymptom>,
    pub stop_reason: Option<String>,
    pub questions_asked: usize,
    pub max_questions: usize,
    /// In condition order.
    pub posterior: Vec<NamedProbability>,
    /// Posterior sorted descending, ties by lower index.
    pub differential: Vec<NamedProbability>,
    pub history: Vec<HistoryView>,
    pub config: ConfigView,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixView {
    pub condition_count: usize,
    pub symptom_count: usize,
    pub conditions: Vec<String>,
    pub symptoms: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub status: u16,
    pub code: String,
    pub message: String,
}

// ---------------------------------------------------------------------------
// Errors

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session {id:?}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail { status: self.status.as_u16(), code: self.code.to_owned(), message: self.message },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::NotPending { .. } => Self::new(StatusCode::CONFLICT, "not_pending", e.to_string()),
            SessionError::Finished(_) => Self::new(StatusCode::CONFLICT, "session_finished", e.to_string()),
            SessionError::InvalidConfig(_) | SessionError::DimensionMismatch { .. } => {
                Self::bad_request("invalid_config", e.to_string())
            }
            SessionError::Inference(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "inference_failed", e.to_string()),
        }
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("malformed_body", e.to_string()))
}

// ---------------------------------------------------------------------------
// Session store

struct SessionHandle {
    id: String,
    created_at: u64,
    last_access: Instant,
    session: Session,
}

type SharedHandle = Arc<tokio::sync::Mutex<SessionHandle>>;

/// Shared server state: the immutable matrix plus the session table.
#[derive(Clone)]
pub struct AppState {
    matrix: Arc<KnowledgeMatrix>,
    sessions: Arc<Mutex<HashMap<String, SharedHandle>>>,
    ttl: Duration,
}

impl AppState {
    pub fn new(matrix: Arc<KnowledgeMatrix>, ttl: Duration) -> Self {
        Self { matrix, sessions: Arc::default(), ttl }
    }

    pub fn matrix(&self) -> &KnowledgeMatrix {
        &self.matrix
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    fn insert(&self, session: Session) -> SharedHandle {
        let mut sessions = self.sessions.lock().unwrap();
        let id = loop {
            let mut bytes = [0u8; 16];
            rand::rng().fill_bytes(&mut bytes);
            let id = hex::encode(bytes);
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let handle = Arc::new(tokio::sync::Mutex::new(SessionHandle {
            id: id.clone(),
            created_at,
            last_access: Instant::now(),
            session,
        }));
        sessions.insert(id, handle.clone());
        handle
    }

    fn get(&self, id: &str) -> Option<SharedHandle> {
        self.sessions.lock().unwrap().get(id).cloned()
    }

    fn remove(&self, id: &str) {
        self.sessions.lock().unwrap().remove(id);
    }

    /// Drop sessions idle for longer than the TTL. Sessions currently locked
    /// by a request are in use and kept.
    pub fn evict_expired(&self) -> usize {
        let now = Instant::now();
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, handle| match handle.try_lock() {
            Ok(h) => now.duration_since(h.last_access) <= self.ttl,
            Err(_) => true,
        });
        before - sessions.len()
    }

    /// Lock a live session, treating expired ones as missing.
    async fn lock(&self, id: &str) -> Result<tokio::sync::OwnedMutexGuard<SessionHandle>, ApiError> {
        let handle = self.get(id).ok_or_else(|| ApiError::not_found(id))?;
        let mut guard = handle.lock_owned().await;
        if guard.last_access.elapsed() > self.ttl {
            drop(guard);
            self.remove(id);
            return Err(ApiError::not_found(id));
        }
        guard.last_access = Instant::now();
        Ok(guard)
    }
}

// ---------------------------------------------------------------------------
// Views

fn named(matrix: &KnowledgeMatrix, entries: impl IntoIterator<Item = (ConditionId, f64)>) -> Vec<NamedProbability> {
    entries
        .into_iter()
        .map(|(c, p)| NamedProbability { condition: matrix.condition_name(c).to_owned(), index: c.0, probability: p })
        .collect()
}

fn in_order(d: &Distribution) -> impl Iterator<Item = (ConditionId, f64)> + '_ {
    d.probs().iter().enumerate().map(|(i, &p)| (ConditionId(i), p))
}

fn view(handle: &SessionHandle, matrix: &KnowledgeMatrix) -> SessionView {
    let s = &handle.session;
    let config = s.config();
    let (status, pending_question, stop_reason) = match s.status() {
        Status::AwaitingAnswer { pending } => (
            "awaiting_answer",
            Some(NamedSymptom { symptom: matrix.symptom_name(pending).to_owned(), index: pending.0 }),
            None,
        ),
        Status::Finished { reason } => ("finished", None, Some(reason.as_str().to_owned())),
    };
    SessionView {
        session_id: handle.id.clone(),
        created_at: handle.created_at,
        status: status.to_owned(),
        pending_question,
        stop_reason,
        questions_asked: s.questions_asked(),
        max_questions: config.max_questions,
        posterior: named(matrix, in_order(s.posterior())),
        differential: named(matrix, s.differential(matrix.condition_count()).ranked),
        history: s
            .history()
            .iter()
            .map(|h| HistoryView {
                symptom: matrix.symptom_name(h.symptom).to_owned(),
                index: h.symptom.0,
                answer: h.answer,
                initial: h.initial,
            })
            .collect(),
        config: ConfigView {
            prior: named(matrix, in_order(&config.prior)),
            initial_symptoms: config.initial_positive_symptoms.iter().map(|&s| matrix.symptom_name(s).to_owned()).collect(),
            max_questions: config.max_questions,
            confidence_threshold: config.confidence_threshold,
            policy: config.policy,
        },
    }
}

// ---------------------------------------------------------------------------
// Handlers

fn resolve_prior(spec: &PriorSpec, matrix: &KnowledgeMatrix) -> Result<Distribution, ApiError> {
    let map = match spec {
        PriorSpec::Named(name) if name == "uniform" => return Ok(Distribution::uniform(matrix.condition_count())),
        PriorSpec::Named(other) => {
            return Err(ApiError::bad_request("malformed_prior", format!("prior must be \"uniform\" or an object, got {other:?}")))
        }
        PriorSpec::Map(map) => map,
    };
    let mut weights = vec![0.0; matrix.condition_count()];
    for (name, &p) in map {
        let c = matrix
            .condition_index(name)
            .ok_or_else(|| ApiError::bad_request("unknown_condition", format!("unknown condition {name:?}")))?;
        if !(p.is_finite() && p >= 0.0) {
            return Err(ApiError::bad_request("malformed_prior", format!("probability for {name:?} is {p}")));
        }
        weights[c.0] = p;
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(ApiError::bad_request("malformed_prior", "all prior probabilities are zero"));
    }
    Distribution::from_weights(weights)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "prior_not_normalizable", e.to_string()))
}

fn resolve_symptom(name: &str, matrix: &KnowledgeMatrix) -> Result<SymptomId, ApiError> {
    matrix
        .symptom_index(name)
        .ok_or_else(|| ApiError::bad_request("unknown_symptom", format!("unknown symptom {name:?}")))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req: CreateSessionRequest = parse_body(&body)?;
    let matrix = state.matrix.clone();
    let prior = resolve_prior(&req.prior, &matrix)?;
    let initial = req
        .initial_symptoms
        .iter()
        .map(|n| resolve_symptom(n, &matrix))
        .collect::<Result<Vec<_>, _>>()?;
    let config = SessionConfig::new(prior)
        .with_initial_symptoms(initial)
        .with_max_questions(req.max_questions.unwrap_or(DEFAULT_MAX_QUESTIONS))
        .with_threshold(req.confidence_threshold.unwrap_or(DEFAULT_CONFIDENCE_THRESHOLD))
        .with_policy(req.policy.unwrap_or_default());
    let session = Session::create(config, &matrix)?;
    let handle = state.insert(session);
    let guard = handle.lock().await;
    Ok((StatusCode::CREATED, Json(view(&guard, &matrix))))
}

async fn post_answer(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<SessionView>, ApiError> {
    let mut guard = state.lock(&id).await?;
    let req: AnswerRequest = parse_body(&body)?;
    let s = resolve_symptom(&req.symptom, &state.matrix)?;
    guard.session.submit_answer(&state.matrix, s, req.answer)?;
    Ok(Json(view(&guard, &state.matrix)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let guard = state.lock(&id).await?;
    Ok(Json(view(&guard, &state.matrix)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeleteAck {
    pub session_id: String,
    pub deleted: bool,
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Json<DeleteAck> {
    state.remove(&id);
    Json(DeleteAck { session_id: id, deleted: true })
}

async fn matrix_info(State(state): State<AppState>) -> Json<MatrixView> {
    let m = &state.matrix;
    Json(MatrixView {
        condition_count: m.condition_count(),
        symptom_count: m.symptom_count(),
        conditions: m.conditions().to_vec(),
        symptoms: m.symptoms().to_vec(),
    })
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session).delete(delete_session))
        .route("/v1/sessions/{id}/answers", post(post_answer))
        .route("/v1/matrix", get(matrix_info))
        .route("/healthz", get(healthz))
        .fallback(not_found)
        .with_state(state)
}

/// Serve on an already-bound listener until the future is dropped or the
/// process receives Ctrl-C. Expired sessions are swept periodically.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    let sweeper = {
        let state = state.clone();
        let period = state.ttl.clamp(Duration::from_secs(1), Duration::from_secs(60));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let evicted = state.evict_expired();
                if evicted > 0 {
                    tracing::debug!(evicted, "evicted expired sessions");
                }
            }
        })
    };
    let addr: Option<SocketAddr> = listener.local_addr().ok();
    tracing::info!(?addr, "listening");
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweeper.abort();
    result
}
