//! REST endpoints. Bodies are decoded by hand so that every failure, including
//! malformed JSON, comes back as an `ApiError` document.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, PathRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{HeaderValue, Method};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use kgrec_core::graph::{CompatEdge, ComponentNode, Direction, GraphStats, NodeId};
use kgrec_core::nl::{AgentMode, ChatTurn};
use kgrec_core::query::{execute_query, parse_readonly, ResultTable};
use kgrec_core::recommend::{
    explain_recommendation, explain_violations, recommend_for, validate_config, Configuration, Recommendation, Violation,
};
use kgrec_core::rules::{InputFormat, Polarity};

use crate::error::ApiError;
use crate::state::{AppState, IngestSummary};

pub const MAX_BODY_BYTES: usize = 8 * 1024 * 1024;

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>, ui_origin: Option<&str>) -> Router {
    let cors = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any)
        .allow_origin(match ui_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
            Some(origin) => AllowOrigin::exact(origin),
            None => AllowOrigin::any(),
        });
    Router::new()
        .route("/healthz", get(healthz))
        .route("/chat", post(chat))
        .route("/query", post(query))
        .route("/recommend", post(recommend))
        .route("/validate", post(validate))
        .route("/ingest", post(ingest))
        .route("/graph/stats", get(stats))
        .route("/graph/nodes", get(find_nodes))
        .route("/graph/nodes/{id}", get(node))
        .route("/graph/nodes/{id}/neighbors", get(neighbors))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .method_not_allowed_fallback(|| async { ApiError::bad_request("method not allowed") })
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(cors)
        .with_state(state)
}

fn decode<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let bytes = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    serde_json::from_slice(&bytes).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn params(q: Result<Query<HashMap<String, String>>, QueryRejection>) -> Result<HashMap<String, String>, ApiError> {
    q.map(|Query(m)| m).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn node_id(path: Result<Path<String>, PathRejection>) -> Result<NodeId, ApiError> {
    let Path(raw) = path.map_err(|e| ApiError::bad_request(e.body_text()))?;
    raw.parse().map_err(|_| ApiError::bad_request(format!("node id {raw:?} is not a number")))
}

/// Runs blocking work off the async workers and turns a panic into a 500.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("request handler failed: {e}")))?
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    generation: u64,
    graph_loaded: bool,
    documents_indexed: usize,
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<Health> {
    let snap = state.snapshot();
    Json(Health {
        status: "ok",
        generation: snap.generation,
        graph_loaded: snap.graph.is_some(),
        documents_indexed: snap.store.as_ref().map_or(0, |s| s.len()),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChatBody {
    question: String,
    #[serde(default)]
    mode: Option<String>,
}

async fn chat(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<ChatTurn> {
    let req: ChatBody = decode(body)?;
    let mode: AgentMode = match req.mode.as_deref() {
        None => AgentMode::GraphAgent,
        Some(m) => m.parse().map_err(ApiError::bad_request)?,
    };
    if req.question.trim().is_empty() {
        return Err(ApiError::bad_request("question is empty"));
    }
    blocking(move || state.chat(&req.question, mode)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    query: String,
}

async fn query(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<ResultTable> {
    let req: QueryBody = decode(body)?;
    let ast = parse_readonly(&req.query)?;
    let snap = state.snapshot();
    Ok(Json(execute_query(&ast, snap.graph()?)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionBody {
    selected: Vec<NodeId>,
    #[serde(default)]
    category: Option<String>,
    /// Needed only when nothing is selected.
    #[serde(default)]
    project: Option<String>,
}

impl SelectionBody {
    fn configuration(&self, graph: &kgrec_core::graph::Graph) -> Result<Configuration, ApiError> {
        let config = Configuration::new(graph, self.selected.iter().copied())?;
        Ok(match &self.project {
            Some(p) if self.selected.is_empty() => config.with_project(p.clone()),
            _ => config,
        })
    }
}

#[derive(Serialize)]
struct Explained {
    #[serde(flatten)]
    recommendation: Recommendation,
    explanation: String,
}

#[derive(Serialize)]
struct RecommendResponse {
    configuration: Configuration,
    recommendations: Vec<Explained>,
}

async fn recommend(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<RecommendResponse> {
    let req: SelectionBody = decode(body)?;
    let snap = state.snapshot();
    let graph = snap.graph()?;
    let config = req.configuration(graph)?;
    let recommendations = recommend_for(graph, &config, req.category.as_deref())?
        .into_iter()
        .map(|r| Explained {
            explanation: explain_recommendation(graph, &config, &r),
            recommendation: r,
        })
        .collect();
    Ok(Json(RecommendResponse { configuration: config, recommendations }))
}

#[derive(Serialize)]
struct ValidateResponse {
    configuration: Configuration,
    valid: bool,
    violations: Vec<Violation>,
    explanation: String,
}

async fn validate(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<ValidateResponse> {
    let req: SelectionBody = decode(body)?;
    if req.category.is_some() {
        return Err(ApiError::bad_request("category is not used by /validate"));
    }
    let snap = state.snapshot();
    let graph = snap.graph()?;
    let config = req.configuration(graph)?;
    let violations = validate_config(graph, &config);
    Ok(Json(ValidateResponse {
        explanation: explain_violations(graph, &violations),
        valid: violations.is_empty(),
        violations,
        configuration: config,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IngestBody {
    content: String,
    #[serde(default)]
    format: Option<String>,
}

async fn ingest(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<IngestSummary> {
    let req: IngestBody = decode(body)?;
    let format: InputFormat = req.format.as_deref().unwrap_or("tsv").parse().map_err(|e: kgrec_core::rules::IngestError| ApiError::bad_request(e.to_string()))?;
    blocking(move || state.ingest(&req.content, format)).await.map(Json)
}

async fn stats(State(state): State<Arc<AppState>>) -> ApiResult<GraphStats> {
    Ok(Json(state.snapshot().graph()?.stats()))
}

const DEFAULT_LIST_LIMIT: usize = 100;

/// `?name=&project=&category=&limit=`: conjunction of substring filters.
async fn find_nodes(
    State(state): State<Arc<AppState>>,
    q: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult<Vec<ComponentNode>> {
    let mut q = params(q)?;
    let limit = match q.remove("limit") {
        None => DEFAULT_LIST_LIMIT,
        Some(v) => v.parse().map_err(|_| ApiError::bad_request(format!("limit {v:?} is not a number")))?,
    };
    let mut filters: Vec<(&str, &str)> = q.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    filters.sort();
    let snap = state.snapshot();
    let nodes = snap.graph()?.find_nodes_by(&filters)?;
    Ok(Json(nodes.into_iter().take(limit).cloned().collect()))
}

async fn node(State(state): State<Arc<AppState>>, path: Result<Path<String>, PathRejection>) -> ApiResult<ComponentNode> {
    let id = node_id(path)?;
    let snap = state.snapshot();
    Ok(Json(snap.graph()?.require(id)?.clone()))
}

#[derive(Serialize)]
struct Neighbor {
    edge: CompatEdge,
    node: ComponentNode,
}

#[derive(Serialize)]
struct NeighborsResponse {
    node: ComponentNode,
    neighbors: Vec<Neighbor>,
}

async fn neighbors(
    State(state): State<Arc<AppState>>,
    path: Result<Path<String>, PathRejection>,
    q: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult<NeighborsResponse> {
    let id = node_id(path)?;
    let q = params(q)?;
    let polarity: Option<Polarity> = match q.get("polarity").map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => None,
        Some(p) => Some(p.parse().map_err(|e: String| ApiError::bad_request(e))?),
    };
    let direction: Direction = match q.get("direction").map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => Direction::Both,
        Some(d) => d.parse().map_err(ApiError::bad_request)?,
    };
    if let Some(k) = q.keys().find(|k| !matches!(k.as_str(), "polarity" | "direction")) {
        return Err(ApiError::bad_request(format!("unknown parameter {k:?}")));
    }
    let snap = state.snapshot();
    let graph = snap.graph()?;
    let list = graph
        .neighbors(id, polarity, direction)?
        .into_iter()
        .map(|(e, n)| Neighbor { edge: e.clone(), node: n.clone() })
        .collect();
    Ok(Json(NeighborsResponse {
        node: graph.require(id)?.clone(),
        neighbors: list,
    }))
}
