//! Read-only HTTP API over the search engine.
//!
//! | route | body |
//! |---|---|
//! | `GET /api/search` | rendered result set (json, xml or table) |
//! | `GET /api/ontology` | `{name, roots:[{id, label, children:[…]}]}` |
//! | `GET /api/ontology/{id}/children` | `{id, children:[{id, label}]}` |
//! | `GET /api/sources` | `[{source_id, display_name, mode}]` |
//! | `GET /healthz` | `{"status":"ok"}`, 503 until loaded |
//!
//! Every non-200 response carries `{"error": …, "detail": …}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use scholarlens::config::{ConfigError, ServiceConfig};
use scholarlens::ontology::{Ontology, OntologyError};
use scholarlens::query::{federate_search, QueryError, SearchRequest};
use scholarlens::serialize::{render, OutputFormat};
use scholarlens::sources::{FetchContext, Registry};
use scholarlens::text::normalize;

/// Everything a request needs; immutable once built.
#[derive(Debug)]
pub struct AppState {
    pub ontology: Ontology,
    pub registry: Registry,
    pub fetch: FetchContext,
}

impl AppState {
    pub fn new(ontology: Ontology, registry: Registry, fetch: FetchContext) -> Self {
        Self { ontology, registry, fetch }
    }

    pub fn from_config(cfg: &ServiceConfig) -> Result<Self, ConfigError> {
        Ok(Self::new(cfg.load_ontology()?, cfg.load_registry()?, cfg.fetch_context()))
    }
}

/// Filled once startup loading finishes; requests before that get 503.
pub type Readiness = Arc<OnceLock<Arc<AppState>>>;

pub fn ready(state: AppState) -> Readiness {
    let r = Readiness::default();
    r.set(Arc::new(state)).expect("fresh cell");
    r
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    error: &'static str,
    detail: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    detail: &'a str,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status,
            error,
            detail: detail.into(),
        }
    }

    fn bad_param(name: &str, value: &str) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", format!("invalid `{name}`: `{value}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.error,
            detail: &self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let detail = e.to_string();
        match e {
            QueryError::EmptyQuery => Self::new(StatusCode::BAD_REQUEST, "EmptyQuery", detail),
            QueryError::InvalidRequest(_) => Self::new(StatusCode::BAD_REQUEST, "BadRequest", detail),
            QueryError::UnknownSource(_) => Self::new(StatusCode::NOT_FOUND, "UnknownSource", detail),
        }
    }
}

impl From<OntologyError> for ApiError {
    fn from(e: OntologyError) -> Self {
        match e {
            OntologyError::UnknownClass { .. } => Self::new(StatusCode::NOT_FOUND, "UnknownClass", e.to_string()),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", other.to_string()),
        }
    }
}

fn state(r: &Readiness) -> Result<Arc<AppState>, ApiError> {
    r.get()
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "NotReady", "still loading"))
}

fn param<T: std::str::FromStr>(q: &HashMap<String, String>, name: &str, default: T) -> Result<T, ApiError> {
    match q.get(name).map(|v| v.trim()) {
        None | Some("") => Ok(default),
        Some(v) => v.parse().map_err(|_| ApiError::bad_param(name, v)),
    }
}

/// Builds a request from query-string parameters.
pub fn search_request(q: &HashMap<String, String>) -> Result<SearchRequest, ApiError> {
    let defaults = SearchRequest::new("");
    let req = SearchRequest {
        raw_query: q.get("q").cloned().unwrap_or_default(),
        depth: param(q, "depth", defaults.depth)?,
        gamma: param(q, "gamma", defaults.gamma)?,
        sources: q
            .get("sources")
            .map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect())
            .unwrap_or_default(),
        limit: param(q, "limit", defaults.limit)?,
        format: param(q, "format", OutputFormat::Json)?,
    };
    req.validate()?;
    Ok(req)
}

async fn search(State(r): State<Readiness>, Query(q): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let st = state(&r)?;
    let req = search_request(&q)?;
    let format = req.format;
    let rs = tokio::task::spawn_blocking(move || federate_search(&req, &st.ontology, &st.registry, &st.fetch))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, format.content_type())], render(&rs, format)).into_response())
}

#[derive(Serialize)]
struct TreeNode {
    id: String,
    label: String,
    children: Vec<TreeNode>,
}

fn tree(o: &Ontology, id: &str) -> TreeNode {
    let node = o.node(id).expect("ids come from the ontology");
    TreeNode {
        id: node.id.clone(),
        label: node.label.clone(),
        children: o
            .children_of(id)
            .expect("ids come from the ontology")
            .iter()
            .map(|c| tree(o, c))
            .collect(),
    }
}

#[derive(Serialize)]
struct OntologyBody {
    name: String,
    roots: Vec<TreeNode>,
}

async fn ontology(State(r): State<Readiness>) -> Result<Json<OntologyBody>, ApiError> {
    let st = state(&r)?;
    let o = &st.ontology;
    Ok(Json(OntologyBody {
        name: o.name().to_string(),
        roots: o.roots().iter().map(|id| tree(o, id)).collect(),
    }))
}

#[derive(Serialize)]
struct ClassRef {
    id: String,
    label: String,
}

#[derive(Serialize)]
struct ChildrenBody {
    id: String,
    children: Vec<ClassRef>,
}

async fn children(State(r): State<Readiness>, UrlPath(id): UrlPath<String>) -> Result<Json<ChildrenBody>, ApiError> {
    let st = state(&r)?;
    let id = normalize(&id);
    let kids = st.ontology.children_of(&id)?;
    Ok(Json(ChildrenBody {
        children: kids
            .iter()
            .map(|c| ClassRef {
                id: c.clone(),
                label: st.ontology.node(c).map(|n| n.label.clone()).unwrap_or_default(),
            })
            .collect(),
        id,
    }))
}

async fn sources(State(r): State<Readiness>) -> Result<Response, ApiError> {
    let st = state(&r)?;
    Ok(Json(st.registry.list_sources()).into_response())
}

async fn healthz(State(r): State<Readiness>) -> Result<Json<serde_json::Value>, ApiError> {
    state(&r)?;
    Ok(Json(serde_json::json!({ "status": "ok" })))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "the API is read-only")
}

fn cors(origins: &[String]) -> Option<CorsLayer> {
    if origins.is_empty() {
        return None;
    }
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        AllowOrigin::list(origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    Some(CorsLayer::new().allow_origin(allow).allow_methods([Method::GET]))
}

pub fn router(readiness: Readiness, cors_origins: &[String], ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/search", get(search))
        .route("/api/ontology", get(ontology))
        .route("/api/ontology/{id}/children", get(children))
        .route("/api/sources", get(sources))
        .route("/healthz", get(healthz))
        .method_not_allowed_fallback(method_not_allowed);
    let app = match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).fallback(get(not_found))),
        None => api.fallback(not_found),
    };
    let app = app.with_state(readiness);
    match cors(cors_origins) {
        Some(layer) => app.layer(layer),
        None => app,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Binds, then loads ontology and sources in the background while
/// `/healthz` answers 503. Returns on Ctrl-C, or with an error if loading
/// fails.
pub async fn serve(cfg: ServiceConfig) -> Result<(), ServeError> {
    let addr = format!("{}:{}", cfg.bind, cfg.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind { addr: addr.clone(), source })?;
    let local: SocketAddr = listener.local_addr()?;
    tracing::info!(%local, "listening");

    let readiness = Readiness::default();
    let app = router(readiness.clone(), &cfg.cors_origins, cfg.ui_dir.as_deref());
    let (fail_tx, mut fail_rx) = tokio::sync::mpsc::channel::<ConfigError>(1);
    {
        let cfg = cfg.clone();
        let readiness = readiness.clone();
        tokio::task::spawn_blocking(move || match AppState::from_config(&cfg) {
            Ok(st) => {
                tracing::info!(classes = st.ontology.len(), sources = st.registry.len(), "ready");
                let _ = readiness.set(Arc::new(st));
            }
            Err(e) => {
                let _ = fail_tx.blocking_send(e);
            }
        });
    }

    let failed: Arc<OnceLock<ConfigError>> = Arc::default();
    let failed_w = failed.clone();
    axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
                Some(e) = fail_rx.recv() => {
                    tracing::error!(error = %e, "startup failed");
                    let _ = failed_w.set(e);
                }
            }
        })
        .await?;
    match Arc::try_unwrap(failed).ok().and_then(|c| c.into_inner()) {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
