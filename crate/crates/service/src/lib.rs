//! Read-only HTTP API over a built index.
//!
//! | route        | parameters                                                                         |
//! |--------------|------------------------------------------------------------------------------------|
//! | `/search`    | `q`, `mode`, `k`, `alpha`, `lambda`, `top_concepts`, `grouped`, `seed`, `clusters`, `lsi_rank`, `concept` |
//! | `/concepts`  | `q`, `top`, `mode`, `seed`, `clusters`, `lsi_rank`                                 |
//! | `/stats`     |                                                                                    |
//! | `/healthz`   |                                                                                    |
//!
//! Errors come back as `{"error": "..."}` with status 400 for bad
//! parameters and 404 for an unknown pinned concept.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tagconcept::cluster::ClusterConfig;
use tagconcept::ranker::{ConceptContribution, HitOrigin};
use tagconcept::store::{self, StoreError};
use tagconcept::{ConceptSummary, QuerySpec, RankerConfig, SearchEngine, SearchError, SearchMode};
use thiserror::Error;
use tower_http::cors::CorsLayer;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Config(e) => ApiError::BadRequest(e.to_string()),
            SearchError::UnknownConcept(_) => ApiError::NotFound(e.to_string()),
            SearchError::Cluster(e) => ApiError::Internal(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status(),
            Json(ErrorBody {
                error: self.to_string(),
            }),
        )
            .into_response()
    }
}

/// Query-string parameters of `/search` and `/concepts`, still as text.
pub type Params = BTreeMap<String, String>;

fn param<T: FromStr>(params: &Params, name: &str) -> Result<Option<T>, ApiError>
where
    T::Err: std::fmt::Display,
{
    match params.get(name) {
        None => Ok(None),
        Some(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| ApiError::BadRequest(format!("invalid {name} {raw:?}: {e}"))),
    }
}

fn query_param(params: &Params) -> Result<QuerySpec, ApiError> {
    let raw = params
        .get("q")
        .ok_or_else(|| ApiError::BadRequest("missing q".into()))?;
    QuerySpec::parse(raw).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn cluster_params(params: &Params) -> Result<ClusterConfig, ApiError> {
    let mut cluster = ClusterConfig::default();
    if let Some(seed) = param(params, "seed")? {
        cluster.seed = seed;
    }
    if let Some(clusters) = param(params, "clusters")? {
        cluster.clusters = clusters;
    }
    if let Some(rank) = param(params, "lsi_rank")? {
        cluster.lsi_rank = rank;
    }
    Ok(cluster)
}

/// A parsed `/search` request.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRequest {
    pub query: QuerySpec,
    pub config: RankerConfig,
    pub grouped: bool,
}

impl SearchRequest {
    pub fn from_params(params: &Params) -> Result<Self, ApiError> {
        let query = query_param(params)?;
        let mut config = RankerConfig::default();
        if let Some(mode) = params.get("mode") {
            config.mode = mode
                .parse()
                .map_err(|e: tagconcept::index::QueryError| ApiError::BadRequest(e.to_string()))?;
        }
        if let Some(k) = param(params, "k")? {
            config.k = k;
        }
        if let Some(alpha) = param(params, "alpha")? {
            config.alpha = alpha;
        }
        if let Some(lambda) = param(params, "lambda")? {
            config.lambda = lambda;
        }
        if let Some(top) = param(params, "top_concepts")? {
            config.top_concepts = top;
        }
        config.cluster = cluster_params(params)?;
        config.pinned_concept = params.get("concept").filter(|c| !c.is_empty()).cloned();
        config
            .validate()
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;
        Ok(Self {
            query,
            config,
            grouped: param(params, "grouped")?.unwrap_or(false),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEcho {
    pub q: String,
    pub terms: Vec<String>,
    pub k: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub top_concepts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concept: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
    pub origin: HitOrigin,
    pub title: String,
    pub tags: Vec<String>,
    pub contributions: Vec<ConceptContribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupItem {
    pub id: String,
    pub score: f64,
    pub title: String,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub concept_id: String,
    pub label: Vec<String>,
    pub query_score: f64,
    pub popularity: f64,
    pub concept_score: f64,
    pub items: Vec<GroupItem>,
}

/// Body of `/search`, also printed by the command-line `search --json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: QueryEcho,
    pub mode: SearchMode,
    /// Alpha after the weak-community fallback.
    pub alpha: f64,
    pub total_candidates: usize,
    pub hits: Vec<Hit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Group>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timed<T> {
    #[serde(flatten)]
    pub body: T,
    pub took_ms: f64,
}

pub fn search(engine: &SearchEngine, req: &SearchRequest) -> Result<SearchResponse, ApiError> {
    let out = engine.search(&req.query, &req.config)?;
    let describe = |id: &str| {
        engine
            .corpus
            .items
            .get(id)
            .map(|i| (i.title.clone(), i.tags.clone()))
            .unwrap_or_default()
    };
    let hits = out
        .hits
        .into_iter()
        .map(|h| {
            let (title, tags) = describe(&h.item_id);
            Hit {
                id: h.item_id,
                score: h.score,
                origin: h.origin,
                title,
                tags,
                contributions: h.contributing_concepts,
            }
        })
        .collect();
    let groups = req.grouped.then(|| {
        out.groups
            .into_iter()
            .map(|g| Group {
                concept_id: g.concept_id,
                label: g.label,
                query_score: g.query_score,
                popularity: g.popularity,
                concept_score: g.concept_score,
                items: g
                    .items
                    .into_iter()
                    .map(|i| {
                        let (title, tags) = describe(&i.item_id);
                        GroupItem {
                            id: i.item_id,
                            score: i.score,
                            title,
                            tags,
                        }
                    })
                    .collect(),
            })
            .collect()
    });
    Ok(SearchResponse {
        query: QueryEcho {
            q: req.query.raw.clone(),
            terms: req.query.terms.clone(),
            k: req.config.k,
            alpha: req.config.alpha,
            lambda: req.config.lambda,
            top_concepts: req.config.top_concepts,
            concept: req.config.pinned_concept.clone(),
        },
        mode: out.mode,
        alpha: out.alpha,
        total_candidates: out.total_candidates,
        hits,
        groups,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptsResponse {
    pub q: String,
    pub mode: SearchMode,
    pub concepts: Vec<ConceptSummary>,
}

pub fn concepts(engine: &SearchEngine, params: &Params) -> Result<ConceptsResponse, ApiError> {
    let query = query_param(params)?;
    let top = param(params, "top")?.unwrap_or(5);
    let mode: SearchMode = match params.get("mode") {
        Some(m) => m
            .parse()
            .map_err(|e: tagconcept::index::QueryError| ApiError::BadRequest(e.to_string()))?,
        None => SearchMode::Community,
    };
    let config = RankerConfig {
        cluster: cluster_params(params)?,
        ..RankerConfig::with_mode(mode.clone())
    };
    config
        .validate()
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(ConceptsResponse {
        q: query.raw.clone(),
        mode,
        concepts: engine.concept_summaries(&query, &config, top)?,
    })
}

/// `/stats` body; the command-line `stats` prints exactly this.
pub fn stats_json(engine: &SearchEngine) -> String {
    serde_json::to_string(&engine.stats()).expect("stats serialize")
}

type Shared = Arc<SearchEngine>;

async fn search_handler(
    State(engine): State<Shared>,
    Query(params): Query<Params>,
) -> Result<Json<Timed<SearchResponse>>, ApiError> {
    let start = Instant::now();
    let req = SearchRequest::from_params(&params)?;
    let engine2 = engine.clone();
    let body = tokio::task::spawn_blocking(move || search(&engine2, &req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(Timed {
        body,
        took_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

async fn concepts_handler(
    State(engine): State<Shared>,
    Query(params): Query<Params>,
) -> Result<Json<ConceptsResponse>, ApiError> {
    tokio::task::spawn_blocking(move || concepts(&engine, &params))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map(Json)
}

async fn stats_handler(State(engine): State<Shared>) -> Response {
    (
        [(axum::http::header::CONTENT_TYPE, "application/json")],
        stats_json(&engine),
    )
        .into_response()
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    items: usize,
    concepts: usize,
}

async fn health_handler(State(engine): State<Shared>) -> Json<Health> {
    Json(Health {
        status: "ok",
        items: engine.corpus.items.len(),
        concepts: engine.concepts.len(),
    })
}

async fn not_found() -> ApiError {
    ApiError::NotFound("no such route".into())
}

pub fn router(engine: Arc<SearchEngine>) -> Router {
    Router::new()
        .route("/search", get(search_handler))
        .route("/concepts", get(concepts_handler))
        .route("/stats", get(stats_handler))
        .route("/healthz", get(health_handler))
        .fallback(not_found)
        .layer(CorsLayer::permissive())
        .with_state(engine)
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot load index: {0}")]
    Index(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub index: PathBuf,
    pub bind: String,
}

/// Loads the index and binds the listener.
pub async fn bind(opts: &ServeOptions) -> Result<(tokio::net::TcpListener, Arc<SearchEngine>), ServeError> {
    let engine = Arc::new(store::load(&opts.index)?);
    let listener = tokio::net::TcpListener::bind(&opts.bind)
        .await
        .map_err(|source| ServeError::Bind {
            addr: opts.bind.clone(),
            source,
        })?;
    Ok((listener, engine))
}

/// Serves until ctrl-c.
pub async fn serve_on(listener: tokio::net::TcpListener, engine: Arc<SearchEngine>) -> Result<(), ServeError> {
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub async fn serve(opts: ServeOptions) -> Result<(), ServeError> {
    let (listener, engine) = bind(&opts).await?;
    if let Ok(addr) = listener.local_addr() {
        eprintln!(
            "serving {} items, {} concepts on http://{addr}",
            engine.corpus.items.len(),
            engine.concepts.len()
        );
    }
    serve_on(listener, engine).await
}
