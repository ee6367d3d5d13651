//! HTTP front end for a local registry directory. Read endpoints serve the
//! stored canonical bytes unmodified; the publish endpoint funnels through
//! `Registry::publish`, so everything the service hands out is digest-
//! checked against the index. Reads share a lock; publishes are serialized
//! through the single writer.

use std::path::PathBuf;
use std::sync::{Arc, PoisonError, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::NaiveDate;
use umr_core::doc::{self, Value};
use umr_core::record::{parse_record, sha256_hex, RecordId, Violation};
use umr_core::registry::Registry;
use umr_core::version::Version;
use umr_core::Error;

pub const MANIFEST_CONTENT_TYPE: &str = "application/x-umr+yaml";
/// Set on record responses whose version has been yanked.
pub const YANKED_HEADER: &str = "x-umr-yanked";
pub const DEFAULT_MAX_BODY_BYTES: usize = 1_048_576;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory holding (or about to hold) a local registry.
    pub data_dir: PathBuf,
    pub read_only: bool,
    pub max_body_bytes: usize,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> ServiceConfig {
        ServiceConfig {
            data_dir: data_dir.into(),
            read_only: false,
            max_body_bytes: DEFAULT_MAX_BODY_BYTES,
        }
    }
}

struct AppState {
    registry: RwLock<Registry>,
    data_dir: PathBuf,
    read_only: bool,
}

impl AppState {
    fn read(&self) -> std::sync::RwLockReadGuard<'_, Registry> {
        self.registry.read().unwrap_or_else(PoisonError::into_inner)
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Registry> {
        self.registry
            .write()
            .unwrap_or_else(PoisonError::into_inner)
    }
}

/// Opens (or initializes) the registry under `config.data_dir` and returns
/// the routed application.
pub fn build_router(config: &ServiceConfig) -> Result<Router, Error> {
    let registry = Registry::open_or_init_local(&config.data_dir)?;
    let state = Arc::new(AppState {
        registry: RwLock::new(registry),
        data_dir: config.data_dir.clone(),
        read_only: config.read_only,
    });
    Ok(Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/v1/index", get(get_index))
        .route("/v1/records", post(post_record))
        .route("/v1/records/{*rest}", get(get_record))
        .route("/v1/advisories", get(get_advisories))
        .layer(DefaultBodyLimit::max(config.max_body_bytes))
        .with_state(state))
}

/// Serves until `shutdown` resolves; connections in flight finish first.
pub async fn serve(
    listener: tokio::net::TcpListener,
    router: Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router)
        .with_graceful_shutdown(shutdown)
        .await
}

/// Synchronous front door: builds a runtime, binds `bind`, reports the
/// bound address through `ready`, and serves until interrupted.
pub fn run_blocking(
    config: &ServiceConfig,
    bind: &str,
    ready: impl FnOnce(std::net::SocketAddr),
) -> Result<(), Error> {
    let router = build_router(config)?;
    let runtime = tokio::runtime::Runtime::new().map_err(Error::Io)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(Error::Io)?;
        ready(listener.local_addr().map_err(Error::Io)?);
        serve(listener, router, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(Error::Io)
    })
}

fn manifest(status: StatusCode, bytes: Vec<u8>) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, MANIFEST_CONTENT_TYPE)],
        bytes,
    )
        .into_response()
}

fn plain(status: StatusCode, message: String) -> Response {
    (status, message).into_response()
}

async fn get_index(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    let (bytes, etag) = {
        let registry = state.read();
        let bytes = registry.index_bytes().to_vec();
        let etag = format!("\"{}\"", sha256_hex(&bytes));
        (bytes, etag)
    };
    if let Some(candidates) = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
    {
        if candidates
            .split(',')
            .map(str::trim)
            .any(|t| t == etag || t == "*")
        {
            return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response();
        }
    }
    (
        StatusCode::OK,
        [
            (header::ETAG, etag),
            (header::CONTENT_TYPE, MANIFEST_CONTENT_TYPE.to_string()),
        ],
        bytes,
    )
        .into_response()
}

async fn get_record(State(state): State<Arc<AppState>>, Path(rest): Path<String>) -> Response {
    let Some((id_text, version_text)) = rest.rsplit_once('/') else {
        return plain(
            StatusCode::BAD_REQUEST,
            "record path must be <id>/<version>".to_string(),
        );
    };
    let id = match RecordId::parse(id_text) {
        Ok(id) => id,
        Err(e) => return plain(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let version = match Version::parse(version_text) {
        Ok(v) => v,
        Err(e) => return plain(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let (path, digest, yanked) = {
        let registry = state.read();
        match registry.index().entry(&id, &version) {
            Some(entry) => (entry.path.clone(), entry.digest.clone(), entry.yanked),
            None => {
                return plain(StatusCode::NOT_FOUND, format!("{id}@{version} not found"))
            }
        }
    };
    let bytes = match std::fs::read(state.data_dir.join(&path)) {
        Ok(bytes) => bytes,
        Err(e) => {
            return plain(
                StatusCode::INTERNAL_SERVER_ERROR,
                format!("stored record unreadable: {e}"),
            )
        }
    };
    // Integrity check before anything leaves the process.
    if sha256_hex(&bytes) != digest {
        return plain(
            StatusCode::INTERNAL_SERVER_ERROR,
            format!("stored bytes for {id}@{version} fail digest verification"),
        );
    }
    let mut response = manifest(StatusCode::OK, bytes);
    if yanked {
        response
            .headers_mut()
            .insert(YANKED_HEADER, "true".parse().expect("static header value"));
    }
    response
}

fn violation_value(v: &Violation) -> Value {
    Value::Map(vec![
        ("message".to_string(), Value::Str(v.message.clone())),
        ("path".to_string(), Value::Str(v.path.clone())),
        ("severity".to_string(), Value::Str(v.severity.to_string())),
    ])
}

fn rejection_body(error: &Error) -> Vec<u8> {
    let mut fields = vec![("error".to_string(), Value::Str(error.to_string()))];
    if let Error::Validation(violations) = error {
        fields.push((
            "violations".to_string(),
            Value::List(violations.iter().map(violation_value).collect()),
        ));
    }
    doc::emit(&Value::Map(fields)).into_bytes()
}

async fn post_record(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    if state.read_only {
        return plain(
            StatusCode::FORBIDDEN,
            "this registry is read-only".to_string(),
        );
    }
    let record = match parse_record(&body) {
        Ok((record, _warnings)) => record,
        Err(e) => return manifest(StatusCode::UNPROCESSABLE_ENTITY, rejection_body(&e)),
    };
    let result = {
        let mut registry = state.write();
        registry.publish(&record)
    };
    match result {
        Ok(digest) => {
            let body = doc::emit(&Value::Map(vec![
                ("digest".to_string(), Value::Str(digest)),
                ("id".to_string(), Value::Str(record.id.to_string())),
                ("version".to_string(), Value::Str(record.version.to_string())),
            ]));
            manifest(StatusCode::CREATED, body.into_bytes())
        }
        Err(e @ Error::Immutable { .. }) => plain(StatusCode::CONFLICT, e.to_string()),
        Err(e) => plain(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn get_advisories(State(state): State<Arc<AppState>>, uri: Uri) -> Response {
    let since_text = uri
        .query()
        .and_then(|q| q.split('&').find_map(|kv| kv.strip_prefix("since=")));
    let since = match since_text {
        None => None,
        Some(text) => match NaiveDate::parse_from_str(text, "%Y-%m-%d") {
            Ok(date) => Some(date),
            Err(_) => {
                return plain(
                    StatusCode::BAD_REQUEST,
                    format!("malformed since date {text:?} (expected YYYY-MM-DD)"),
                )
            }
        },
    };
    let bytes = {
        let registry = state.read();
        let items: Vec<Value> = registry
            .advisories()
            .advisories()
            .iter()
            .filter(|a| a.is_active() && since.is_none_or(|d| a.published >= d))
            .map(|a| a.to_value())
            .collect();
        doc::emit(&Value::List(items)).into_bytes()
    };
    manifest(StatusCode::OK, bytes)
}
