// SPDX-License-Identifier: Apache-2.0

//! REST server hosting one index at a time.
//!
//! Endpoints: `POST /v1/build`, `POST /v1/query_args`, `POST /v1/knn`,
//! `POST /v1/range`, `GET /v1/status`. One build may run at a time; queries
//! are served concurrently once an index is ready.

use std::net::{SocketAddr, TcpListener as StdListener, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tokio::sync::oneshot;

use super::protocol::{
    decode_queries, BuildBody, ErrorBody, KnnBody, KnnResponse, QueryArgsBody, RangeBody,
    RangeResponse, ServerState, StatusResponse, PROTOCOL_VERSION,
};
use crate::dataset::read_vectors;
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::index::{build_index, Algorithm, AnnIndex, Params};

/// A build request as received by the server.
#[derive(Clone, Debug)]
pub struct BuildRequest {
    pub dataset_path: PathBuf,
    pub build_params: Params,
    pub metric: Metric,
}

/// Turns a build request into an index.
pub type IndexBuilder = Arc<dyn Fn(&BuildRequest) -> Result<Box<dyn AnnIndex>> + Send + Sync>;

/// Builder that loads the dataset file and builds a baseline index.
pub fn algorithm_builder(algorithm: Algorithm, exec: Executor) -> IndexBuilder {
    Arc::new(move |req: &BuildRequest| {
        let dataset = read_vectors(&req.dataset_path)?;
        build_index(algorithm, &dataset, req.metric, &req.build_params, &exec)
    })
}

struct Inner {
    state: ServerState,
    index: Option<Arc<dyn AnnIndex>>,
    search_params: Params,
    error: Option<String>,
}

struct Shared {
    inner: Mutex<Inner>,
    builder: IndexBuilder,
    exec: Executor,
}

type AppState = Arc<Shared>;

/// Running server; dropping it shuts the server down.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds `addr` and serves in a background thread. Port 0 picks a free port.
pub fn serve_algorithm(
    builder: IndexBuilder,
    addr: impl ToSocketAddrs,
    exec: Executor,
) -> Result<ServerHandle> {
    let listener = StdListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let bound = listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let shared = Arc::new(Shared {
        inner: Mutex::new(Inner {
            state: ServerState::Idle,
            index: None,
            search_params: Params::new(),
            error: None,
        }),
        builder,
        exec,
    });
    let app = router(shared);
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("annbench-server".into())
        .spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        log::error!("cannot adopt listener: {e}");
                        return;
                    }
                };
                let served = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
                if let Err(e) = served {
                    log::error!("server stopped: {e}");
                }
            });
        })?;
    log::info!("serving on http://{bound}");
    Ok(ServerHandle {
        addr: bound,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/status", get(status))
        .route("/v1/build", post(build))
        .route("/v1/query_args", post(query_args))
        .route("/v1/knn", post(knn))
        .route("/v1/range", post(range))
        .with_state(state)
}

fn error_response(code: StatusCode, message: impl Into<String>) -> Response {
    (code, Json(ErrorBody { error: message.into() })).into_response()
}

fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::UnknownParameter { .. }
        | Error::Format(_)
        | Error::Json(_)
        | Error::Unsupported(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> std::result::Result<T, Response> {
    serde_json::from_slice(body)
        .map_err(|e| error_response(StatusCode::BAD_REQUEST, format!("malformed request body: {e}")))
}

fn snapshot(inner: &Inner) -> StatusResponse {
    StatusResponse {
        protocol_version: PROTOCOL_VERSION,
        state: inner.state,
        describe: inner.index.as_ref().map(|i| i.describe()),
        dim: inner.index.as_ref().map(|i| i.dim()),
        len: inner.index.as_ref().map(|i| i.len()),
        index_size_bytes: inner.index.as_ref().map(|i| i.index_size_bytes()),
        error: inner.error.clone(),
    }
}

async fn status(State(s): State<AppState>) -> Response {
    let snap = snapshot(&s.inner.lock().unwrap());
    Json(snap).into_response()
}

async fn build(State(s): State<AppState>, body: Bytes) -> Response {
    let body: BuildBody = match parse(&body) {
        Ok(b) => b,
        Err(r) => return r,
    };
    {
        let mut inner = s.inner.lock().unwrap();
        if inner.state == ServerState::Building {
            return error_response(StatusCode::CONFLICT, "a build is already in progress");
        }
        inner.state = ServerState::Building;
        inner.index = None;
        inner.error = None;
    }
    let request = BuildRequest {
        dataset_path: PathBuf::from(body.dataset_path),
        build_params: body.build_params,
        metric: body.metric.unwrap_or(Metric::L2),
    };
    let builder = s.builder.clone();
    let outcome = tokio::task::spawn_blocking(move || builder(&request)).await;
    let mut inner = s.inner.lock().unwrap();
    let failure = match outcome {
        Ok(Ok(index)) => {
            inner.index = Some(Arc::from(index));
            inner.state = ServerState::Ready;
            inner.search_params = Params::new();
            return Json(snapshot(&inner)).into_response();
        }
        Ok(Err(e)) => (status_for(&e), e.to_string()),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, format!("build task failed: {e}")),
    };
    inner.state = ServerState::Failed;
    inner.error = Some(failure.1.clone());
    error_response(failure.0, format!("build failed: {}", failure.1))
}

async fn query_args(State(s): State<AppState>, body: Bytes) -> Response {
    let body: QueryArgsBody = match parse(&body) {
        Ok(b) => b,
        Err(r) => return r,
    };
    s.inner.lock().unwrap().search_params = body.search_params;
    StatusCode::NO_CONTENT.into_response()
}

fn ready_index(s: &Shared) -> std::result::Result<(Arc<dyn AnnIndex>, Params), Response> {
    let inner = s.inner.lock().unwrap();
    match &inner.index {
        Some(i) if inner.state == ServerState::Ready => Ok((i.clone(), inner.search_params.clone())),
        _ => Err(error_response(StatusCode::CONFLICT, "no index is ready; POST /v1/build first")),
    }
}

async fn run_search<T, F>(s: &Shared, f: F) -> Response
where
    T: serde::Serialize + Send + 'static,
    F: FnOnce(&dyn AnnIndex, &Params, &Executor) -> Result<T> + Send + 'static,
{
    let (index, params) = match ready_index(s) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let exec = s.exec.clone();
    match tokio::task::spawn_blocking(move || f(index.as_ref(), &params, &exec)).await {
        Ok(Ok(body)) => Json(body).into_response(),
        Ok(Err(e)) => error_response(status_for(&e), e.to_string()),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, format!("search task failed: {e}")),
    }
}

async fn knn(State(s): State<AppState>, body: Bytes) -> Response {
    let body: KnnBody = match parse(&body) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let queries = match decode_queries(&body.queries, body.kind) {
        Ok(q) => q,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.to_string()),
    };
    run_search(&s, move |index, params, exec| {
        let results = index.search_knn(&queries, body.k, params, exec)?;
        Ok(KnnResponse::from(&results))
    })
    .await
}

async fn range(State(s): State<AppState>, body: Bytes) -> Response {
    let body: RangeBody = match parse(&body) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let queries = match decode_queries(&body.queries, body.kind) {
        Ok(q) => q,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.to_string()),
    };
    run_search(&s, move |index, params, exec| {
        let results = index.search_range(&queries, body.radius, params, exec)?;
        Ok(RangeResponse::from(&results))
    })
    .await
}
