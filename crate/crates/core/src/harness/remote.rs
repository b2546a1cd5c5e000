// SPDX-License-Identifier: Apache-2.0

//! Client side of the REST protocol, exposed as an [`AnnIndex`].

use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::Agent;

use super::protocol::{
    encode_queries, BuildBody, ErrorBody, KnnBody, KnnResponse, QueryArgsBody, RangeBody,
    RangeResponse, ServerState, StatusResponse, PROTOCOL_VERSION,
};
use crate::dataset::VectorDataset;
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::index::{AnnIndex, IndexDescription, Params, ResultSet, SearchParams};

/// An index hosted by a remote server.
///
/// The executor passed to searches is ignored; the server decides its own
/// parallelism.
pub struct RemoteIndex {
    base: String,
    agent: Agent,
    status: Mutex<StatusResponse>,
}

impl RemoteIndex {
    /// Connects and checks the protocol version.
    pub fn connect(endpoint: &str) -> Result<Self> {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        let remote = RemoteIndex {
            base: endpoint.trim_end_matches('/').to_string(),
            agent,
            status: Mutex::new(StatusResponse {
                protocol_version: PROTOCOL_VERSION,
                state: ServerState::Idle,
                describe: None,
                dim: None,
                len: None,
                index_size_bytes: None,
                error: None,
            }),
        };
        remote.refresh()?;
        Ok(remote)
    }

    /// Fetches `/v1/status` and caches it.
    pub fn refresh(&self) -> Result<StatusResponse> {
        let status: StatusResponse = self.get("/v1/status")?;
        if status.protocol_version != PROTOCOL_VERSION {
            return Err(Error::Remote(format!(
                "server speaks protocol version {}, client speaks {PROTOCOL_VERSION}",
                status.protocol_version
            )));
        }
        *self.status.lock().unwrap() = status.clone();
        Ok(status)
    }

    /// State as of the last status fetch or build.
    pub fn state(&self) -> ServerState {
        self.status.lock().unwrap().state
    }

    /// Asks the server to build from a dataset file visible to the server.
    pub fn build(&self, dataset_path: &Path, metric: Metric, params: &Params) -> Result<()> {
        let body = BuildBody {
            dataset_path: dataset_path.to_string_lossy().into_owned(),
            build_params: params.clone(),
            metric: Some(metric),
        };
        let status: StatusResponse = self.post("/v1/build", &body)?;
        *self.status.lock().unwrap() = status;
        Ok(())
    }

    pub fn set_query_args(&self, params: &SearchParams) -> Result<()> {
        let body = QueryArgsBody {
            search_params: params.clone(),
        };
        let mut resp = self
            .agent
            .post(&self.url("/v1/query_args"))
            .send_json(&body)
            .map_err(transport)?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(server_error(resp.status().as_u16(), resp.body_mut().read_to_string().ok()))
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let resp = self.agent.get(&self.url(path)).call().map_err(transport)?;
        read(resp)
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        let resp = self
            .agent
            .post(&self.url(path))
            .send_json(body)
            .map_err(transport)?;
        read(resp)
    }

    fn ready_status(&self) -> StatusResponse {
        self.status.lock().unwrap().clone()
    }
}

fn transport(e: ureq::Error) -> Error {
    Error::Remote(format!("HTTP request failed: {e}"))
}

fn server_error(code: u16, body: Option<String>) -> Error {
    let message = body
        .as_deref()
        .and_then(|b| serde_json::from_str::<ErrorBody>(b).ok())
        .map(|e| e.error)
        .or(body)
        .unwrap_or_default();
    Error::Remote(format!("server returned {code}: {message}"))
}

fn read<T: DeserializeOwned>(mut resp: ureq::http::Response<ureq::Body>) -> Result<T> {
    let code = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| Error::Remote(format!("cannot read response: {e}")))?;
    if !(200..300).contains(&code) {
        return Err(server_error(code, Some(text)));
    }
    serde_json::from_str(&text).map_err(|e| Error::Remote(format!("malformed response: {e}")))
}

impl AnnIndex for RemoteIndex {
    fn describe(&self) -> IndexDescription {
        self.ready_status().describe.unwrap_or(IndexDescription {
            algorithm: "remote".into(),
            metric: Metric::L2,
            params: Params::new(),
        })
    }

    fn dim(&self) -> usize {
        self.ready_status().dim.unwrap_or(0)
    }

    fn len(&self) -> usize {
        self.ready_status().len.unwrap_or(0)
    }

    fn metric(&self) -> Metric {
        self.describe().metric
    }

    fn search_knn(
        &self,
        queries: &VectorDataset,
        k: usize,
        params: &SearchParams,
        _exec: &Executor,
    ) -> Result<ResultSet> {
        self.set_query_args(params)?;
        let body = KnnBody {
            queries: encode_queries(queries)?,
            kind: queries.kind(),
            k,
        };
        let resp: KnnResponse = self.post("/v1/knn", &body)?;
        resp.into_results()
    }

    fn search_range(
        &self,
        queries: &VectorDataset,
        radius: f32,
        params: &SearchParams,
        _exec: &Executor,
    ) -> Result<ResultSet> {
        self.set_query_args(params)?;
        let body = RangeBody {
            queries: encode_queries(queries)?,
            kind: queries.kind(),
            radius,
        };
        let resp: RangeResponse = self.post("/v1/range", &body)?;
        resp.into_results()
    }

    fn index_size_bytes(&self) -> u64 {
        self.ready_status().index_size_bytes.unwrap_or(0)
    }

    fn save(&self, _out: &mut dyn Write) -> Result<()> {
        Err(Error::Unsupported("a remote index cannot be saved locally".into()))
    }
}
