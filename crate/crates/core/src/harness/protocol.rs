// SPDX-License-Identifier: Apache-2.0

//! JSON bodies of the REST protocol. Vector payloads travel as base64 of the
//! binary vector file format.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::dataset::{decode_vectors, encode_vectors, ScalarKind, VectorDataset};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::index::{IndexDescription, Neighbor, Params, ResultSet};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServerState {
    Idle,
    Building,
    Ready,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatusResponse {
    pub protocol_version: u32,
    pub state: ServerState,
    #[serde(default)]
    pub describe: Option<IndexDescription>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub len: Option<usize>,
    #[serde(default)]
    pub index_size_bytes: Option<u64>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildBody {
    pub dataset_path: String,
    #[serde(default)]
    pub build_params: Params,
    #[serde(default)]
    pub metric: Option<Metric>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryArgsBody {
    #[serde(default)]
    pub search_params: Params,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnBody {
    pub queries: String,
    #[serde(default = "default_kind")]
    pub kind: ScalarKind,
    pub k: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeBody {
    pub queries: String,
    #[serde(default = "default_kind")]
    pub kind: ScalarKind,
    pub radius: f32,
}

fn default_kind() -> ScalarKind {
    ScalarKind::F32
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnnResponse {
    pub ids: Vec<Vec<u32>>,
    pub distances: Vec<Vec<f32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RangeResponse {
    pub counts: Vec<u32>,
    pub ids: Vec<u32>,
    pub distances: Vec<f32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

pub fn encode_queries(queries: &VectorDataset) -> Result<String> {
    Ok(STANDARD.encode(encode_vectors(queries)?))
}

pub fn decode_queries(payload: &str, kind: ScalarKind) -> Result<VectorDataset> {
    let bytes = STANDARD
        .decode(payload)
        .map_err(|e| Error::invalid(format!("queries are not valid base64: {e}")))?;
    decode_vectors(&bytes, kind, "queries")
}

impl From<&ResultSet> for KnnResponse {
    fn from(r: &ResultSet) -> Self {
        KnnResponse {
            ids: r.iter().map(|l| l.iter().map(|n| n.id).collect()).collect(),
            distances: r.iter().map(|l| l.iter().map(|n| n.distance).collect()).collect(),
        }
    }
}

impl KnnResponse {
    pub fn into_results(self) -> Result<ResultSet> {
        if self.ids.len() != self.distances.len()
            || self.ids.iter().zip(&self.distances).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::Remote("k-NN response has mismatched id and distance lists".into()));
        }
        Ok(ResultSet::from_lists(
            self.ids
                .into_iter()
                .zip(self.distances)
                .map(|(ids, ds)| ids.into_iter().zip(ds).map(|(i, d)| Neighbor::new(i, d)).collect())
                .collect(),
        ))
    }
}

impl From<&ResultSet> for RangeResponse {
    fn from(r: &ResultSet) -> Self {
        RangeResponse {
            counts: r.counts(),
            ids: r.ids(),
            distances: r.distances(),
        }
    }
}

impl RangeResponse {
    pub fn into_results(self) -> Result<ResultSet> {
        ResultSet::from_flat(&self.counts, &self.ids, &self.distances)
            .map_err(|e| Error::Remote(format!("bad range response: {e}")))
    }
}
