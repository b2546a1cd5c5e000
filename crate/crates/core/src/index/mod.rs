// SPDX-License-Identifier: Apache-2.0

//! Uniform ANN index abstraction and the baseline implementations.

mod flat;
mod ivf;
mod ivfpq;
mod params;
mod persist;
mod result;
pub(crate) mod topk;
mod vamana;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::VectorDataset;
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::exec::Executor;

pub use flat::FlatIndex;
pub use ivf::{IvfEncoding, IvfIndex};
pub use ivfpq::IvfPqIndex;
pub use params::{BuildParams, ParamValue, Params, SearchParams};
pub use persist::{
    index_bytes, load_index, read_index, save_index, INDEX_EXTENSION, INDEX_FORMAT_VERSION,
    INDEX_MAGIC,
};
pub use result::{Neighbor, ResultSet};
pub use vamana::VamanaIndex;

/// Name and fully resolved build parameters of an index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexDescription {
    pub algorithm: String,
    pub metric: Metric,
    pub params: Params,
}

/// A built, read-only nearest neighbor index.
///
/// Searches never mutate the index and may run concurrently; identical inputs
/// give identical results regardless of the executor's worker count.
pub trait AnnIndex: Send + Sync {
    fn describe(&self) -> IndexDescription;

    fn dim(&self) -> usize;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn metric(&self) -> Metric;

    fn search_knn(
        &self,
        queries: &VectorDataset,
        k: usize,
        params: &SearchParams,
        exec: &Executor,
    ) -> Result<ResultSet>;

    /// `radius` is in squared-L2 units.
    fn search_range(
        &self,
        queries: &VectorDataset,
        radius: f32,
        params: &SearchParams,
        exec: &Executor,
    ) -> Result<ResultSet>;

    fn index_size_bytes(&self) -> u64;

    /// Writes the `.annidx` representation.
    fn save(&self, out: &mut dyn Write) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Flat,
    Ivf,
    IvfPq,
    Vamana,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Flat,
        Algorithm::Ivf,
        Algorithm::IvfPq,
        Algorithm::Vamana,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Flat => "flat",
            Algorithm::Ivf => "ivf",
            Algorithm::IvfPq => "ivfpq",
            Algorithm::Vamana => "vamana",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }

    pub fn build_keys(self) -> &'static [&'static str] {
        match self {
            Algorithm::Flat => flat::BUILD_KEYS,
            Algorithm::Ivf => ivf::BUILD_KEYS,
            Algorithm::IvfPq => ivfpq::BUILD_KEYS,
            Algorithm::Vamana => vamana::BUILD_KEYS,
        }
    }

    pub fn search_keys(self) -> &'static [&'static str] {
        match self {
            Algorithm::Flat => flat::SEARCH_KEYS,
            Algorithm::Ivf => ivf::SEARCH_KEYS,
            Algorithm::IvfPq => ivfpq::SEARCH_KEYS,
            Algorithm::Vamana => vamana::SEARCH_KEYS,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds any baseline index by algorithm name.
pub fn build_index(
    algorithm: Algorithm,
    dataset: &VectorDataset,
    metric: Metric,
    params: &BuildParams,
    exec: &Executor,
) -> Result<Box<dyn AnnIndex>> {
    Ok(match algorithm {
        Algorithm::Flat => Box::new(FlatIndex::build(dataset, metric, params)?),
        Algorithm::Ivf => Box::new(IvfIndex::build(dataset, metric, params, exec)?),
        Algorithm::IvfPq => Box::new(IvfPqIndex::build(dataset, metric, params, exec)?),
        Algorithm::Vamana => Box::new(VamanaIndex::build(dataset, metric, params, exec)?),
    })
}

pub(crate) fn check_query_dim(dim: usize, queries: &VectorDataset) -> Result<()> {
    if queries.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: queries.dim(),
        });
    }
    Ok(())
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(())
}

/// Rows of the query set as one flat `f32` buffer.
pub(crate) fn query_rows(queries: &VectorDataset) -> std::borrow::Cow<'_, [f32]> {
    queries.as_f32()
}
