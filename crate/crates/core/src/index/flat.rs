// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use super::persist::{SectionReader, SectionWriter};
use super::{
    check_k, check_query_dim, query_rows, AnnIndex, IndexDescription, Params, ResultSet,
    SearchParams,
};
use crate::dataset::VectorDataset;
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::oracle::{check_range_args, knn_scan, range_scan};

pub(crate) const BUILD_KEYS: &[&str] = &[];
pub(crate) const SEARCH_KEYS: &[&str] = &[];

/// Exhaustive scan; answers are identical to the brute-force oracle.
pub struct FlatIndex {
    dim: usize,
    metric: Metric,
    vectors: Vec<f32>,
}

impl FlatIndex {
    pub fn build(dataset: &VectorDataset, metric: Metric, params: &Params) -> Result<Self> {
        params.validate(BUILD_KEYS, "flat build")?;
        Ok(FlatIndex {
            dim: dataset.dim(),
            metric,
            vectors: dataset.as_f32().into_owned(),
        })
    }

    pub(crate) fn read_body(
        r: &mut SectionReader<'_>,
        metric: Metric,
        _params: Params,
    ) -> Result<Self> {
        let dim = r.u32()? as usize;
        let vectors = r.f32s()?;
        if dim == 0 || vectors.len() % dim != 0 {
            return Err(Error::format("flat index vectors do not match dim"));
        }
        Ok(FlatIndex {
            dim,
            metric,
            vectors,
        })
    }
}

impl AnnIndex for FlatIndex {
    fn describe(&self) -> IndexDescription {
        IndexDescription {
            algorithm: "flat".into(),
            metric: self.metric,
            params: Params::new(),
        }
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    fn metric(&self) -> Metric {
        self.metric
    }

    fn search_knn(
        &self,
        queries: &VectorDataset,
        k: usize,
        params: &SearchParams,
        exec: &Executor,
    ) -> Result<ResultSet> {
        params.validate(SEARCH_KEYS, "flat search")?;
        check_query_dim(self.dim, queries)?;
        check_k(k)?;
        let rows = query_rows(queries);
        let dim = self.dim;
        Ok(ResultSet::from_lists(exec.map(queries.len(), |q| {
            knn_scan(&self.vectors, dim, &rows[q * dim..(q + 1) * dim], k, self.metric)
        })))
    }

    fn search_range(
        &self,
        queries: &VectorDataset,
        radius: f32,
        params: &SearchParams,
        exec: &Executor,
    ) -> Result<ResultSet> {
        params.validate(SEARCH_KEYS, "flat search")?;
        check_query_dim(self.dim, queries)?;
        check_range_args(radius, self.metric)?;
        let rows = query_rows(queries);
        let dim = self.dim;
        Ok(ResultSet::from_lists(exec.map(queries.len(), |q| {
            range_scan(&self.vectors, dim, &rows[q * dim..(q + 1) * dim], radius)
        })))
    }

    fn index_size_bytes(&self) -> u64 {
        (self.vectors.len() * 4) as u64
    }

    fn save(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = SectionWriter::new(out);
        w.header("flat", self.metric, &Params::new())?;
        w.u32(self.dim as u32)?;
        w.f32s(&self.vectors)
    }
}
