// SPDX-License-Identifier: Apache-2.0

//! Exact brute-force k-NN and range search.
//!
//! Ties are broken by ascending id, so ground truth is deterministic. Queries
//! are split across the executor's workers; output does not depend on how
//! many there are.

use crate::dataset::{KnnGroundTruth, RangeGroundTruth, VectorDataset};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::index::topk::TopK;
use crate::index::Neighbor;

fn check_dims(base: &VectorDataset, queries: &VectorDataset) -> Result<()> {
    if base.dim() != queries.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            actual: queries.dim(),
        });
    }
    Ok(())
}

/// Exact top-`k` of one query over a flat `f32` matrix.
pub(crate) fn knn_scan(
    base: &[f32],
    dim: usize,
    query: &[f32],
    k: usize,
    metric: Metric,
) -> Vec<Neighbor> {
    let mut top = TopK::new(k);
    for (id, row) in base.chunks_exact(dim).enumerate() {
        top.push(metric.key(query, row), id as u32);
    }
    top.into_sorted()
        .into_iter()
        .map(|s| Neighbor::new(s.id, metric.from_key(s.key)))
        .collect()
}

/// All points within squared L2 `radius` of one query, sorted by (distance, id).
pub(crate) fn range_scan(base: &[f32], dim: usize, query: &[f32], radius: f32) -> Vec<Neighbor> {
    let mut hits: Vec<Neighbor> = base
        .chunks_exact(dim)
        .enumerate()
        .filter_map(|(id, row)| {
            let d = Metric::L2.key(query, row);
            (d <= radius).then_some(Neighbor::new(id as u32, d))
        })
        .collect();
    sort_neighbors(&mut hits, Metric::L2);
    hits
}

pub(crate) fn sort_neighbors(list: &mut [Neighbor], metric: Metric) {
    list.sort_by(|a, b| {
        metric
            .cmp_distance(a.distance, b.distance)
            .then(a.id.cmp(&b.id))
    });
}

pub(crate) fn check_range_args(radius: f32, metric: Metric) -> Result<()> {
    if metric != Metric::L2 {
        return Err(Error::Unsupported(
            "range search is only defined for the L2 metric".into(),
        ));
    }
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!("radius must be non-negative, got {radius}")));
    }
    Ok(())
}

pub fn brute_force_knn(
    base: &VectorDataset,
    queries: &VectorDataset,
    k: usize,
    metric: Metric,
    exec: &Executor,
) -> Result<KnnGroundTruth> {
    check_dims(base, queries)?;
    if base.is_empty() {
        return Err(Error::invalid("base dataset is empty"));
    }
    if k == 0 || k > base.len() {
        return Err(Error::invalid(format!(
            "k={k} must be in 1..={} (base size)",
            base.len()
        )));
    }
    let dim = base.dim();
    let base_f = base.as_f32();
    let query_f = queries.as_f32();
    let lists = exec.map(queries.len(), |q| {
        knn_scan(&base_f, dim, &query_f[q * dim..(q + 1) * dim], k, metric)
    });
    let mut ids = Vec::with_capacity(queries.len() * k);
    let mut distances = Vec::with_capacity(queries.len() * k);
    for list in lists {
        for n in list {
            ids.push(n.id);
            distances.push(n.distance);
        }
    }
    KnnGroundTruth::new(k, ids, distances)
}

/// `radius` is in squared-L2 units.
pub fn brute_force_range(
    base: &VectorDataset,
    queries: &VectorDataset,
    radius: f32,
    metric: Metric,
    exec: &Executor,
) -> Result<RangeGroundTruth> {
    check_dims(base, queries)?;
    check_range_args(radius, metric)?;
    let dim = base.dim();
    let base_f = base.as_f32();
    let query_f = queries.as_f32();
    let lists = exec.map(queries.len(), |q| {
        range_scan(&base_f, dim, &query_f[q * dim..(q + 1) * dim], radius)
            .into_iter()
            .map(|n| (n.id, n.distance))
            .collect()
    });
    Ok(RangeGroundTruth::from_lists(lists))
}
