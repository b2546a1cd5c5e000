// SPDX-License-Identifier: Apache-2.0

//! Seeded Gaussian-mixture datasets standing in for the real billion-scale
//! collections.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ScalarKind, VectorData, VectorDataset};
use crate::error::{Error, Result};

const BASE_STREAM: u64 = 0;
const QUERY_STREAM: u64 = 1;
const OOD_CENTER_STREAM: u64 = 2;

/// Out-of-distribution queries use a wider spread than the base mixture.
const OOD_STD_FACTOR: f64 = 2.0;
/// Per-coordinate mean shift for out-of-distribution clusters, as a fraction
/// of the kind's value range.
const OOD_SHIFT_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    InDistribution,
    OutOfDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub dim: usize,
    pub kind: ScalarKind,
    pub n_clusters: usize,
    /// Standard deviation in the kind's value units.
    pub cluster_std: f64,
    pub n_queries: usize,
    pub seed: u64,
    pub query_mode: QueryMode,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim must be at least 1"));
        }
        if self.n_clusters == 0 {
            return Err(Error::invalid("n_clusters must be at least 1"));
        }
        if self.n_clusters > self.n {
            return Err(Error::invalid(format!(
                "n_clusters {} exceeds n {}",
                self.n_clusters, self.n
            )));
        }
        if !(self.cluster_std > 0.0 && self.cluster_std.is_finite()) {
            return Err(Error::invalid(format!(
                "cluster_std must be positive, got {}",
                self.cluster_std
            )));
        }
        if self.n_queries == 0 {
            return Err(Error::invalid("n_queries must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthetic {
    pub base: VectorDataset,
    pub queries: VectorDataset,
    /// Mixture means of the base distribution, `n_clusters x dim`.
    pub centers: Vec<f32>,
}

fn value_range(kind: ScalarKind) -> (f64, f64) {
    match kind {
        ScalarKind::U8 => (0.0, 255.0),
        ScalarKind::I8 => (-128.0, 127.0),
        ScalarKind::F32 => (-1.0, 1.0),
    }
}

fn sample_centers(rng: &mut ChaCha8Rng, kind: ScalarKind, count: usize, dim: usize) -> Vec<f32> {
    let (lo, hi) = value_range(kind);
    let margin = 0.15 * (hi - lo);
    (0..count * dim)
        .map(|_| rng.random_range(lo + margin..hi - margin) as f32)
        .collect()
}

fn sample_rows(
    rng: &mut ChaCha8Rng,
    centers: &[f32],
    dim: usize,
    rows: usize,
    std: f64,
) -> Vec<f64> {
    let n_clusters = centers.len() / dim;
    let mut out = Vec::with_capacity(rows * dim);
    for _ in 0..rows {
        let c = rng.random_range(0..n_clusters);
        let mean = &centers[c * dim..(c + 1) * dim];
        for &m in mean {
            let z: f64 = rng.sample(StandardNormal);
            out.push(m as f64 + std * z);
        }
    }
    out
}

fn quantize(kind: ScalarKind, values: Vec<f64>) -> VectorData {
    match kind {
        ScalarKind::U8 => VectorData::U8(
            values
                .into_iter()
                .map(|v| v.round().clamp(0.0, 255.0) as u8)
                .collect(),
        ),
        ScalarKind::I8 => VectorData::I8(
            values
                .into_iter()
                .map(|v| v.round().clamp(-128.0, 127.0) as i8)
                .collect(),
        ),
        ScalarKind::F32 => VectorData::F32(values.into_iter().map(|v| v as f32).collect()),
    }
}

/// Generates a base set and a query set; a pure function of `spec`.
///
/// Base rows come from a mixture of `n_clusters` isotropic Gaussians. In
/// out-of-distribution mode queries come from a second mixture with shifted
/// means and a wider spread.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let dim = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(BASE_STREAM);
    let centers = sample_centers(&mut rng, spec.kind, spec.n_clusters, dim);
    let base_values = sample_rows(&mut rng, &centers, dim, spec.n, spec.cluster_std);

    let mut qrng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (query_centers, query_std) = match spec.query_mode {
        QueryMode::InDistribution => (centers.clone(), spec.cluster_std),
        QueryMode::OutOfDistribution => {
            qrng.set_stream(OOD_CENTER_STREAM);
            let (lo, hi) = value_range(spec.kind);
            let shift = OOD_SHIFT_FRACTION * (hi - lo);
            let shifted = sample_centers(&mut qrng, spec.kind, spec.n_clusters, dim)
                .into_iter()
                .enumerate()
                .map(|(i, c)| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    (c as f64 + sign * shift).clamp(lo, hi) as f32
                })
                .collect();
            (shifted, spec.cluster_std * OOD_STD_FACTOR)
        }
    };
    qrng.set_stream(QUERY_STREAM);
    let query_values = sample_rows(
        &mut qrng,
        &query_centers,
        dim,
        spec.n_queries,
        query_std,
    );

    Ok(Synthetic {
        base: VectorDataset::new("base", dim, quantize(spec.kind, base_values))?,
        queries: VectorDataset::new("queries", dim, quantize(spec.kind, query_values))?,
        centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ScalarKind) -> SyntheticSpec {
        SyntheticSpec {
            n: 500,
            dim: 8,
            kind,
            n_clusters: 4,
            cluster_std: 5.0,
            n_queries: 20,
            seed: 42,
            query_mode: QueryMode::InDistribution,
        }
    }

    #[test]
    fn deterministic_for_every_kind() {
        for kind in [ScalarKind::U8, ScalarKind::I8, ScalarKind::F32] {
            let a = generate_synthetic(&spec(kind)).unwrap();
            let b = generate_synthetic(&spec(kind)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.base.len(), 500);
            assert_eq!(a.queries.len(), 20);
            assert_eq!(a.base.kind(), kind);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_synthetic(&spec(ScalarKind::U8)).unwrap();
        let b = generate_synthetic(&SyntheticSpec { seed: 43, ..spec(ScalarKind::U8) }).unwrap();
        assert_ne!(a.base, b.base);
    }

    #[test]
    fn vanishing_variance_collapses_to_the_mean() {
        for kind in [ScalarKind::F32, ScalarKind::U8, ScalarKind::I8] {
            let s = SyntheticSpec {
                n_clusters: 1,
                cluster_std: 1e-12,
                ..spec(kind)
            };
            let out = generate_synthetic(&s).unwrap();
            let expected: Vec<f32> = match kind {
                ScalarKind::F32 => out.centers.clone(),
                ScalarKind::U8 => out.centers.iter().map(|c| c.round().clamp(0.0, 255.0)).collect(),
                ScalarKind::I8 => out
                    .centers
                    .iter()
                    .map(|c| c.round().clamp(-128.0, 127.0))
                    .collect(),
            };
            for i in 0..out.base.len() {
                assert_eq!(out.base.row_f32(i), expected);
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let base = spec(ScalarKind::F32);
        assert!(generate_synthetic(&SyntheticSpec { n_clusters: 501, ..base.clone() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { n_clusters: 0, ..base.clone() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { cluster_std: 0.0, ..base.clone() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { cluster_std: -1.0, ..base.clone() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { n_queries: 0, ..base }).is_err());
    }

    #[test]
    fn base_is_independent_of_query_count() {
        let a = generate_synthetic(&spec(ScalarKind::F32)).unwrap();
        let b = generate_synthetic(&SyntheticSpec { n_queries: 3, ..spec(ScalarKind::F32) }).unwrap();
        assert_eq!(a.base, b.base);
    }
}
