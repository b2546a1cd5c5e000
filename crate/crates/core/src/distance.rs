// SPDX-License-Identifier: Apache-2.0

//! Distance kernels and the metric closeness order.
//!
//! Every search path ranks candidates by a *key* where smaller means closer:
//! squared L2 for [`Metric::L2`] and the negated dot product for
//! [`Metric::InnerProduct`]. Reported distances use the metric's natural
//! value (squared L2, or the raw inner product score).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L2,
    InnerProduct,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::L2 => "l2",
            Metric::InnerProduct => "ip",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(Metric::L2),
            "ip" | "inner_product" | "innerproduct" | "mips" => Ok(Metric::InnerProduct),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }

    /// Ranking key between two vectors; smaller is closer.
    #[inline]
    pub fn key(self, a: &[f32], b: &[f32]) -> f32 {
        match self {
            Metric::L2 => l2_squared(a, b),
            Metric::InnerProduct => -dot(a, b),
        }
    }

    /// Converts a ranking key to the reported distance value.
    #[inline]
    pub fn from_key(self, key: f32) -> f32 {
        match self {
            Metric::L2 => key,
            Metric::InnerProduct => -key,
        }
    }

    /// Converts a reported distance value to a ranking key.
    #[inline]
    pub fn to_key(self, distance: f32) -> f32 {
        self.from_key(distance)
    }

    /// Closeness order on reported distances.
    #[inline]
    pub fn cmp_distance(self, a: f32, b: f32) -> Ordering {
        self.to_key(a).total_cmp(&self.to_key(b))
    }

    /// Natural distance between two vectors.
    #[inline]
    pub fn distance(self, a: &[f32], b: &[f32]) -> f32 {
        self.from_key(self.key(a, b))
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Checked distance between two equal-length vectors.
pub fn compute_distance(a: &[f32], b: &[f32], metric: Metric) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(metric.distance(a, b))
}

/// Squared Euclidean distance. Accumulates in eight independent lanes so the
/// loop vectorizes; the summation order is fixed, so results are identical
/// wherever the same two slices are compared.
#[inline]
pub fn l2_squared(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; LANES];
    let chunks = a.len() / LANES;
    let (a_head, a_tail) = a.split_at(chunks * LANES);
    let (b_head, b_tail) = b.split_at(chunks * LANES);
    for (ca, cb) in a_head.chunks_exact(LANES).zip(b_head.chunks_exact(LANES)) {
        for i in 0..LANES {
            let d = ca[i] - cb[i];
            acc[i] += d * d;
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in a_tail.iter().zip(b_tail) {
        let d = x - y;
        tail += d * d;
    }
    reduce(acc) + tail
}

#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; LANES];
    let chunks = a.len() / LANES;
    let (a_head, a_tail) = a.split_at(chunks * LANES);
    let (b_head, b_tail) = b.split_at(chunks * LANES);
    for (ca, cb) in a_head.chunks_exact(LANES).zip(b_head.chunks_exact(LANES)) {
        for i in 0..LANES {
            acc[i] += ca[i] * cb[i];
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in a_tail.iter().zip(b_tail) {
        tail += x * y;
    }
    reduce(acc) + tail
}

#[inline]
fn reduce(acc: [f32; LANES]) -> f32 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}
