// SPDX-License-Identifier: Apache-2.0

//! Vector codecs behind the baseline indexes.

mod kmeans;
mod pq;
mod sq8;

pub use kmeans::{kmeans_train, nearest_centroid, training_sample, KMeansModel};
pub use pq::{AdcTable, PqCodebook};
pub use sq8::Sq8Model;

use crate::error::{Error, Result};

pub(crate) fn check_matrix(points: &[f32], dim: usize) -> Result<usize> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !points.len().is_multiple_of(dim) {
        return Err(Error::invalid(format!(
            "{} values do not form rows of dim {dim}",
            points.len()
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    Ok(points.len() / dim)
}
