// SPDX-License-Identifier: Apache-2.0

//! Typed vector collections, ground-truth containers, binary file formats and
//! seeded synthetic data.

mod io;
mod synthetic;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    decode_knn_gt, decode_range_gt, decode_vectors, encode_knn_gt, encode_range_gt,
    encode_vectors, kind_for_path, read_knn_gt, read_range_gt, read_vectors, write_knn_gt,
    write_range_gt, write_vectors, KNN_GT_EXTENSION, RANGE_GT_EXTENSION,
};
pub use synthetic::{generate_synthetic, QueryMode, Synthetic, SyntheticSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    U8,
    I8,
    F32,
}

impl ScalarKind {
    pub fn width(self) -> usize {
        match self {
            ScalarKind::U8 | ScalarKind::I8 => 1,
            ScalarKind::F32 => 4,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ScalarKind::U8 => "u8bin",
            ScalarKind::I8 => "i8bin",
            ScalarKind::F32 => "fbin",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarKind::U8 => "u8",
            ScalarKind::I8 => "i8",
            ScalarKind::F32 => "f32",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u8" | "uint8" => Ok(ScalarKind::U8),
            "i8" | "int8" => Ok(ScalarKind::I8),
            "f32" | "float32" | "float" => Ok(ScalarKind::F32),
            other => Err(Error::invalid(format!("unknown scalar kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VectorData {
    U8(Vec<u8>),
    I8(Vec<i8>),
    F32(Vec<f32>),
}

impl VectorData {
    pub fn kind(&self) -> ScalarKind {
        match self {
            VectorData::U8(_) => ScalarKind::U8,
            VectorData::I8(_) => ScalarKind::I8,
            VectorData::F32(_) => ScalarKind::F32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VectorData::U8(v) => v.len(),
            VectorData::I8(v) => v.len(),
            VectorData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A row-major, fixed-dimension collection of vectors.
///
/// Immutable once constructed; integer kinds are widened to `f32` whenever
/// arithmetic is needed.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorDataset {
    name: String,
    dim: usize,
    count: usize,
    data: VectorData,
}

impl VectorDataset {
    pub fn new(name: impl Into<String>, dim: usize, data: VectorData) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("vector dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "buffer of {} scalars is not a multiple of dim {dim}",
                data.len()
            )));
        }
        if let VectorData::F32(values) = &data {
            if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite value in row {} column {}",
                    pos / dim,
                    pos % dim
                )));
            }
        }
        Ok(VectorDataset {
            name: name.into(),
            dim,
            count: data.len() / dim,
            data,
        })
    }

    pub fn from_f32(name: impl Into<String>, dim: usize, values: Vec<f32>) -> Result<Self> {
        Self::new(name, dim, VectorData::F32(values))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn kind(&self) -> ScalarKind {
        self.data.kind()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn data(&self) -> &VectorData {
        &self.data
    }

    /// All vectors as one flat `f32` buffer; borrows when already `f32`.
    pub fn as_f32(&self) -> Cow<'_, [f32]> {
        match &self.data {
            VectorData::F32(v) => Cow::Borrowed(v),
            VectorData::U8(v) => Cow::Owned(v.iter().map(|&x| x as f32).collect()),
            VectorData::I8(v) => Cow::Owned(v.iter().map(|&x| x as f32).collect()),
        }
    }

    pub fn row_f32(&self, i: usize) -> Vec<f32> {
        let range = i * self.dim..(i + 1) * self.dim;
        match &self.data {
            VectorData::F32(v) => v[range].to_vec(),
            VectorData::U8(v) => v[range].iter().map(|&x| x as f32).collect(),
            VectorData::I8(v) => v[range].iter().map(|&x| x as f32).collect(),
        }
    }

    /// The first `n` rows; ids in anything computed on the slice refer to
    /// positions within it.
    pub fn slice_prefix(&self, n: usize) -> Result<Self> {
        if n > self.count {
            return Err(Error::invalid(format!(
                "cannot slice {n} rows from a dataset of {}",
                self.count
            )));
        }
        let end = n * self.dim;
        let data = match &self.data {
            VectorData::U8(v) => VectorData::U8(v[..end].to_vec()),
            VectorData::I8(v) => VectorData::I8(v[..end].to_vec()),
            VectorData::F32(v) => VectorData::F32(v[..end].to_vec()),
        };
        Ok(VectorDataset {
            name: self.name.clone(),
            dim: self.dim,
            count: n,
            data,
        })
    }
}

/// Exact k-NN answers: `k` ids and distances per query, closest first.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnGroundTruth {
    k: usize,
    ids: Vec<u32>,
    distances: Vec<f32>,
}

impl KnnGroundTruth {
    pub fn new(k: usize, ids: Vec<u32>, distances: Vec<f32>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("ground truth k must be positive"));
        }
        if ids.len() != distances.len() || !ids.len().is_multiple_of(k) {
            return Err(Error::invalid(format!(
                "ground truth has {} ids and {} distances for k={k}",
                ids.len(),
                distances.len()
            )));
        }
        Ok(KnnGroundTruth { k, ids, distances })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_queries(&self) -> usize {
        self.ids.len() / self.k
    }

    pub fn ids(&self, query: usize) -> &[u32] {
        &self.ids[query * self.k..(query + 1) * self.k]
    }

    pub fn distances(&self, query: usize) -> &[f32] {
        &self.distances[query * self.k..(query + 1) * self.k]
    }

    pub fn all_ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn all_distances(&self) -> &[f32] {
        &self.distances
    }

    /// Keeps only the first `k` neighbors of every query.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k {
            return Err(Error::invalid(format!("cannot truncate k={} to {k}", self.k)));
        }
        let mut ids = Vec::with_capacity(self.num_queries() * k);
        let mut distances = Vec::with_capacity(self.num_queries() * k);
        for q in 0..self.num_queries() {
            ids.extend_from_slice(&self.ids(q)[..k]);
            distances.extend_from_slice(&self.distances(q)[..k]);
        }
        KnnGroundTruth::new(k, ids, distances)
    }
}

/// Exact range answers: a variable-length list per query.
///
/// The radius is not part of the stored format; callers carry it alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeGroundTruth {
    offsets: Vec<usize>,
    ids: Vec<u32>,
    distances: Vec<f32>,
}

impl RangeGroundTruth {
    pub fn from_lists(lists: Vec<Vec<(u32, f32)>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let total = lists.iter().map(Vec::len).sum();
        let mut ids = Vec::with_capacity(total);
        let mut distances = Vec::with_capacity(total);
        for list in lists {
            for (id, d) in list {
                ids.push(id);
                distances.push(d);
            }
            offsets.push(ids.len());
        }
        RangeGroundTruth {
            offsets,
            ids,
            distances,
        }
    }

    pub(crate) fn from_parts(counts: &[u32], ids: Vec<u32>, distances: Vec<f32>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0usize);
        for &c in counts {
            let next = offsets[offsets.len() - 1] + c as usize;
            offsets.push(next);
        }
        if offsets[counts.len()] != ids.len() || ids.len() != distances.len() {
            return Err(Error::format(format!(
                "per-query counts sum to {} but payload holds {} ids and {} distances",
                offsets[counts.len()],
                ids.len(),
                distances.len()
            )));
        }
        Ok(RangeGroundTruth {
            offsets,
            ids,
            distances,
        })
    }

    pub fn num_queries(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self, query: usize) -> &[u32] {
        &self.ids[self.offsets[query]..self.offsets[query + 1]]
    }

    pub fn distances(&self, query: usize) -> &[f32] {
        &self.distances[self.offsets[query]..self.offsets[query + 1]]
    }

    pub fn counts(&self) -> impl Iterator<Item = u32> + '_ {
        self.offsets.windows(2).map(|w| (w[1] - w[0]) as u32)
    }

    pub fn all_ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn all_distances(&self) -> &[f32] {
        &self.distances
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_widths() {
        assert_eq!(ScalarKind::U8.width(), 1);
        assert_eq!(ScalarKind::I8.width(), 1);
        assert_eq!(ScalarKind::F32.width(), 4);
    }

    #[test]
    fn rejects_zero_dim_and_ragged_buffers() {
        assert!(VectorDataset::from_f32("x", 0, vec![]).is_err());
        assert!(VectorDataset::from_f32("x", 3, vec![1.0; 7]).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let err = VectorDataset::from_f32("x", 2, vec![0.0, 1.0, f32::NAN, 2.0]).unwrap_err();
        assert!(err.to_string().contains("row 1"));
        assert!(VectorDataset::from_f32("x", 1, vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn slice_prefix_edges() {
        let ds = VectorDataset::new("d", 2, VectorData::U8(vec![1, 2, 3, 4, 5, 6])).unwrap();
        assert_eq!(ds.slice_prefix(3).unwrap(), ds);
        let empty = ds.slice_prefix(0).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.dim(), 2);
        assert_eq!(ds.slice_prefix(2).unwrap().row_f32(1), vec![3.0, 4.0]);
        assert!(ds.slice_prefix(4).is_err());
    }

    #[test]
    fn widening_is_exact() {
        let ds = VectorDataset::new("d", 2, VectorData::I8(vec![-128, 127])).unwrap();
        assert_eq!(&*ds.as_f32(), &[-128.0, 127.0]);
    }

    #[test]
    fn knn_gt_shape_checks() {
        assert!(KnnGroundTruth::new(0, vec![], vec![]).is_err());
        assert!(KnnGroundTruth::new(2, vec![1, 2, 3], vec![0.0; 3]).is_err());
        let gt = KnnGroundTruth::new(2, vec![1, 2, 3, 4], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(gt.num_queries(), 2);
        assert_eq!(gt.ids(1), &[3, 4]);
        assert_eq!(gt.truncate(1).unwrap().all_ids(), &[1, 3]);
    }
}
