// SPDX-License-Identifier: Apache-2.0

//! Product quantization with asymmetric distance computation (ADC).

use super::{check_matrix, kmeans_train};
use crate::distance::{dot, l2_squared, Metric};
use crate::error::{Error, Result};
use crate::exec::Executor;

const DEFAULT_TRAIN_ITERS: usize = 25;

/// `m` sub-codebooks of `2^nbits` centroids each over `dim / m` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PqCodebook {
    dim: usize,
    m: usize,
    nbits: u32,
    /// `m x ksub x sub_dim`.
    centroids: Vec<f32>,
}

impl PqCodebook {
    pub fn from_parts(dim: usize, m: usize, nbits: u32, centroids: Vec<f32>) -> Result<Self> {
        check_shape(dim, m, nbits)?;
        let expected = m * (1usize << nbits) * (dim / m);
        if centroids.len() != expected {
            return Err(Error::invalid(format!(
                "codebook holds {} values, expected {expected}",
                centroids.len()
            )));
        }
        Ok(PqCodebook {
            dim,
            m,
            nbits,
            centroids,
        })
    }

    /// Trains each subspace independently with k-means.
    pub fn train(
        points: &[f32],
        dim: usize,
        m: usize,
        nbits: u32,
        seed: u64,
        exec: &Executor,
    ) -> Result<Self> {
        Self::train_with_iters(points, dim, m, nbits, seed, DEFAULT_TRAIN_ITERS, exec)
    }

    pub fn train_with_iters(
        points: &[f32],
        dim: usize,
        m: usize,
        nbits: u32,
        seed: u64,
        max_iters: usize,
        exec: &Executor,
    ) -> Result<Self> {
        check_shape(dim, m, nbits)?;
        let n = check_matrix(points, dim)?;
        let ksub = 1usize << nbits;
        if n < ksub {
            return Err(Error::invalid(format!(
                "{n} training points cannot fill {ksub} centroids per subspace"
            )));
        }
        let sub_dim = dim / m;
        let mut centroids = Vec::with_capacity(m * ksub * sub_dim);
        for j in 0..m {
            let slice: Vec<f32> = points
                .chunks_exact(dim)
                .flat_map(|row| row[j * sub_dim..(j + 1) * sub_dim].iter().copied())
                .collect();
            let model = kmeans_train(
                &slice,
                sub_dim,
                ksub,
                max_iters,
                seed.wrapping_add(j as u64),
                exec,
            )?;
            centroids.extend_from_slice(&model.centroids);
        }
        Ok(PqCodebook {
            dim,
            m,
            nbits,
            centroids,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nbits(&self) -> u32 {
        self.nbits
    }

    pub fn ksub(&self) -> usize {
        1 << self.nbits
    }

    pub fn sub_dim(&self) -> usize {
        self.dim / self.m
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    /// Bytes per packed code: one or two bytes per subspace.
    pub fn code_size(&self) -> usize {
        self.m * self.sub_code_width()
    }

    fn sub_code_width(&self) -> usize {
        if self.nbits <= 8 {
            1
        } else {
            2
        }
    }

    pub fn centroid(&self, sub: usize, c: usize) -> &[f32] {
        let sd = self.sub_dim();
        let start = (sub * self.ksub() + c) * sd;
        &self.centroids[start..start + sd]
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: len,
            });
        }
        Ok(())
    }

    /// Nearest centroid per subspace; ties go to the lowest index.
    pub fn encode(&self, x: &[f32]) -> Result<Vec<u16>> {
        self.check_dim(x.len())?;
        Ok(self.encode_unchecked(x))
    }

    pub(crate) fn encode_unchecked(&self, x: &[f32]) -> Vec<u16> {
        let sd = self.sub_dim();
        (0..self.m)
            .map(|j| {
                let sub = &x[j * sd..(j + 1) * sd];
                let mut best = (0u16, f32::INFINITY);
                for c in 0..self.ksub() {
                    let d = l2_squared(sub, self.centroid(j, c));
                    if d < best.1 {
                        best = (c as u16, d);
                    }
                }
                best.0
            })
            .collect()
    }

    pub fn decode(&self, code: &[u16]) -> Result<Vec<f32>> {
        self.check_code(code)?;
        let mut out = Vec::with_capacity(self.dim);
        for (j, &c) in code.iter().enumerate() {
            out.extend_from_slice(self.centroid(j, c as usize));
        }
        Ok(out)
    }

    fn check_code(&self, code: &[u16]) -> Result<()> {
        if code.len() != self.m {
            return Err(Error::invalid(format!(
                "code has {} entries, expected {}",
                code.len(),
                self.m
            )));
        }
        if let Some(&bad) = code.iter().find(|&&c| c as usize >= self.ksub()) {
            return Err(Error::invalid(format!(
                "code entry {bad} out of range for nbits={}",
                self.nbits
            )));
        }
        Ok(())
    }

    pub fn pack(&self, code: &[u16], out: &mut Vec<u8>) {
        if self.sub_code_width() == 1 {
            out.extend(code.iter().map(|&c| c as u8));
        } else {
            for &c in code {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }

    pub fn unpack(&self, packed: &[u8]) -> Vec<u16> {
        if self.sub_code_width() == 1 {
            packed.iter().map(|&b| b as u16).collect()
        } else {
            packed
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect()
        }
    }

    /// Squared-L2 sub-distance table for `query`.
    pub fn adc_table(&self, query: &[f32]) -> Result<AdcTable> {
        self.check_dim(query.len())?;
        Ok(self.table_unchecked(query, Metric::L2))
    }

    /// Table of per-subspace ranking keys (squared L2, or negated dot products).
    pub(crate) fn table_unchecked(&self, query: &[f32], metric: Metric) -> AdcTable {
        let sd = self.sub_dim();
        let ksub = self.ksub();
        let mut values = Vec::with_capacity(self.m * ksub);
        for j in 0..self.m {
            let sub = &query[j * sd..(j + 1) * sd];
            for c in 0..ksub {
                let centroid = self.centroid(j, c);
                values.push(match metric {
                    Metric::L2 => l2_squared(sub, centroid),
                    Metric::InnerProduct => -dot(sub, centroid),
                });
            }
        }
        AdcTable {
            m: self.m,
            ksub,
            wide: self.sub_code_width() == 2,
            values,
        }
    }
}

fn check_shape(dim: usize, m: usize, nbits: u32) -> Result<()> {
    if m == 0 || dim == 0 {
        return Err(Error::invalid("dim and m must be positive"));
    }
    if !dim.is_multiple_of(m) {
        return Err(Error::invalid(format!(
            "dimension {dim} is not divisible into {m} subspaces"
        )));
    }
    if !(1..=16).contains(&nbits) {
        return Err(Error::invalid(format!("nbits must be in 1..=16, got {nbits}")));
    }
    Ok(())
}

/// Precomputed per-subspace distances from one query to every sub-centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct AdcTable {
    m: usize,
    ksub: usize,
    wide: bool,
    values: Vec<f32>,
}

impl AdcTable {
    pub fn row(&self, sub: usize) -> &[f32] {
        &self.values[sub * self.ksub..(sub + 1) * self.ksub]
    }

    /// Sum of table entries selected by `code`, accumulated in subspace order.
    pub fn lookup(&self, code: &[u16]) -> f32 {
        code.iter()
            .enumerate()
            .map(|(j, &c)| self.values[j * self.ksub + c as usize])
            .fold(0.0, |acc, v| acc + v)
    }

    #[inline]
    pub(crate) fn lookup_packed(&self, packed: &[u8]) -> f32 {
        let mut acc = 0.0f32;
        if self.wide {
            for (j, c) in packed.chunks_exact(2).enumerate() {
                acc += self.values[j * self.ksub + u16::from_le_bytes([c[0], c[1]]) as usize];
            }
        } else {
            for (j, &c) in packed.iter().enumerate() {
                acc += self.values[j * self.ksub + c as usize];
            }
        }
        debug_assert_eq!(packed.len(), self.m * if self.wide { 2 } else { 1 });
        acc
    }
}
