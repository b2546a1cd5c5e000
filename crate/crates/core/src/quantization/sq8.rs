// SPDX-License-Identifier: Apache-2.0

//! Per-dimension 8-bit affine scalar quantization.

use super::check_matrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Sq8Model {
    pub min: Vec<f32>,
    /// `(max - min) / 255` per dimension.
    pub scale: Vec<f32>,
}

impl Sq8Model {
    pub fn train(points: &[f32], dim: usize) -> Result<Self> {
        let n = check_matrix(points, dim)?;
        if n == 0 {
            return Err(Error::invalid("cannot train SQ8 on an empty dataset"));
        }
        let mut min = vec![f32::INFINITY; dim];
        let mut max = vec![f32::NEG_INFINITY; dim];
        for row in points.chunks_exact(dim) {
            for j in 0..dim {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        let scale = min.iter().zip(&max).map(|(lo, hi)| (hi - lo) / 255.0).collect();
        Ok(Sq8Model { min, scale })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    pub fn encode(&self, x: &[f32]) -> Result<Vec<u8>> {
        self.check_dim(x.len())?;
        let mut out = Vec::with_capacity(x.len());
        self.encode_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn encode_into(&self, x: &[f32], out: &mut Vec<u8>) {
        out.extend(x.iter().zip(&self.min).zip(&self.scale).map(|((&v, &lo), &s)| {
            if s > 0.0 {
                ((v as f64 - lo as f64) / s as f64).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        }));
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<Vec<f32>> {
        self.check_dim(bytes.len())?;
        let mut out = vec![0.0; bytes.len()];
        self.decode_into(bytes, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn decode_into(&self, bytes: &[u8], out: &mut [f32]) {
        for (((dst, &b), &lo), &s) in out.iter_mut().zip(bytes).zip(&self.min).zip(&self.scale) {
            *dst = (lo as f64 + b as f64 * s as f64) as f32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_dimension_decodes_to_min() {
        let model = Sq8Model::train(&[3.5, 0.0, 3.5, 1.0], 2).unwrap();
        assert_eq!(model.scale[0], 0.0);
        let code = model.encode(&[3.5, 0.5]).unwrap();
        assert_eq!(code[0], 0);
        assert_eq!(model.decode(&code).unwrap()[0], 3.5);
    }

    #[test]
    fn endpoints_map_to_extreme_codes() {
        let model = Sq8Model::train(&[-2.0, 10.0, 5.0, 20.0, 1.0, 15.0], 2).unwrap();
        assert_eq!(model.encode(&[-2.0, 10.0]).unwrap(), vec![0, 0]);
        assert_eq!(model.encode(&[5.0, 20.0]).unwrap(), vec![255, 255]);
        assert_eq!(model.encode(&[100.0, -100.0]).unwrap(), vec![255, 0]);
    }

    #[test]
    fn dimension_mismatch() {
        let model = Sq8Model::train(&[0.0, 1.0], 2).unwrap();
        assert!(model.encode(&[0.0]).is_err());
        assert!(model.decode(&[0, 0, 0]).is_err());
        assert!(Sq8Model::train(&[], 2).is_err());
    }
}
