// SPDX-License-Identifier: Apache-2.0

//! Binary layouts, all little-endian:
//!
//! * vectors (`.u8bin`, `.i8bin`, `.fbin`): `u32 count, u32 dim`, then
//!   `count * dim` row-major scalars.
//! * k-NN ground truth (`.knn.gt`): `u32 n_queries, u32 k`, then
//!   `n_queries * k` u32 ids, then `n_queries * k` f32 distances.
//! * range ground truth (`.range.gt`): `u32 n_queries, u32 total`, then
//!   `n_queries` u32 counts, `total` u32 ids, `total` f32 distances.
//!
//! L2 distances are stored squared.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{KnnGroundTruth, RangeGroundTruth, ScalarKind, VectorData, VectorDataset};
use crate::error::{Error, Result};

pub const KNN_GT_EXTENSION: &str = "knn.gt";
pub const RANGE_GT_EXTENSION: &str = "range.gt";

const HEADER_LEN: usize = 8;

/// Scalar kind implied by a vector file's extension.
pub fn kind_for_path(path: &Path) -> Result<ScalarKind> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("u8bin") => Ok(ScalarKind::U8),
        Some("i8bin") => Ok(ScalarKind::I8),
        Some("fbin") => Ok(ScalarKind::F32),
        _ => Err(Error::invalid(format!(
            "unknown vector file extension: {}",
            path.display()
        ))),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string()
}

fn to_u32(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::invalid(format!("{what} {value} exceeds u32")))
}

fn header(a: u32, b: u32) -> [u8; HEADER_LEN] {
    let mut out = [0u8; HEADER_LEN];
    out[..4].copy_from_slice(&a.to_le_bytes());
    out[4..].copy_from_slice(&b.to_le_bytes());
    out
}

fn read_header(bytes: &[u8]) -> Result<(u32, u32)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(format!(
            "file of {} bytes is shorter than the 8-byte header",
            bytes.len()
        )));
    }
    let a = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let b = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    Ok((a, b))
}

fn u32s(bytes: &[u8]) -> Vec<u32> {
    bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

fn f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

fn push_u32s(out: &mut Vec<u8>, values: &[u32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    Ok(bytes)
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

/// Serializes a dataset into the vector-file byte layout.
pub fn encode_vectors(dataset: &VectorDataset) -> Result<Vec<u8>> {
    let count = to_u32(dataset.len(), "vector count")?;
    let dim = to_u32(dataset.dim(), "dimension")?;
    let mut out = Vec::with_capacity(HEADER_LEN + dataset.data().len() * dataset.kind().width());
    out.extend_from_slice(&header(count, dim));
    match dataset.data() {
        VectorData::U8(v) => out.extend_from_slice(v),
        VectorData::I8(v) => out.extend(v.iter().map(|&x| x as u8)),
        VectorData::F32(v) => push_f32s(&mut out, v),
    }
    Ok(out)
}

/// Parses vector-file bytes of a known scalar kind.
pub fn decode_vectors(bytes: &[u8], kind: ScalarKind, name: &str) -> Result<VectorDataset> {
    let (count, dim) = read_header(bytes)?;
    if dim == 0 {
        return Err(Error::format("header declares zero dimension"));
    }
    let scalars = count as usize * dim as usize;
    let expected = HEADER_LEN + scalars * kind.width();
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "header declares {count}x{dim} {kind} ({expected} bytes) but file has {} bytes",
            bytes.len()
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    let data = match kind {
        ScalarKind::U8 => VectorData::U8(payload.to_vec()),
        ScalarKind::I8 => VectorData::I8(payload.iter().map(|&b| b as i8).collect()),
        ScalarKind::F32 => VectorData::F32(f32s(payload)),
    };
    VectorDataset::new(name, dim as usize, data)
}

pub fn write_vectors(dataset: &VectorDataset, path: &Path) -> Result<()> {
    let kind = kind_for_path(path)?;
    if kind != dataset.kind() {
        return Err(Error::invalid(format!(
            "{} dataset cannot be written to {}",
            dataset.kind(),
            path.display()
        )));
    }
    write_all(path, &encode_vectors(dataset)?)
}

pub fn read_vectors(path: &Path) -> Result<VectorDataset> {
    let kind = kind_for_path(path)?;
    let bytes = read_all(path)?;
    decode_vectors(&bytes, kind, &stem(path))
}

pub fn encode_knn_gt(gt: &KnnGroundTruth) -> Result<Vec<u8>> {
    let nq = to_u32(gt.num_queries(), "query count")?;
    let k = to_u32(gt.k(), "k")?;
    let mut out = Vec::with_capacity(HEADER_LEN + gt.all_ids().len() * 8);
    out.extend_from_slice(&header(nq, k));
    push_u32s(&mut out, gt.all_ids());
    push_f32s(&mut out, gt.all_distances());
    Ok(out)
}

pub fn decode_knn_gt(bytes: &[u8]) -> Result<KnnGroundTruth> {
    let (nq, k) = read_header(bytes)?;
    if k == 0 {
        return Err(Error::format("k-NN ground truth declares k=0"));
    }
    let entries = nq as usize * k as usize;
    let expected = HEADER_LEN + entries * 8;
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "header declares {nq} queries x k={k} ({expected} bytes) but file has {} bytes",
            bytes.len()
        )));
    }
    let ids = u32s(&bytes[HEADER_LEN..HEADER_LEN + entries * 4]);
    let distances = f32s(&bytes[HEADER_LEN + entries * 4..]);
    KnnGroundTruth::new(k as usize, ids, distances)
}

pub fn encode_range_gt(gt: &RangeGroundTruth) -> Result<Vec<u8>> {
    let nq = to_u32(gt.num_queries(), "query count")?;
    let total = to_u32(gt.total(), "result total")?;
    let mut out = Vec::with_capacity(HEADER_LEN + gt.num_queries() * 4 + gt.total() * 8);
    out.extend_from_slice(&header(nq, total));
    let counts: Vec<u32> = gt.counts().collect();
    push_u32s(&mut out, &counts);
    push_u32s(&mut out, gt.all_ids());
    push_f32s(&mut out, gt.all_distances());
    Ok(out)
}

pub fn decode_range_gt(bytes: &[u8]) -> Result<RangeGroundTruth> {
    let (nq, total) = read_header(bytes)?;
    let (nq, total) = (nq as usize, total as usize);
    let expected = HEADER_LEN + nq * 4 + total * 8;
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "header declares {nq} queries and {total} results ({expected} bytes) but file has {} bytes",
            bytes.len()
        )));
    }
    let counts_end = HEADER_LEN + nq * 4;
    let ids_end = counts_end + total * 4;
    let counts = u32s(&bytes[HEADER_LEN..counts_end]);
    let ids = u32s(&bytes[counts_end..ids_end]);
    let distances = f32s(&bytes[ids_end..]);
    RangeGroundTruth::from_parts(&counts, ids, distances)
}

pub fn write_knn_gt(gt: &KnnGroundTruth, path: &Path) -> Result<()> {
    write_all(path, &encode_knn_gt(gt)?)
}

pub fn read_knn_gt(path: &Path) -> Result<KnnGroundTruth> {
    decode_knn_gt(&read_all(path)?)
}

pub fn write_range_gt(gt: &RangeGroundTruth, path: &Path) -> Result<()> {
    write_all(path, &encode_range_gt(gt)?)
}

pub fn read_range_gt(path: &Path) -> Result<RangeGroundTruth> {
    decode_range_gt(&read_all(path)?)
}
