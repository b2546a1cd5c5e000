// SPDX-License-Identifier: Apache-2.0

//! `.annidx` container: magic, format version, algorithm tag, metric,
//! JSON parameter block, then algorithm-specific sections. Little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AnnIndex, FlatIndex, IvfIndex, IvfPqIndex, Params, VamanaIndex};
use crate::distance::Metric;
use crate::error::{Error, Result};

pub const INDEX_MAGIC: &[u8; 8] = b"ANNIDX\0\0";
pub const INDEX_FORMAT_VERSION: u32 = 1;
pub const INDEX_EXTENSION: &str = "annidx";

pub(crate) struct SectionWriter<'a> {
    out: &'a mut dyn Write,
}

impl<'a> SectionWriter<'a> {
    pub fn new(out: &'a mut dyn Write) -> Self {
        SectionWriter { out }
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.out.write_all(&[v])?;
        Ok(())
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.out.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.out.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn len(&mut self, v: usize) -> Result<()> {
        self.u64(v as u64)
    }

    pub fn bytes(&mut self, v: &[u8]) -> Result<()> {
        self.len(v.len())?;
        self.out.write_all(v)?;
        Ok(())
    }

    pub fn f32s(&mut self, v: &[f32]) -> Result<()> {
        self.len(v.len())?;
        let mut buf = Vec::with_capacity(v.len() * 4);
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.out.write_all(&buf)?;
        Ok(())
    }

    pub fn u32s(&mut self, v: &[u32]) -> Result<()> {
        self.len(v.len())?;
        let mut buf = Vec::with_capacity(v.len() * 4);
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.out.write_all(&buf)?;
        Ok(())
    }

    pub fn header(&mut self, algorithm: &str, metric: Metric, params: &Params) -> Result<()> {
        self.out.write_all(INDEX_MAGIC)?;
        self.u32(INDEX_FORMAT_VERSION)?;
        self.bytes(algorithm.as_bytes())?;
        self.u8(metric_tag(metric))?;
        self.bytes(&serde_json::to_vec(params)?)
    }
}

pub(crate) struct SectionReader<'a> {
    input: &'a mut dyn Read,
}

impl<'a> SectionReader<'a> {
    pub fn new(input: &'a mut dyn Read) -> Self {
        SectionReader { input }
    }

    fn exact<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.input
            .read_exact(&mut buf)
            .map_err(|e| Error::format(format!("truncated index file: {e}")))?;
        Ok(buf)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.exact::<1>()?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.exact()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.exact()?))
    }

    pub fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::format("section length overflow"))
    }

    fn raw(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.input.take(n as u64).read_to_end(&mut buf)?;
        if buf.len() != n {
            return Err(Error::format(format!(
                "truncated index section: wanted {n} bytes, got {}",
                buf.len()
            )));
        }
        Ok(buf)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.len()?;
        self.raw(n)
    }

    pub fn f32s(&mut self) -> Result<Vec<f32>> {
        let n = self.len()?;
        let buf = self.raw(n.checked_mul(4).ok_or_else(|| Error::format("section too large"))?)?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn u32s(&mut self) -> Result<Vec<u32>> {
        let n = self.len()?;
        let buf = self.raw(n.checked_mul(4).ok_or_else(|| Error::format("section too large"))?)?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Reads the common header and returns `(algorithm, metric, params)`.
    pub fn header(&mut self) -> Result<(String, Metric, Params)> {
        let magic = self.exact::<8>()?;
        if &magic != INDEX_MAGIC {
            return Err(Error::format("not an annidx file (bad magic)"));
        }
        let version = self.u32()?;
        if version != INDEX_FORMAT_VERSION {
            return Err(Error::format(format!(
                "unsupported index format version {version}"
            )));
        }
        let algorithm = String::from_utf8(self.bytes()?)
            .map_err(|_| Error::format("algorithm tag is not UTF-8"))?;
        let metric = metric_from_tag(self.u8()?)?;
        let params = serde_json::from_slice(&self.bytes()?)?;
        Ok((algorithm, metric, params))
    }
}

fn metric_tag(metric: Metric) -> u8 {
    match metric {
        Metric::L2 => 0,
        Metric::InnerProduct => 1,
    }
}

fn metric_from_tag(tag: u8) -> Result<Metric> {
    match tag {
        0 => Ok(Metric::L2),
        1 => Ok(Metric::InnerProduct),
        other => Err(Error::format(format!("unknown metric tag {other}"))),
    }
}

pub fn save_index(index: &dyn AnnIndex, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    index.save(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<Box<dyn AnnIndex>> {
    let mut r = BufReader::new(File::open(path)?);
    read_index(&mut r)
}

pub fn read_index(input: &mut dyn Read) -> Result<Box<dyn AnnIndex>> {
    let mut reader = SectionReader::new(input);
    let (algorithm, metric, params) = reader.header()?;
    Ok(match algorithm.as_str() {
        "flat" => Box::new(FlatIndex::read_body(&mut reader, metric, params)?),
        "ivf" => Box::new(IvfIndex::read_body(&mut reader, metric, params)?),
        "ivfpq" => Box::new(IvfPqIndex::read_body(&mut reader, metric, params)?),
        "vamana" => Box::new(VamanaIndex::read_body(&mut reader, metric, params)?),
        other => return Err(Error::format(format!("unknown algorithm tag `{other}`"))),
    })
}

/// Serialized bytes of an index, used for equality and mutation checks.
pub fn index_bytes(index: &dyn AnnIndex) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    index.save(&mut buf)?;
    Ok(buf)
}
