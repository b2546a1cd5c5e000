// SPDX-License-Identifier: Apache-2.0

//! IVF with product-quantized residuals, searched by ADC.

use std::io::Write;

use super::ivf::{CoarseConfig, CoarseQuantizer};
use super::persist::{SectionReader, SectionWriter};
use super::topk::TopK;
use super::{
    check_k, check_query_dim, query_rows, AnnIndex, IndexDescription, Neighbor, Params,
    ResultSet, SearchParams,
};
use crate::dataset::VectorDataset;
use crate::distance::{dot, Metric};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::quantization::{training_sample, PqCodebook};

pub(crate) const BUILD_KEYS: &[&str] = &[
    "nlist",
    "seed",
    "kmeans_iters",
    "train_sample",
    "m",
    "nbits",
    "pq_iters",
    "pq_train_sample",
    "keep_raw",
];
pub(crate) const SEARCH_KEYS: &[&str] = &["nprobe", "rerank"];

const DEFAULT_NBITS: usize = 8;
const DEFAULT_PQ_ITERS: usize = 25;

pub struct IvfPqIndex {
    quantizer: CoarseQuantizer,
    codebook: PqCodebook,
    /// Packed residual codes in list order.
    codes: Vec<u8>,
    /// Original vectors by id, kept only when `keep_raw` is set.
    raw: Option<Vec<f32>>,
    resolved: Params,
}

impl IvfPqIndex {
    pub fn build(
        dataset: &VectorDataset,
        metric: Metric,
        params: &Params,
        exec: &Executor,
    ) -> Result<Self> {
        params.validate(BUILD_KEYS, "ivfpq build")?;
        if dataset.is_empty() {
            return Err(Error::invalid("cannot build an IVFPQ index on an empty dataset"));
        }
        let dim = dataset.dim();
        let cfg = CoarseConfig::from_params(params, dataset.len())?;
        let m = params.get_usize("m", 0)?;
        if m == 0 {
            return Err(Error::invalid("`m` is required and must be at least 1"));
        }
        let nbits = params.get_usize("nbits", DEFAULT_NBITS)?;
        if !(1..=16).contains(&nbits) {
            return Err(Error::invalid(format!("nbits must be in 1..=16, got {nbits}")));
        }
        if !dim.is_multiple_of(m) {
            return Err(Error::invalid(format!(
                "dimension {dim} is not divisible into {m} subspaces"
            )));
        }
        let pq_iters = params.get_usize("pq_iters", DEFAULT_PQ_ITERS)?.max(1);
        let pq_train_sample = params.get_usize("pq_train_sample", 256 << nbits)?;
        let keep_raw = params.get_bool("keep_raw", false)?;

        let vectors = dataset.as_f32();
        let (quantizer, labels) = CoarseQuantizer::train(&vectors, dim, metric, &cfg, exec)?;
        let residuals: Vec<f32> = vectors
            .chunks_exact(dim)
            .zip(&labels)
            .flat_map(|(x, &l)| {
                x.iter()
                    .zip(quantizer.centroid(l as usize))
                    .map(|(a, c)| a - c)
                    .collect::<Vec<_>>()
            })
            .collect();
        let sample = training_sample(
            &residuals,
            dim,
            pq_train_sample.max(1 << nbits),
            cfg.seed.wrapping_add(1),
        );
        let codebook = PqCodebook::train_with_iters(
            &sample,
            dim,
            m,
            nbits as u32,
            cfg.seed.wrapping_add(2),
            pq_iters,
            exec,
        )?;

        let encoded: Vec<Vec<u16>> = exec.map(quantizer.ids.len(), |pos| {
            let id = quantizer.ids[pos] as usize;
            codebook.encode_unchecked(&residuals[id * dim..(id + 1) * dim])
        });
        let mut codes = Vec::with_capacity(encoded.len() * codebook.code_size());
        for code in &encoded {
            codebook.pack(code, &mut codes);
        }

        let mut resolved = Params::new()
            .with("m", m)
            .with("nbits", nbits)
            .with("pq_iters", pq_iters)
            .with("pq_train_sample", pq_train_sample)
            .with("keep_raw", keep_raw);
        cfg.echo(&mut resolved);
        Ok(IvfPqIndex {
            quantizer,
            codebook,
            codes,
            raw: keep_raw.then(|| vectors.into_owned()),
            resolved,
        })
    }

    pub fn codebook(&self) -> &PqCodebook {
        &self.codebook
    }

    pub fn nlist(&self) -> usize {
        self.quantizer.nlist()
    }

    pub fn coarse_centroid(&self, list: usize) -> &[f32] {
        self.quantizer.centroid(list)
    }

    /// `(id, code)` pairs stored in one inverted list.
    pub fn list_entries(&self, list: usize) -> Vec<(u32, Vec<u16>)> {
        let cs = self.codebook.code_size();
        self.quantizer
            .range(list)
            .map(|pos| {
                (
                    self.quantizer.ids[pos],
                    self.codebook.unpack(&self.codes[pos * cs..(pos + 1) * cs]),
                )
            })
            .collect()
    }

    fn adc_candidates(&self, query: &[f32], nprobe: usize, keep: usize) -> Vec<(u32, f32)> {
        let metric = self.metric();
        let cs = self.codebook.code_size();
        let mut top = TopK::new(keep);
        let ip_table = match metric {
            Metric::InnerProduct => Some(self.codebook.table_unchecked(query, metric)),
            Metric::L2 => None,
        };
        for (list, _) in self.quantizer.probe(query, nprobe) {
            let centroid = self.quantizer.centroid(list);
            let (table, offset) = match &ip_table {
                Some(t) => (std::borrow::Cow::Borrowed(t), -dot(query, centroid)),
                None => {
                    let residual: Vec<f32> = query.iter().zip(centroid).map(|(q, c)| q - c).collect();
                    (
                        std::borrow::Cow::Owned(self.codebook.table_unchecked(&residual, metric)),
                        0.0,
                    )
                }
            };
            for pos in self.quantizer.range(list) {
                let key = offset + table.lookup_packed(&self.codes[pos * cs..(pos + 1) * cs]);
                top.push(key, self.quantizer.ids[pos]);
            }
        }
        top.into_sorted().into_iter().map(|s| (s.id, s.key)).collect()
    }

    pub(crate) fn read_body(r: &mut SectionReader<'_>, metric: Metric, params: Params) -> Result<Self> {
        let quantizer = CoarseQuantizer::read(r, metric)?;
        let dim = quantizer.dim;
        let m = r.u32()? as usize;
        let nbits = r.u32()?;
        let codebook = PqCodebook::from_parts(dim, m, nbits, r.f32s()?)?;
        let codes = r.bytes()?;
        if codes.len() != quantizer.ids.len() * codebook.code_size() {
            return Err(Error::format("IVFPQ code section has the wrong size"));
        }
        let raw = match r.u8()? {
            0 => None,
            _ => {
                let raw = r.f32s()?;
                if raw.len() != quantizer.ids.len() * dim {
                    return Err(Error::format("IVFPQ raw vector section has the wrong size"));
                }
                Some(raw)
            }
        };
        Ok(IvfPqIndex {
            quantizer,
            codebook,
            codes,
            raw,
            resolved: params,
        })
    }
}

impl AnnIndex for IvfPqIndex {
    fn describe(&self) -> IndexDescription {
        IndexDescription {
            algorithm: "ivfpq".into(),
            metric: self.quantizer.metric,
            params: self.resolved.clone(),
        }
    }

    fn dim(&self) -> usize {
        self.quantizer.dim
    }

    fn len(&self) -> usize {
        self.quantizer.ids.len()
    }

    fn metric(&self) -> Metric {
        self.quantizer.metric
    }

    /// With `rerank > 0`, the `rerank` best ADC candidates are re-scored with
    /// exact distances; otherwise reported distances are ADC estimates.
    fn search_knn(
        &self,
        queries: &VectorDataset,
        k: usize,
        params: &SearchParams,
        exec: &Executor,
    ) -> Result<ResultSet> {
        params.validate(SEARCH_KEYS, "ivfpq search")?;
        check_query_dim(self.dim(), queries)?;
        check_k(k)?;
        let nprobe = params.get_usize("nprobe", 1)?;
        self.quantizer.check_nprobe(nprobe)?;
        let rerank = params.get_usize("rerank", 0)?;
        if rerank > 0 {
            if rerank < k {
                return Err(Error::invalid(format!("rerank={rerank} must be 0 or at least k={k}")));
            }
            if self.raw.is_none() {
                return Err(Error::invalid(
                    "rerank requires an index built with keep_raw=true",
                ));
            }
        }
        let rows = query_rows(queries);
        let dim = self.dim();
        let metric = self.metric();
        Ok(ResultSet::from_lists(exec.map(queries.len(), |q| {
            let query = &rows[q * dim..(q + 1) * dim];
            let candidates = self.adc_candidates(query, nprobe, k.max(rerank));
            let scored: Vec<(u32, f32)> = match (&self.raw, rerank) {
                (Some(raw), r) if r > 0 => {
                    let mut top = TopK::new(k);
                    for (id, _) in candidates {
                        let i = id as usize;
                        top.push(metric.key(query, &raw[i * dim..(i + 1) * dim]), id);
                    }
                    top.into_sorted().into_iter().map(|s| (s.id, s.key)).collect()
                }
                _ => candidates,
            };
            scored
                .into_iter()
                .map(|(id, key)| Neighbor::new(id, metric.from_key(key)))
                .collect()
        })))
    }

    fn search_range(
        &self,
        _queries: &VectorDataset,
        _radius: f32,
        _params: &SearchParams,
        _exec: &Executor,
    ) -> Result<ResultSet> {
        Err(Error::Unsupported(
            "range search is not offered by IVFPQ; use flat, ivf or vamana".into(),
        ))
    }

    fn index_size_bytes(&self) -> u64 {
        self.quantizer.size_bytes()
            + (self.codebook.centroids().len() * 4) as u64
            + self.codes.len() as u64
            + self.raw.as_ref().map_or(0, |r| r.len() as u64 * 4)
    }

    fn save(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = SectionWriter::new(out);
        w.header("ivfpq", self.metric(), &self.resolved)?;
        self.quantizer.write(&mut w)?;
        w.u32(self.codebook.m() as u32)?;
        w.u32(self.codebook.nbits())?;
        w.f32s(self.codebook.centroids())?;
        w.bytes(&self.codes)?;
        match &self.raw {
            Some(raw) => {
                w.u8(1)?;
                w.f32s(raw)
            }
            None => w.u8(0),
        }
    }
}
