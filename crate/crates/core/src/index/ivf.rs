// SPDX-License-Identifier: Apache-2.0

//! Inverted-file index: points partitioned by nearest coarse centroid, with
//! lists stored raw (`flat`) or scalar-quantized (`sq8`).

use std::io::Write;

use super::persist::{SectionReader, SectionWriter};
use super::topk::TopK;
use super::{
    check_k, check_query_dim, query_rows, AnnIndex, IndexDescription, Neighbor, Params,
    ResultSet, SearchParams,
};
use crate::dataset::VectorDataset;
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::oracle::{check_range_args, sort_neighbors};
use crate::quantization::{kmeans_train, training_sample, Sq8Model};

pub(crate) const BUILD_KEYS: &[&str] = &["nlist", "seed", "encoding", "kmeans_iters", "train_sample"];
pub(crate) const SEARCH_KEYS: &[&str] = &["nprobe"];

pub(crate) const DEFAULT_KMEANS_ITERS: usize = 10;
/// Coarse quantizers train on at most this many points per list.
pub(crate) const TRAIN_POINTS_PER_LIST: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IvfEncoding {
    Flat,
    Sq8,
}

impl IvfEncoding {
    pub fn name(self) -> &'static str {
        match self {
            IvfEncoding::Flat => "flat",
            IvfEncoding::Sq8 => "sq8",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(IvfEncoding::Flat),
            "sq8" | "SQ8" => Ok(IvfEncoding::Sq8),
            other => Err(Error::invalid(format!("unknown IVF encoding `{other}`"))),
        }
    }
}

/// Centroids plus the partition of base ids into lists.
pub(crate) struct CoarseQuantizer {
    pub dim: usize,
    pub metric: Metric,
    pub centroids: Vec<f32>,
    /// `nlist + 1` offsets into `ids`.
    pub offsets: Vec<usize>,
    pub ids: Vec<u32>,
}

pub(crate) struct CoarseConfig {
    pub nlist: usize,
    pub seed: u64,
    pub kmeans_iters: usize,
    pub train_sample: usize,
}

impl CoarseConfig {
    pub fn from_params(params: &Params, count: usize) -> Result<Self> {
        let nlist = params.get_usize("nlist", 0)?;
        if nlist == 0 {
            return Err(Error::invalid("`nlist` is required and must be at least 1"));
        }
        if nlist > count {
            return Err(Error::invalid(format!(
                "nlist={nlist} exceeds the {count} base points"
            )));
        }
        Ok(CoarseConfig {
            nlist,
            seed: params.get_u64("seed", 0)?,
            kmeans_iters: params.get_usize("kmeans_iters", DEFAULT_KMEANS_ITERS)?.max(1),
            train_sample: params.get_usize("train_sample", TRAIN_POINTS_PER_LIST * nlist)?,
        })
    }

    pub fn echo(&self, params: &mut Params) {
        params.set("nlist", self.nlist);
        params.set("seed", self.seed as i64);
        params.set("kmeans_iters", self.kmeans_iters);
        params.set("train_sample", self.train_sample);
    }
}

#[inline]
fn nearest_by_key(centroids: &[f32], dim: usize, x: &[f32], metric: Metric) -> usize {
    let mut best = (0usize, f32::INFINITY);
    for (c, row) in centroids.chunks_exact(dim).enumerate() {
        let key = metric.key(x, row);
        if key < best.1 {
            best = (c, key);
        }
    }
    best.0
}

impl CoarseQuantizer {
    /// Trains on a seeded sample and assigns every point to exactly one list.
    /// Returns the quantizer and each point's list.
    pub fn train(
        vectors: &[f32],
        dim: usize,
        metric: Metric,
        cfg: &CoarseConfig,
        exec: &Executor,
    ) -> Result<(Self, Vec<u32>)> {
        let count = vectors.len() / dim;
        let sample_size = cfg.train_sample.max(cfg.nlist).min(count);
        let sample = training_sample(vectors, dim, sample_size, cfg.seed);
        let model = kmeans_train(&sample, dim, cfg.nlist, cfg.kmeans_iters, cfg.seed, exec)?;
        let centroids = model.centroids;
        let labels: Vec<u32> = exec.map(count, |i| {
            nearest_by_key(&centroids, dim, &vectors[i * dim..(i + 1) * dim], metric) as u32
        });
        let quantizer = Self::from_labels(dim, metric, centroids, &labels, cfg.nlist);
        Ok((quantizer, labels))
    }

    fn from_labels(dim: usize, metric: Metric, centroids: Vec<f32>, labels: &[u32], nlist: usize) -> Self {
        let mut sizes = vec![0usize; nlist];
        for &l in labels {
            sizes[l as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(nlist + 1);
        offsets.push(0);
        for s in &sizes {
            offsets.push(offsets[offsets.len() - 1] + s);
        }
        let mut cursor = offsets.clone();
        let mut ids = vec![0u32; labels.len()];
        for (id, &l) in labels.iter().enumerate() {
            ids[cursor[l as usize]] = id as u32;
            cursor[l as usize] += 1;
        }
        CoarseQuantizer {
            dim,
            metric,
            centroids,
            offsets,
            ids,
        }
    }

    pub fn nlist(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn centroid(&self, list: usize) -> &[f32] {
        &self.centroids[list * self.dim..(list + 1) * self.dim]
    }

    /// Positions (into `ids`) covered by `list`.
    pub fn range(&self, list: usize) -> std::ops::Range<usize> {
        self.offsets[list]..self.offsets[list + 1]
    }

    /// The `nprobe` closest lists to `query`, closest first, ties by list id.
    pub fn probe(&self, query: &[f32], nprobe: usize) -> Vec<(usize, f32)> {
        let mut top = TopK::new(nprobe);
        for (l, row) in self.centroids.chunks_exact(self.dim).enumerate() {
            top.push(self.metric.key(query, row), l as u32);
        }
        top.into_sorted()
            .into_iter()
            .map(|s| (s.id as usize, s.key))
            .collect()
    }

    pub fn check_nprobe(&self, nprobe: usize) -> Result<()> {
        if nprobe == 0 || nprobe > self.nlist() {
            return Err(Error::invalid(format!(
                "nprobe={nprobe} must be in 1..={}",
                self.nlist()
            )));
        }
        Ok(())
    }

    pub fn write(&self, w: &mut SectionWriter<'_>) -> Result<()> {
        w.u32(self.dim as u32)?;
        w.f32s(&self.centroids)?;
        let offsets: Vec<u32> = self.offsets.iter().map(|&o| o as u32).collect();
        w.u32s(&offsets)?;
        w.u32s(&self.ids)
    }

    pub fn read(r: &mut SectionReader<'_>, metric: Metric) -> Result<Self> {
        let dim = r.u32()? as usize;
        let centroids = r.f32s()?;
        let offsets: Vec<usize> = r.u32s()?.into_iter().map(|o| o as usize).collect();
        let ids = r.u32s()?;
        let nlist = offsets.len().saturating_sub(1);
        if dim == 0
            || nlist == 0
            || centroids.len() != nlist * dim
            || offsets[nlist] != ids.len()
            || offsets.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::format("inconsistent inverted-list section"));
        }
        Ok(CoarseQuantizer {
            dim,
            metric,
            centroids,
            offsets,
            ids,
        })
    }

    pub fn size_bytes(&self) -> u64 {
        (self.centroids.len() * 4 + self.offsets.len() * 4 + self.ids.len() * 4) as u64
    }
}

enum ListStorage {
    /// Vectors in list order.
    Flat(Vec<f32>),
    /// SQ8 codes in list order.
    Sq8 { model: Sq8Model, codes: Vec<u8> },
}

pub struct IvfIndex {
    quantizer: CoarseQuantizer,
    storage: ListStorage,
    resolved: Params,
}

impl IvfIndex {
    pub fn build(
        dataset: &VectorDataset,
        metric: Metric,
        params: &Params,
        exec: &Executor,
    ) -> Result<Self> {
        params.validate(BUILD_KEYS, "ivf build")?;
        if dataset.is_empty() {
            return Err(Error::invalid("cannot build an IVF index on an empty dataset"));
        }
        let cfg = CoarseConfig::from_params(params, dataset.len())?;
        let encoding = IvfEncoding::parse(params.get_str("encoding", "flat")?)?;
        let dim = dataset.dim();
        let vectors = dataset.as_f32();
        let (quantizer, _) = CoarseQuantizer::train(&vectors, dim, metric, &cfg, exec)?;

        let row = |id: u32| &vectors[id as usize * dim..(id as usize + 1) * dim];
        let storage = match encoding {
            IvfEncoding::Flat => {
                let mut store = Vec::with_capacity(vectors.len());
                for &id in &quantizer.ids {
                    store.extend_from_slice(row(id));
                }
                ListStorage::Flat(store)
            }
            IvfEncoding::Sq8 => {
                let model = Sq8Model::train(&vectors, dim)?;
                let mut codes = Vec::with_capacity(vectors.len());
                for &id in &quantizer.ids {
                    model.encode_into(row(id), &mut codes);
                }
                ListStorage::Sq8 { model, codes }
            }
        };
        let mut resolved = Params::new().with("encoding", encoding.name());
        cfg.echo(&mut resolved);
        Ok(IvfIndex {
            quantizer,
            storage,
            resolved,
        })
    }

    pub fn encoding(&self) -> IvfEncoding {
        match self.storage {
            ListStorage::Flat(_) => IvfEncoding::Flat,
            ListStorage::Sq8 { .. } => IvfEncoding::Sq8,
        }
    }

    pub fn nlist(&self) -> usize {
        self.quantizer.nlist()
    }

    /// Base ids held by one inverted list.
    pub fn list_ids(&self, list: usize) -> &[u32] {
        &self.quantizer.ids[self.quantizer.range(list)]
    }

    /// Calls `visit(id, key)` for every point in the probed lists.
    fn scan(&self, query: &[f32], nprobe: usize, mut visit: impl FnMut(u32, f32)) {
        let dim = self.quantizer.dim;
        let metric = self.quantizer.metric;
        let mut scratch = vec![0.0f32; dim];
        for (list, _) in self.quantizer.probe(query, nprobe) {
            for pos in self.quantizer.range(list) {
                let key = match &self.storage {
                    ListStorage::Flat(store) => metric.key(query, &store[pos * dim..(pos + 1) * dim]),
                    ListStorage::Sq8 { model, codes } => {
                        model.decode_into(&codes[pos * dim..(pos + 1) * dim], &mut scratch);
                        metric.key(query, &scratch)
                    }
                };
                visit(self.quantizer.ids[pos], key);
            }
        }
    }

    pub(crate) fn read_body(r: &mut SectionReader<'_>, metric: Metric, params: Params) -> Result<Self> {
        let quantizer = CoarseQuantizer::read(r, metric)?;
        let dim = quantizer.dim;
        let count = quantizer.ids.len();
        let storage = match r.u8()? {
            0 => {
                let store = r.f32s()?;
                if store.len() != count * dim {
                    return Err(Error::format("IVF vector section has the wrong size"));
                }
                ListStorage::Flat(store)
            }
            1 => {
                let min = r.f32s()?;
                let scale = r.f32s()?;
                let codes = r.bytes()?;
                if min.len() != dim || scale.len() != dim || codes.len() != count * dim {
                    return Err(Error::format("IVF SQ8 section has the wrong size"));
                }
                ListStorage::Sq8 {
                    model: Sq8Model { min, scale },
                    codes,
                }
            }
            other => return Err(Error::format(format!("unknown IVF encoding tag {other}"))),
        };
        Ok(IvfIndex {
            quantizer,
            storage,
            resolved: params,
        })
    }
}

impl AnnIndex for IvfIndex {
    fn describe(&self) -> IndexDescription {
        IndexDescription {
            algorithm: "ivf".into(),
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

    fn search_knn(
        &self,
        queries: &VectorDataset,
        k: usize,
        params: &SearchParams,
        exec: &Executor,
    ) -> Result<ResultSet> {
        params.validate(SEARCH_KEYS, "ivf search")?;
        check_query_dim(self.dim(), queries)?;
        check_k(k)?;
        let nprobe = params.get_usize("nprobe", 1)?;
        self.quantizer.check_nprobe(nprobe)?;
        let rows = query_rows(queries);
        let dim = self.dim();
        let metric = self.metric();
        Ok(ResultSet::from_lists(exec.map(queries.len(), |q| {
            let query = &rows[q * dim..(q + 1) * dim];
            let mut top = TopK::new(k);
            self.scan(query, nprobe, |id, key| top.push(key, id));
            top.into_sorted()
                .into_iter()
                .map(|s| Neighbor::new(s.id, metric.from_key(s.key)))
                .collect()
        })))
    }

    fn search_range(
        &self,
        queries: &VectorDataset,
        radius: f32,
        params: &SearchParams,
        exec: &Executor,
    ) -> Result<ResultSet> {
        params.validate(SEARCH_KEYS, "ivf search")?;
        check_query_dim(self.dim(), queries)?;
        check_range_args(radius, self.metric())?;
        let nprobe = params.get_usize("nprobe", 1)?;
        self.quantizer.check_nprobe(nprobe)?;
        let rows = query_rows(queries);
        let dim = self.dim();
        Ok(ResultSet::from_lists(exec.map(queries.len(), |q| {
            let query = &rows[q * dim..(q + 1) * dim];
            let mut hits = Vec::new();
            self.scan(query, nprobe, |id, key| {
                if key <= radius {
                    hits.push(Neighbor::new(id, key));
                }
            });
            sort_neighbors(&mut hits, Metric::L2);
            hits
        })))
    }

    fn index_size_bytes(&self) -> u64 {
        self.quantizer.size_bytes()
            + match &self.storage {
                ListStorage::Flat(store) => store.len() as u64 * 4,
                ListStorage::Sq8 { model, codes } => (model.dim() * 8 + codes.len()) as u64,
            }
    }

    fn save(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = SectionWriter::new(out);
        w.header("ivf", self.metric(), &self.resolved)?;
        self.quantizer.write(&mut w)?;
        match &self.storage {
            ListStorage::Flat(store) => {
                w.u8(0)?;
                w.f32s(store)
            }
            ListStorage::Sq8 { model, codes } => {
                w.u8(1)?;
                w.f32s(&model.min)?;
                w.f32s(&model.scale)?;
                w.bytes(codes)
            }
        }
    }
}
