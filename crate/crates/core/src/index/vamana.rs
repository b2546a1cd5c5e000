// SPDX-License-Identifier: Apache-2.0

//! In-memory Vamana graph.
//!
//! The graph starts as a seeded random graph with `R` out-edges per node and
//! is refined in two passes over a seeded random order, the first with
//! `alpha = 1` and the second with the configured `alpha`. Each visit runs a
//! greedy beam search from the medoid, prunes the visited set together with
//! the current out-edges using the alpha-relaxed neighborhood rule and adds
//! reverse edges, re-pruning any node whose degree would exceed `R`.
//!
//! Visits are grouped into batches. Every node in a batch searches the same
//! frozen graph, so a batch can be processed in parallel while the final
//! graph depends only on the seed.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::persist::{SectionReader, SectionWriter};
use super::topk::Scored;
use super::{
    check_k, check_query_dim, query_rows, AnnIndex, IndexDescription, Neighbor, Params,
    ResultSet, SearchParams,
};
use crate::dataset::VectorDataset;
use crate::distance::{l2_squared, Metric};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::oracle::{check_range_args, sort_neighbors};

pub(crate) const BUILD_KEYS: &[&str] = &["R", "L_build", "alpha", "seed"];
pub(crate) const SEARCH_KEYS: &[&str] = &["L_search"];

const DEFAULT_R: usize = 32;
const DEFAULT_L_BUILD: usize = 64;
const DEFAULT_ALPHA: f64 = 1.2;
const DEFAULT_L_SEARCH: usize = 100;
const MEDOID_SAMPLE: usize = 10_000;
/// Batch size as a fraction of the dataset.
const MAX_BATCH_FRACTION: f64 = 0.02;

pub struct VamanaIndex {
    dim: usize,
    vectors: Vec<f32>,
    graph: Vec<Vec<u32>>,
    medoid: u32,
    max_degree: usize,
    resolved: Params,
}

struct Visited(Vec<u64>);

impl Visited {
    fn new(n: usize) -> Self {
        Visited(vec![0; n.div_ceil(64)])
    }

    /// Marks `id`; returns false if it was already marked.
    #[inline]
    fn insert(&mut self, id: u32) -> bool {
        let (w, b) = (id as usize / 64, id as usize % 64);
        let fresh = self.0[w] & (1 << b) == 0;
        self.0[w] |= 1 << b;
        fresh
    }

}

#[derive(Clone, Copy)]
struct Candidate {
    key: f32,
    id: u32,
    expanded: bool,
}

struct BeamOutcome {
    beam: Vec<Candidate>,
    /// Expanded nodes with their distances, in expansion order.
    expanded: Vec<(u32, f32)>,
}

/// Best-first search over `graph` keeping at most `l` candidates.
fn beam_search(
    vectors: &[f32],
    dim: usize,
    graph: &[Vec<u32>],
    start: u32,
    query: &[f32],
    l: usize,
) -> BeamOutcome {
    let row = |id: u32| &vectors[id as usize * dim..(id as usize + 1) * dim];
    let mut visited = Visited::new(graph.len());
    visited.insert(start);
    let mut beam = vec![Candidate {
        key: l2_squared(query, row(start)),
        id: start,
        expanded: false,
    }];
    let mut expanded = Vec::new();
    let mut cursor = 0;
    while let Some(i) = (cursor..beam.len()).find(|&i| !beam[i].expanded) {
        beam[i].expanded = true;
        let node = beam[i].id;
        expanded.push((node, beam[i].key));
        cursor = i + 1;
        for &nb in &graph[node as usize] {
            if !visited.insert(nb) {
                continue;
            }
            let key = l2_squared(query, row(nb));
            if beam.len() == l {
                let last = beam[l - 1];
                if !(Scored { key, id: nb } < Scored { key: last.key, id: last.id }) {
                    continue;
                }
            }
            let pos = beam.partition_point(|c| Scored { key: c.key, id: c.id } < Scored { key, id: nb });
            beam.insert(
                pos,
                Candidate {
                    key,
                    id: nb,
                    expanded: false,
                },
            );
            beam.truncate(l);
            cursor = cursor.min(pos);
        }
    }
    BeamOutcome { beam, expanded }
}

/// Alpha-relaxed neighborhood pruning of `candidates` around `p`.
///
/// `candidates` holds `(id, squared distance to p)`. When at most `r`
/// distinct candidates remain, all of them are kept.
fn robust_prune(
    vectors: &[f32],
    dim: usize,
    p: u32,
    mut candidates: Vec<(u32, f32)>,
    alpha: f32,
    r: usize,
) -> Vec<u32> {
    candidates.retain(|&(id, _)| id != p);
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    candidates.dedup_by_key(|c| c.0);
    if candidates.len() <= r {
        return candidates.into_iter().map(|c| c.0).collect();
    }
    let row = |id: u32| &vectors[id as usize * dim..(id as usize + 1) * dim];
    let alpha_sq = alpha * alpha;
    let mut kept: Vec<u32> = Vec::with_capacity(r);
    for &(c, d_pc) in &candidates {
        if kept.len() == r {
            break;
        }
        let dominated = kept
            .iter()
            .any(|&k| alpha_sq * l2_squared(row(k), row(c)) <= d_pc);
        if !dominated {
            kept.push(c);
        }
    }
    kept
}

/// Each node gets `min(r, n - 1)` distinct random out-neighbors.
fn random_graph(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    let degree = r.min(n.saturating_sub(1));
    (0..n as u32)
        .map(|p| {
            if degree == n - 1 {
                return (0..n as u32).filter(|&c| c != p).collect();
            }
            let mut out = Vec::with_capacity(degree);
            while out.len() < degree {
                let c = rng.random_range(0..n as u32);
                if c != p && !out.contains(&c) {
                    out.push(c);
                }
            }
            out
        })
        .collect()
}

/// Sample point closest to the sample mean.
fn find_medoid(vectors: &[f32], dim: usize, seed: u64) -> u32 {
    let count = vectors.len() / dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<u32> = (0..count as u32).collect();
    if count > MEDOID_SAMPLE {
        ids.shuffle(&mut rng);
        ids.truncate(MEDOID_SAMPLE);
        ids.sort_unstable();
    }
    let mut mean = vec![0f64; dim];
    for &id in &ids {
        for (m, &x) in mean.iter_mut().zip(&vectors[id as usize * dim..(id as usize + 1) * dim]) {
            *m += x as f64;
        }
    }
    let mean: Vec<f32> = mean.iter().map(|m| (m / ids.len() as f64) as f32).collect();
    let mut best = (ids[0], f32::INFINITY);
    for &id in &ids {
        let d = l2_squared(&mean, &vectors[id as usize * dim..(id as usize + 1) * dim]);
        if d < best.1 {
            best = (id, d);
        }
    }
    best.0
}

struct BuildConfig {
    r: usize,
    l_build: usize,
    alpha: f32,
    seed: u64,
}

impl BuildConfig {
    fn from_params(params: &Params) -> Result<Self> {
        let r = params.get_usize("R", DEFAULT_R)?;
        if r < 2 {
            return Err(Error::invalid(format!("R must be at least 2, got {r}")));
        }
        let l_build = params.get_usize("L_build", DEFAULT_L_BUILD)?;
        if l_build == 0 {
            return Err(Error::invalid("L_build must be at least 1"));
        }
        let alpha = params.get_f64("alpha", DEFAULT_ALPHA)?;
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be at least 1.0, got {alpha}")));
        }
        Ok(BuildConfig {
            r,
            l_build,
            alpha: alpha as f32,
            seed: params.get_u64("seed", 0)?,
        })
    }
}

impl VamanaIndex {
    pub fn build(
        dataset: &VectorDataset,
        metric: Metric,
        params: &Params,
        exec: &Executor,
    ) -> Result<Self> {
        params.validate(BUILD_KEYS, "vamana build")?;
        if metric != Metric::L2 {
            return Err(Error::Unsupported("the vamana index supports the l2 metric only".into()));
        }
        let cfg = BuildConfig::from_params(params)?;
        if dataset.is_empty() {
            return Err(Error::invalid("cannot build a graph on an empty dataset"));
        }
        if dataset.len() > u32::MAX as usize {
            return Err(Error::invalid("dataset too large for 32-bit ids"));
        }
        let dim = dataset.dim();
        let vectors = dataset.as_f32().into_owned();
        let n = dataset.len();
        let medoid = find_medoid(&vectors, dim, cfg.seed);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let mut graph = random_graph(n, cfg.r, &mut rng);
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.shuffle(&mut rng);
        let row = |id: u32| &vectors[id as usize * dim..(id as usize + 1) * dim];
        let batch_len = ((n as f64 * MAX_BATCH_FRACTION) as usize).max(1);

        for alpha in [1.0, cfg.alpha] {
            for batch in order.chunks(batch_len) {
                let frozen = &graph;
                let outs: Vec<Vec<u32>> = exec.map(batch.len(), |i| {
                    let p = batch[i];
                    let outcome = beam_search(&vectors, dim, frozen, medoid, row(p), cfg.l_build);
                    let mut cands = outcome.expanded;
                    cands.extend(
                        frozen[p as usize]
                            .iter()
                            .map(|&c| (c, l2_squared(row(p), row(c)))),
                    );
                    robust_prune(&vectors, dim, p, cands, alpha, cfg.r)
                });
                for (&p, out) in batch.iter().zip(outs) {
                    for &j in &out {
                        let adj = &mut graph[j as usize];
                        if adj.contains(&p) {
                            continue;
                        }
                        if adj.len() < cfg.r {
                            adj.push(p);
                        } else {
                            let cands: Vec<(u32, f32)> = adj
                                .iter()
                                .chain(std::iter::once(&p))
                                .map(|&c| (c, l2_squared(row(j), row(c))))
                                .collect();
                            *adj = robust_prune(&vectors, dim, j, cands, alpha, cfg.r);
                        }
                    }
                    graph[p as usize] = out;
                }
            }
        }

        let resolved = Params::new()
            .with("R", cfg.r)
            .with("L_build", cfg.l_build)
            .with("alpha", cfg.alpha as f64)
            .with("seed", cfg.seed as i64);
        Ok(VamanaIndex {
            dim,
            vectors,
            graph,
            medoid,
            max_degree: cfg.r,
            resolved,
        })
    }

    pub fn medoid(&self) -> u32 {
        self.medoid
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn neighbors(&self, id: u32) -> &[u32] {
        &self.graph[id as usize]
    }

    fn l_search(&self, params: &SearchParams, k: usize) -> Result<usize> {
        let l = params.get_usize("L_search", DEFAULT_L_SEARCH)?;
        if l < k {
            return Err(Error::invalid(format!("L_search={l} must be at least k={k}")));
        }
        Ok(l)
    }

    pub(crate) fn read_body(r: &mut SectionReader<'_>, _metric: Metric, params: Params) -> Result<Self> {
        let dim = r.u32()? as usize;
        let medoid = r.u32()?;
        let max_degree = r.u32()? as usize;
        let vectors = r.f32s()?;
        let offsets = r.u32s()?;
        let edges = r.u32s()?;
        if dim == 0 || vectors.len() % dim != 0 {
            return Err(Error::format("vamana vector section has the wrong size"));
        }
        let n = vectors.len() / dim;
        if n == 0
            || medoid as usize >= n
            || offsets.len() != n + 1
            || offsets[n] as usize != edges.len()
            || offsets.windows(2).any(|w| w[0] > w[1] || (w[1] - w[0]) as usize > max_degree)
            || edges.iter().any(|&e| e as usize >= n)
        {
            return Err(Error::format("inconsistent vamana graph section"));
        }
        let graph = offsets
            .windows(2)
            .map(|w| edges[w[0] as usize..w[1] as usize].to_vec())
            .collect();
        Ok(VamanaIndex {
            dim,
            vectors,
            graph,
            medoid,
            max_degree,
            resolved: params,
        })
    }
}

impl AnnIndex for VamanaIndex {
    fn describe(&self) -> IndexDescription {
        IndexDescription {
            algorithm: "vamana".into(),
            metric: Metric::L2,
            params: self.resolved.clone(),
        }
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.graph.len()
    }

    fn metric(&self) -> Metric {
        Metric::L2
    }

    fn search_knn(
        &self,
        queries: &VectorDataset,
        k: usize,
        params: &SearchParams,
        exec: &Executor,
    ) -> Result<ResultSet> {
        params.validate(SEARCH_KEYS, "vamana search")?;
        check_query_dim(self.dim, queries)?;
        check_k(k)?;
        let l = self.l_search(params, k)?;
        let rows = query_rows(queries);
        let dim = self.dim;
        Ok(ResultSet::from_lists(exec.map(queries.len(), |q| {
            let query = &rows[q * dim..(q + 1) * dim];
            let outcome = beam_search(&self.vectors, dim, &self.graph, self.medoid, query, l);
            outcome
                .beam
                .iter()
                .take(k)
                .map(|c| Neighbor::new(c.id, c.key))
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
        params.validate(SEARCH_KEYS, "vamana search")?;
        check_query_dim(self.dim, queries)?;
        check_range_args(radius, Metric::L2)?;
        let l = self.l_search(params, 1)?;
        let rows = query_rows(queries);
        let dim = self.dim;
        let row = |id: u32| &self.vectors[id as usize * dim..(id as usize + 1) * dim];
        Ok(ResultSet::from_lists(exec.map(queries.len(), |q| {
            let query = &rows[q * dim..(q + 1) * dim];
            let BeamOutcome { beam, expanded, .. } =
                beam_search(&self.vectors, dim, &self.graph, self.medoid, query, l);
            let mut hits: Vec<Neighbor> = Vec::new();
            let mut seen = Visited::new(self.graph.len());
            let mut frontier: Vec<u32> = Vec::new();
            for c in &beam {
                seen.insert(c.id);
            }
            for &(id, _) in &expanded {
                seen.insert(id);
            }
            let mut reported = Visited::new(self.graph.len());
            for (id, key) in beam.iter().map(|c| (c.id, c.key)).chain(expanded) {
                if key <= radius && reported.insert(id) {
                    hits.push(Neighbor::new(id, key));
                    frontier.push(id);
                }
            }
            while let Some(node) = frontier.pop() {
                for &nb in &self.graph[node as usize] {
                    if !seen.insert(nb) {
                        continue;
                    }
                    let key = l2_squared(query, row(nb));
                    if key <= radius {
                        reported.insert(nb);
                        hits.push(Neighbor::new(nb, key));
                        frontier.push(nb);
                    }
                }
            }
            sort_neighbors(&mut hits, Metric::L2);
            hits
        })))
    }

    fn index_size_bytes(&self) -> u64 {
        let edges: usize = self.graph.iter().map(Vec::len).sum();
        (self.vectors.len() * 4 + (self.graph.len() + 1) * 4 + edges * 4) as u64
    }

    fn save(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = SectionWriter::new(out);
        w.header("vamana", Metric::L2, &self.resolved)?;
        w.u32(self.dim as u32)?;
        w.u32(self.medoid)?;
        w.u32(self.max_degree as u32)?;
        w.f32s(&self.vectors)?;
        let mut offsets = Vec::with_capacity(self.graph.len() + 1);
        offsets.push(0u32);
        let mut edges = Vec::new();
        for adj in &self.graph {
            edges.extend_from_slice(adj);
            offsets.push(edges.len() as u32);
        }
        w.u32s(&offsets)?;
        w.u32s(&edges)
    }
}
