// SPDX-License-Identifier: Apache-2.0

use std::borrow::Cow;

use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::check_matrix;
use crate::distance::l2_squared;
use crate::error::{Error, Result};
use crate::exec::Executor;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansModel {
    pub dim: usize,
    /// `k x dim`, row-major.
    pub centroids: Vec<f32>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f32,
    pub iterations_run: usize,
    /// Inertia after the initial assignment and after every Lloyd iteration.
    pub inertia_history: Vec<f64>,
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    /// Nearest centroid by squared L2; ties go to the lowest index.
    pub fn assign(&self, x: &[f32]) -> (usize, f32) {
        nearest_centroid(&self.centroids, self.dim, x)
    }
}

#[inline]
pub fn nearest_centroid(centroids: &[f32], dim: usize, x: &[f32]) -> (usize, f32) {
    let mut best = (0usize, f32::INFINITY);
    for (c, row) in centroids.chunks_exact(dim).enumerate() {
        let d = l2_squared(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// A seeded uniform subset of at most `max_rows` rows, in original order.
pub fn training_sample(points: &[f32], dim: usize, max_rows: usize, seed: u64) -> Cow<'_, [f32]> {
    let n = points.len() / dim;
    if n <= max_rows {
        return Cow::Borrowed(points);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, max_rows).into_vec();
    picked.sort_unstable();
    let mut out = Vec::with_capacity(max_rows * dim);
    for i in picked {
        out.extend_from_slice(&points[i * dim..(i + 1) * dim]);
    }
    Cow::Owned(out)
}

fn assign_all(exec: &Executor, points: &[f32], dim: usize, centroids: &[f32]) -> Vec<(usize, f32)> {
    exec.map(points.len() / dim, |i| {
        nearest_centroid(centroids, dim, &points[i * dim..(i + 1) * dim])
    })
}

/// Per-cluster sums in point order, then summed in cluster order.
fn cluster_sums(assignment: &[(usize, f32)], k: usize) -> Vec<f64> {
    let mut sums = vec![0.0f64; k];
    for &(c, d) in assignment {
        sums[c] += d as f64;
    }
    sums
}

fn kmeans_pp(
    exec: &Executor,
    points: &[f32],
    dim: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f32> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut chosen = vec![false; n];
    let mut centroids = Vec::with_capacity(k * dim);

    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.extend_from_slice(row(first));
    let mut min_d: Vec<f32> = exec.map(n, |i| l2_squared(row(i), row(first)));

    for _ in 1..k {
        let total: f64 = min_d.iter().map(|&d| d as f64).sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0f64;
            let mut pick = None;
            for (i, &d) in min_d.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d as f64;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // Fewer distinct points than k: take the first unused row.
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[next] = true;
        centroids.extend_from_slice(row(next));
        let updated = exec.map(n, |i| min_d[i].min(l2_squared(row(i), row(next))));
        min_d = updated;
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops after `max_iters` iterations or once no assignment changes. A
/// cluster's centroid only moves if the move does not raise that cluster's
/// evaluated sum of squares, which keeps the recorded inertia non-increasing
/// under floating-point rounding. Empty clusters are re-seeded at the points
/// farthest from their centroids.
pub fn kmeans_train(
    points: &[f32],
    dim: usize,
    k: usize,
    max_iters: usize,
    seed: u64,
    exec: &Executor,
) -> Result<KMeansModel> {
    let n = check_matrix(points, dim)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k={k} exceeds the {n} training points")));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp(exec, points, dim, k, &mut rng);
    let mut assignment = assign_all(exec, points, dim, &centroids);
    let mut sse = cluster_sums(&assignment, k);
    let mut history = vec![sse.iter().sum::<f64>()];
    let mut iterations_run = 0;

    for _ in 0..max_iters {
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &(c, _)) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (acc, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *acc += x as f64;
            }
        }
        let mut proposed = centroids.clone();
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, &s) in proposed[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..]) {
                    *dst = (s * inv) as f32;
                }
            }
        }

        let moved: Vec<f32> = exec.map(n, |i| {
            let c = assignment[i].0;
            l2_squared(row(i), &proposed[c * dim..(c + 1) * dim])
        });
        let mut moved_sse = vec![0.0f64; k];
        for (i, &d) in moved.iter().enumerate() {
            moved_sse[assignment[i].0] += d as f64;
        }
        let mut current: Vec<f32> = assignment.iter().map(|&(_, d)| d).collect();
        for c in 0..k {
            if counts[c] > 0 && moved_sse[c] <= sse[c] {
                centroids[c * dim..(c + 1) * dim]
                    .copy_from_slice(&proposed[c * dim..(c + 1) * dim]);
            }
        }
        for (i, d) in current.iter_mut().enumerate() {
            let c = assignment[i].0;
            if counts[c] > 0 && moved_sse[c] <= sse[c] {
                *d = moved[i];
            }
        }

        let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        if !empty.is_empty() {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| current[b].total_cmp(&current[a]).then(a.cmp(&b)));
            for (&c, &p) in empty.iter().zip(&order) {
                centroids[c * dim..(c + 1) * dim].copy_from_slice(row(p));
            }
        }

        let next = assign_all(exec, points, dim, &centroids);
        let changed = next.iter().zip(&assignment).any(|(a, b)| a.0 != b.0);
        assignment = next;
        sse = cluster_sums(&assignment, k);
        history.push(sse.iter().sum::<f64>());
        iterations_run += 1;
        if !changed {
            break;
        }
    }

    Ok(KMeansModel {
        dim,
        centroids,
        inertia: *history.last().unwrap() as f32,
        iterations_run,
        inertia_history: history,
    })
}
