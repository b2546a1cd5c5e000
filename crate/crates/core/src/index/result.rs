// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{KnnGroundTruth, RangeGroundTruth};
use crate::distance::Metric;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: u32,
    pub distance: f32,
}

impl Neighbor {
    pub fn new(id: u32, distance: f32) -> Self {
        Neighbor { id, distance }
    }
}

/// Per-query neighbor lists, stored contiguously.
#[derive(Clone, Debug, Default)]
pub struct ResultSet {
    offsets: Vec<usize>,
    neighbors: Vec<Neighbor>,
}

impl PartialEq for ResultSet {
    /// Bitwise comparison of distances, so `-0.0 != 0.0` and identical NaNs match.
    fn eq(&self, other: &Self) -> bool {
        self.offsets == other.offsets
            && self.neighbors.len() == other.neighbors.len()
            && self
                .neighbors
                .iter()
                .zip(&other.neighbors)
                .all(|(a, b)| a.id == b.id && a.distance.to_bits() == b.distance.to_bits())
    }
}

impl ResultSet {
    pub fn from_lists(lists: Vec<Vec<Neighbor>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for list in lists {
            neighbors.extend(list);
            offsets.push(neighbors.len());
        }
        ResultSet { offsets, neighbors }
    }

    /// Builds from per-query counts and flattened ids/distances.
    pub fn from_flat(counts: &[u32], ids: &[u32], distances: &[f32]) -> Result<Self> {
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total != ids.len() || ids.len() != distances.len() {
            return Err(Error::invalid(format!(
                "counts sum to {total} but got {} ids and {} distances",
                ids.len(),
                distances.len()
            )));
        }
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0);
        for &c in counts {
            offsets.push(offsets[offsets.len() - 1] + c as usize);
        }
        let neighbors = ids
            .iter()
            .zip(distances)
            .map(|(&id, &distance)| Neighbor { id, distance })
            .collect();
        Ok(ResultSet { offsets, neighbors })
    }

    pub fn num_queries(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn query(&self, q: usize) -> &[Neighbor] {
        &self.neighbors[self.offsets[q]..self.offsets[q + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Neighbor]> + '_ {
        (0..self.num_queries()).map(move |q| self.query(q))
    }

    pub fn total(&self) -> usize {
        self.neighbors.len()
    }

    pub fn counts(&self) -> Vec<u32> {
        self.offsets.windows(2).map(|w| (w[1] - w[0]) as u32).collect()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.neighbors.iter().map(|n| n.id).collect()
    }

    pub fn distances(&self) -> Vec<f32> {
        self.neighbors.iter().map(|n| n.distance).collect()
    }

    /// Checks ids are below `base_count`, lists are sorted by closeness then
    /// id, and ids are unique per query.
    pub fn validate(&self, base_count: usize, metric: Metric) -> Result<()> {
        for (q, list) in self.iter().enumerate() {
            let mut seen = HashSet::with_capacity(list.len());
            for (i, n) in list.iter().enumerate() {
                if n.id as usize >= base_count {
                    return Err(Error::invalid(format!("query {q}: id {} out of range", n.id)));
                }
                if !seen.insert(n.id) {
                    return Err(Error::invalid(format!("query {q}: duplicate id {}", n.id)));
                }
                if i > 0 {
                    let prev = list[i - 1];
                    let ord = metric
                        .cmp_distance(prev.distance, n.distance)
                        .then(prev.id.cmp(&n.id));
                    if ord == std::cmp::Ordering::Greater {
                        return Err(Error::invalid(format!("query {q}: results not sorted")));
                    }
                }
            }
        }
        Ok(())
    }
}

impl From<&KnnGroundTruth> for ResultSet {
    fn from(gt: &KnnGroundTruth) -> Self {
        let counts = vec![gt.k() as u32; gt.num_queries()];
        ResultSet::from_flat(&counts, gt.all_ids(), gt.all_distances())
            .expect("ground truth is rectangular")
    }
}

impl From<&RangeGroundTruth> for ResultSet {
    fn from(gt: &RangeGroundTruth) -> Self {
        let counts: Vec<u32> = gt.counts().collect();
        ResultSet::from_flat(&counts, gt.all_ids(), gt.all_distances())
            .expect("ground truth counts match payload")
    }
}
