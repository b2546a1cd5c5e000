// SPDX-License-Identifier: Apache-2.0

//! Accuracy metrics: k-NN recall with a tie tolerance and pooled range AP.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{KnnGroundTruth, RangeGroundTruth};
use crate::error::{Error, Result};
use crate::index::ResultSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccuracyKind {
    RecallAtK,
    RangeAp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub kind: AccuracyKind,
    pub value: f64,
    /// Per-query recall; empty for range AP.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_query: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f32>,
}

impl AccuracyReport {
    pub fn with_radius(mut self, radius: f32) -> Self {
        self.radius = Some(radius);
        self
    }
}

/// How close a returned distance must be to the true k-th distance to count
/// as a tie.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum TieTolerance {
    /// Pure id-set intersection.
    Exact,
    Absolute(f32),
    /// `1e-6 * (1 + |d_k|)`.
    #[default]
    Relative,
}

impl TieTolerance {
    pub fn eps(self, kth_distance: f32) -> f32 {
        match self {
            TieTolerance::Exact => 0.0,
            TieTolerance::Absolute(e) => e,
            TieTolerance::Relative => 1e-6 * (1.0 + kth_distance.abs()),
        }
    }
}

impl From<f32> for TieTolerance {
    /// Zero means exact intersection.
    fn from(eps: f32) -> Self {
        if eps == 0.0 {
            TieTolerance::Exact
        } else {
            TieTolerance::Absolute(eps)
        }
    }
}

/// Mean over queries of the fraction of the first `k` returned ids that are
/// true neighbors.
///
/// A returned id is a hit if it is among the first `k` ground-truth ids, or
/// if its reported distance lies within the tolerance of the true k-th
/// distance. Short result lists count the shortfall as misses.
pub fn recall_at_k(
    results: &ResultSet,
    gt: &KnnGroundTruth,
    k: usize,
    tie: TieTolerance,
) -> Result<AccuracyReport> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if gt.k() < k {
        return Err(Error::invalid(format!(
            "ground truth holds {} neighbors per query, fewer than k={k}",
            gt.k()
        )));
    }
    if results.num_queries() != gt.num_queries() {
        return Err(Error::invalid(format!(
            "results cover {} queries but the ground truth covers {}",
            results.num_queries(),
            gt.num_queries()
        )));
    }
    let per_query: Vec<f64> = (0..gt.num_queries())
        .map(|q| {
            let truth: HashSet<u32> = gt.ids(q)[..k].iter().copied().collect();
            let d_k = gt.distances(q)[k - 1];
            let eps = tie.eps(d_k);
            let mut counted = HashSet::new();
            let hits = results
                .query(q)
                .iter()
                .take(k)
                .filter(|n| {
                    let hit = truth.contains(&n.id)
                        || (eps > 0.0 && (n.distance - d_k).abs() <= eps);
                    hit && counted.insert(n.id)
                })
                .count();
            hits as f64 / k as f64
        })
        .collect();
    let value = if per_query.is_empty() {
        0.0
    } else {
        per_query.iter().sum::<f64>() / per_query.len() as f64
    };
    Ok(AccuracyReport {
        kind: AccuracyKind::RecallAtK,
        value,
        per_query,
        k: Some(k),
        radius: None,
    })
}

/// Average precision of the pooled result list as the distance clipping
/// threshold sweeps over every distinct returned distance.
pub fn range_ap(results: &ResultSet, gt: &RangeGroundTruth) -> Result<AccuracyReport> {
    if results.num_queries() != gt.num_queries() {
        return Err(Error::invalid(format!(
            "results cover {} queries but the ground truth covers {}",
            results.num_queries(),
            gt.num_queries()
        )));
    }
    let total = gt.total();
    if total == 0 {
        return Err(Error::invalid(
            "range AP is undefined when the ground truth is empty for every query",
        ));
    }
    let mut truth = HashSet::with_capacity(total);
    for q in 0..gt.num_queries() {
        for &id in gt.ids(q) {
            truth.insert((q as u32, id));
        }
    }
    let mut seen = HashSet::with_capacity(results.total());
    let mut pooled: Vec<(f32, bool)> = Vec::with_capacity(results.total());
    for (q, list) in results.iter().enumerate() {
        for n in list {
            let pair = (q as u32, n.id);
            if !seen.insert(pair) {
                return Err(Error::invalid(format!(
                    "query {q} returns id {} more than once",
                    n.id
                )));
            }
            pooled.push((n.distance, truth.contains(&pair)));
        }
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ap = 0.0f64;
    let mut prev_recall = 0.0f64;
    let mut tp = 0usize;
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        while i < pooled.len() && pooled[i].0.total_cmp(&t).is_eq() {
            tp += pooled[i].1 as usize;
            i += 1;
        }
        let recall = tp as f64 / total as f64;
        let precision = tp as f64 / i as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(AccuracyReport {
        kind: AccuracyKind::RangeAp,
        value: ap,
        per_query: Vec::new(),
        k: None,
        radius: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Neighbor;

    fn gt2() -> KnnGroundTruth {
        KnnGroundTruth::new(2, vec![0, 1, 5, 6], vec![1.0, 2.0, 1.0, 3.0]).unwrap()
    }

    fn lists(v: Vec<Vec<(u32, f32)>>) -> ResultSet {
        ResultSet::from_lists(
            v.into_iter()
                .map(|l| l.into_iter().map(|(i, d)| Neighbor::new(i, d)).collect())
                .collect(),
        )
    }

    #[test]
    fn exact_and_empty_recall() {
        let gt = gt2();
        let exact = ResultSet::from(&gt);
        let r = recall_at_k(&exact, &gt, 2, TieTolerance::Exact).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.per_query, vec![1.0, 1.0]);
        let empty = lists(vec![vec![], vec![]]);
        assert_eq!(recall_at_k(&empty, &gt, 2, TieTolerance::default()).unwrap().value, 0.0);
    }

    #[test]
    fn ties_count_as_hits() {
        let gt = gt2();
        let res = lists(vec![vec![(0, 1.0), (9, 2.0)], vec![(5, 1.0), (7, 3.5)]]);
        let exact = recall_at_k(&res, &gt, 2, TieTolerance::Exact).unwrap();
        assert_eq!(exact.per_query, vec![0.5, 0.5]);
        let tied = recall_at_k(&res, &gt, 2, TieTolerance::Relative).unwrap();
        assert_eq!(tied.per_query, vec![1.0, 0.5]);
    }

    #[test]
    fn only_first_k_and_unique_ids_count() {
        let gt = gt2();
        let res = lists(vec![vec![(9, 0.5), (8, 0.7), (0, 1.0)], vec![(5, 1.0), (5, 1.0)]]);
        let r = recall_at_k(&res, &gt, 2, TieTolerance::Exact).unwrap();
        assert_eq!(r.per_query, vec![0.0, 0.5]);
    }

    #[test]
    fn recall_argument_errors() {
        let gt = gt2();
        let res = lists(vec![vec![]]);
        assert!(recall_at_k(&res, &gt, 2, TieTolerance::Exact).is_err());
        let res = lists(vec![vec![], vec![]]);
        assert!(recall_at_k(&res, &gt, 3, TieTolerance::Exact).is_err());
        assert!(recall_at_k(&res, &gt, 0, TieTolerance::Exact).is_err());
    }

    fn range_gt() -> RangeGroundTruth {
        RangeGroundTruth::from_lists(vec![vec![(1, 0.1), (2, 0.2)], vec![(3, 0.3), (4, 0.4)]])
    }

    #[test]
    fn range_ap_hand_cases() {
        let gt = range_gt();
        assert_eq!(range_ap(&ResultSet::from(&gt), &gt).unwrap().value, 1.0);
        assert_eq!(range_ap(&lists(vec![vec![], vec![]]), &gt).unwrap().value, 0.0);
        let half = lists(vec![vec![(1, 0.1), (7, 0.8)], vec![(3, 0.3), (8, 0.9)]]);
        assert!((range_ap(&half, &gt).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn range_ap_errors() {
        let empty = RangeGroundTruth::from_lists(vec![vec![], vec![]]);
        assert!(range_ap(&lists(vec![vec![], vec![]]), &empty).is_err());
        let gt = range_gt();
        let dup = lists(vec![vec![(1, 0.1), (1, 0.1)], vec![]]);
        assert!(range_ap(&dup, &gt).is_err());
        assert!(range_ap(&lists(vec![vec![]]), &gt).is_err());
    }

    #[test]
    fn closer_true_positive_raises_ap() {
        let gt = range_gt();
        let base = lists(vec![vec![(7, 0.05), (1, 0.1)], vec![(8, 0.2)]]);
        let better = lists(vec![vec![(7, 0.05), (1, 0.1)], vec![(3, 0.01), (8, 0.2)]]);
        assert!(range_ap(&better, &gt).unwrap().value > range_ap(&base, &gt).unwrap().value);
    }
}
