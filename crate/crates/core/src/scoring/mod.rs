// SPDX-License-Identifier: Apache-2.0

//! Pareto curves, threshold lookups, leaderboards, power and cost models,
//! and tradeoff plots.

mod cost;
mod leaderboard;
mod plot;
mod power;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::RunRecord;

pub use cost::{capacity_cost, machines_required, CostModelInput, HOURS_PER_YEAR};
pub use leaderboard::{
    leaderboard, Hardware, Leaderboard, LeaderboardEntry, LeaderboardInput, LeaderboardMode,
    RankedCell, Thresholds, DEFAULT_MIN_DATASETS, T1_QPS_THRESHOLD, T2_QPS_THRESHOLD,
    T3_QPS_THRESHOLD,
};
pub use plot::{emit_tradeoff_plot, read_tradeoff_csv, PlotFormat, PlotSeries};
pub use power::{gated_joules_per_query, integrate_power, joules_per_query, PowerSample};

/// One measured configuration in QPS/accuracy space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub qps: f64,
    pub accuracy: f64,
    pub config: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_joules_per_query: Option<f64>,
    /// Position of the originating run record, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
}

impl TradeoffPoint {
    pub fn new(qps: f64, accuracy: f64, config: impl Into<String>) -> Self {
        TradeoffPoint {
            qps,
            accuracy,
            config: config.into(),
            energy_joules_per_query: None,
            source: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.qps > 0.0 && self.qps.is_finite()) {
            return Err(Error::invalid(format!(
                "config `{}` has non-positive qps {}",
                self.config, self.qps
            )));
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(Error::invalid(format!(
                "config `{}` has accuracy {} outside [0, 1]",
                self.config, self.accuracy
            )));
        }
        Ok(())
    }

    /// True if `self` is at least as good on both axes and better on one.
    pub fn dominates(&self, other: &TradeoffPoint) -> bool {
        self.qps >= other.qps
            && self.accuracy >= other.accuracy
            && (self.qps > other.qps || self.accuracy > other.accuracy)
    }
}

/// Non-dominated points ordered by descending qps and strictly increasing
/// accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParetoCurve {
    points: Vec<TradeoffPoint>,
}

impl ParetoCurve {
    pub fn points(&self) -> &[TradeoffPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest accuracy among points with `qps >= threshold_qps`.
    pub fn accuracy_at_qps(&self, threshold_qps: f64) -> Option<f64> {
        accuracy_at_qps(self, threshold_qps)
    }

    /// Highest qps among points with `accuracy >= min_accuracy`.
    pub fn qps_at_accuracy(&self, min_accuracy: f64) -> Option<f64> {
        qps_at_accuracy(self, min_accuracy)
    }
}

/// Keeps exactly the non-dominated points. Among points equal on both axes
/// the earliest in input order survives.
pub fn pareto_frontier(points: &[TradeoffPoint]) -> Result<ParetoCurve> {
    if points.is_empty() {
        return Err(Error::invalid("cannot form a Pareto curve from no points"));
    }
    for p in points {
        p.validate()?;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pb.qps
            .total_cmp(&pa.qps)
            .then(pb.accuracy.total_cmp(&pa.accuracy))
            .then(a.cmp(&b))
    });
    let mut kept: Vec<TradeoffPoint> = Vec::new();
    for i in order {
        let p = &points[i];
        if kept.last().is_none_or(|last| p.accuracy > last.accuracy) {
            kept.push(p.clone());
        }
    }
    Ok(ParetoCurve { points: kept })
}

pub fn accuracy_at_qps(curve: &ParetoCurve, threshold_qps: f64) -> Option<f64> {
    curve
        .points
        .iter()
        .filter(|p| p.qps >= threshold_qps)
        .map(|p| p.accuracy)
        .max_by(f64::total_cmp)
}

pub fn qps_at_accuracy(curve: &ParetoCurve, min_accuracy: f64) -> Option<f64> {
    curve
        .points
        .iter()
        .filter(|p| p.accuracy >= min_accuracy)
        .map(|p| p.qps)
        .max_by(f64::total_cmp)
}

/// Groups run records into tradeoff points keyed by `(algorithm, dataset)`.
pub fn points_from_runs(records: &[RunRecord]) -> BTreeMap<(String, String), Vec<TradeoffPoint>> {
    let mut out: BTreeMap<(String, String), Vec<TradeoffPoint>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        out.entry((r.algorithm.clone(), r.dataset.clone()))
            .or_default()
            .push(TradeoffPoint {
                qps: r.qps,
                accuracy: r.accuracy.value,
                config: r.config.clone(),
                energy_joules_per_query: r
                    .energy_joules
                    .filter(|_| r.num_queries > 0)
                    .map(|e| e / r.num_queries as f64),
                source: Some(i),
            });
    }
    out
}
