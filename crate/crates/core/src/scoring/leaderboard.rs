// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::cost::{capacity_cost, CostModelInput};
use super::power::gated_joules_per_query;
use super::{pareto_frontier, ParetoCurve, TradeoffPoint};
use crate::error::{Error, Result};

pub const T1_QPS_THRESHOLD: f64 = 10_000.0;
pub const T2_QPS_THRESHOLD: f64 = 1_500.0;
pub const T3_QPS_THRESHOLD: f64 = 2_000.0;
pub const DEFAULT_MIN_DATASETS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeaderboardMode {
    /// Sum over datasets of accuracy gain over the baseline at a QPS floor.
    RecallAtQps,
    /// Best QPS at an accuracy floor, per dataset.
    QpsAtRecall,
    /// Lowest energy per query at QPS and accuracy floors, per dataset.
    JoulesPerQuery,
    /// Cost of serving the target load at the accuracy floor, per dataset.
    CapacityCost,
}

impl LeaderboardMode {
    pub const ALL: [LeaderboardMode; 4] = [
        LeaderboardMode::RecallAtQps,
        LeaderboardMode::QpsAtRecall,
        LeaderboardMode::JoulesPerQuery,
        LeaderboardMode::CapacityCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LeaderboardMode::RecallAtQps => "recall-at-qps",
            LeaderboardMode::QpsAtRecall => "qps-at-recall",
            LeaderboardMode::JoulesPerQuery => "joules-per-query",
            LeaderboardMode::CapacityCost => "capacity-cost",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown leaderboard mode `{s}` (expected recall-at-qps, qps-at-recall, joules-per-query or capacity-cost)"
                ))
            })
    }

    fn higher_is_better(self) -> bool {
        matches!(self, LeaderboardMode::RecallAtQps | LeaderboardMode::QpsAtRecall)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub qps: f64,
    pub accuracy: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            qps: T1_QPS_THRESHOLD,
            accuracy: 0.9,
        }
    }
}

/// Machine used for the cost board.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hardware {
    pub msrp_usd: f64,
    pub avg_power_watts: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardInput {
    /// algorithm -> dataset -> measured points.
    pub entries: BTreeMap<String, BTreeMap<String, Vec<TradeoffPoint>>>,
    /// dataset -> baseline points.
    #[serde(default)]
    pub baselines: BTreeMap<String, Vec<TradeoffPoint>>,
    /// algorithm -> hardware, needed only by the cost board.
    #[serde(default)]
    pub hardware: BTreeMap<String, Hardware>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub algorithm: String,
    pub mode: LeaderboardMode,
    /// Datasets where the algorithm produced a value.
    pub scores: BTreeMap<String, f64>,
    /// Sum of `scores`; only the recall board aggregates.
    pub aggregate: Option<f64>,
    pub rank: Option<usize>,
    pub eligible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCell {
    pub algorithm: String,
    pub value: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub mode: LeaderboardMode,
    pub thresholds: Thresholds,
    pub min_datasets: usize,
    pub datasets: Vec<String>,
    /// Ranked entries first, then ineligible ones.
    pub entries: Vec<LeaderboardEntry>,
    pub per_dataset: BTreeMap<String, Vec<RankedCell>>,
}

fn curve(points: &[TradeoffPoint]) -> Result<Option<ParetoCurve>> {
    if points.is_empty() {
        Ok(None)
    } else {
        pareto_frontier(points).map(Some)
    }
}

fn cell(
    mode: LeaderboardMode,
    points: &[TradeoffPoint],
    baseline: Option<f64>,
    thresholds: &Thresholds,
    hardware: Option<&Hardware>,
) -> Result<Option<f64>> {
    let Some(c) = curve(points)? else {
        return Ok(None);
    };
    Ok(match mode {
        LeaderboardMode::RecallAtQps => c
            .accuracy_at_qps(thresholds.qps)
            .map(|a| a - baseline.unwrap_or(0.0)),
        LeaderboardMode::QpsAtRecall => c.qps_at_accuracy(thresholds.accuracy),
        LeaderboardMode::JoulesPerQuery => {
            gated_joules_per_query(points, thresholds.qps, thresholds.accuracy).ok()
        }
        LeaderboardMode::CapacityCost => match (hardware, c.qps_at_accuracy(thresholds.accuracy)) {
            (Some(hw), Some(qps)) => Some(capacity_cost(&CostModelInput::new(
                hw.msrp_usd,
                hw.avg_power_watts,
                qps,
            ))?),
            _ => None,
        },
    })
}

fn better(mode: LeaderboardMode, a: f64, b: f64) -> Ordering {
    if mode.higher_is_better() {
        b.total_cmp(&a)
    } else {
        a.total_cmp(&b)
    }
}

/// Scores every algorithm under `mode`.
///
/// On the recall board a dataset's score is the gain over the baseline's
/// accuracy at the QPS threshold, datasets without a qualifying point add 0,
/// and algorithms with values on fewer than `min_datasets` datasets are
/// listed as ineligible. The other boards rank each dataset separately.
pub fn leaderboard(
    input: &LeaderboardInput,
    mode: LeaderboardMode,
    thresholds: &Thresholds,
    min_datasets: usize,
) -> Result<Leaderboard> {
    let datasets: BTreeSet<String> = input
        .entries
        .values()
        .flat_map(|per| per.keys().cloned())
        .collect();

    let mut baseline_acc: BTreeMap<&str, Option<f64>> = BTreeMap::new();
    if mode == LeaderboardMode::RecallAtQps {
        for d in &datasets {
            let points = input
                .baselines
                .get(d)
                .filter(|p| !p.is_empty())
                .ok_or_else(|| Error::invalid(format!("no baseline curve for dataset `{d}`")))?;
            let acc = pareto_frontier(points)?.accuracy_at_qps(thresholds.qps);
            if acc.is_none() {
                log::warn!("baseline for `{d}` never reaches {} qps; using 0", thresholds.qps);
            }
            baseline_acc.insert(d.as_str(), acc);
        }
    }

    let mut entries = Vec::with_capacity(input.entries.len());
    for (algorithm, per) in &input.entries {
        let mut scores = BTreeMap::new();
        for (dataset, points) in per {
            let base = baseline_acc.get(dataset.as_str()).copied().flatten();
            if let Some(v) = cell(mode, points, base, thresholds, input.hardware.get(algorithm))? {
                scores.insert(dataset.clone(), v);
            }
        }
        let eligible = scores.len() >= min_datasets;
        let aggregate = (mode == LeaderboardMode::RecallAtQps).then(|| scores.values().sum());
        entries.push(LeaderboardEntry {
            algorithm: algorithm.clone(),
            mode,
            scores,
            aggregate,
            rank: None,
            eligible,
        });
    }

    if mode == LeaderboardMode::RecallAtQps {
        entries.sort_by(|a, b| {
            b.eligible
                .cmp(&a.eligible)
                .then(better(mode, a.aggregate.unwrap_or(0.0), b.aggregate.unwrap_or(0.0)))
                .then(a.algorithm.cmp(&b.algorithm))
        });
        let mut next = 1;
        for e in entries.iter_mut().filter(|e| e.eligible) {
            e.rank = Some(next);
            next += 1;
        }
    }

    let mut per_dataset = BTreeMap::new();
    for d in &datasets {
        let mut cells: Vec<(String, f64)> = entries
            .iter()
            .filter_map(|e| e.scores.get(d).map(|&v| (e.algorithm.clone(), v)))
            .collect();
        cells.sort_by(|a, b| better(mode, a.1, b.1).then(a.0.cmp(&b.0)));
        per_dataset.insert(
            d.clone(),
            cells
                .into_iter()
                .enumerate()
                .map(|(i, (algorithm, value))| RankedCell {
                    algorithm,
                    value,
                    rank: i + 1,
                })
                .collect(),
        );
    }

    Ok(Leaderboard {
        mode,
        thresholds: *thresholds,
        min_datasets,
        datasets: datasets.into_iter().collect(),
        entries,
        per_dataset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(q: f64, a: f64) -> Vec<TradeoffPoint> {
        vec![TradeoffPoint::new(q, a, "c")]
    }

    fn input_with(algo: &str, cells: &[(&str, f64)]) -> LeaderboardInput {
        let mut input = LeaderboardInput::default();
        for (d, _) in cells {
            input.baselines.insert(d.to_string(), one(12_000.0, 0.5));
        }
        input.entries.insert(
            algo.into(),
            cells.iter().map(|(d, a)| (d.to_string(), one(12_000.0, *a))).collect(),
        );
        input
    }

    #[test]
    fn baseline_against_itself_scores_zero() {
        let input = input_with("base", &[("a", 0.5), ("b", 0.5), ("c", 0.5)]);
        let lb = leaderboard(&input, LeaderboardMode::RecallAtQps, &Thresholds::default(), 3).unwrap();
        assert_eq!(lb.entries[0].aggregate, Some(0.0));
        assert!(lb.entries[0].scores.values().all(|&v| v == 0.0));
        assert_eq!(lb.entries[0].rank, Some(1));
    }

    #[test]
    fn missing_baseline_is_an_error() {
        let mut input = input_with("x", &[("a", 0.6)]);
        input.baselines.clear();
        assert!(leaderboard(&input, LeaderboardMode::RecallAtQps, &Thresholds::default(), 1).is_err());
    }

    #[test]
    fn too_few_datasets_is_ineligible() {
        let input = input_with("x", &[("a", 0.6)]);
        let lb = leaderboard(&input, LeaderboardMode::RecallAtQps, &Thresholds::default(), 3).unwrap();
        assert!(!lb.entries[0].eligible);
        assert_eq!(lb.entries[0].rank, None);
    }

    #[test]
    fn mode_names_roundtrip() {
        for m in LeaderboardMode::ALL {
            assert_eq!(LeaderboardMode::parse(m.name()).unwrap(), m);
        }
        assert!(LeaderboardMode::parse("fastest").is_err());
    }

    #[test]
    fn per_dataset_boards_rank_by_direction() {
        let mut input = LeaderboardInput::default();
        let mut fast = TradeoffPoint::new(5000.0, 0.95, "f");
        fast.energy_joules_per_query = Some(0.3);
        let mut slow = TradeoffPoint::new(2500.0, 0.92, "s");
        slow.energy_joules_per_query = Some(0.1);
        input.entries.insert("fast".into(), [("d".to_string(), vec![fast])].into());
        input.entries.insert("slow".into(), [("d".to_string(), vec![slow])].into());
        let t = Thresholds { qps: 2000.0, accuracy: 0.9 };
        let qps = leaderboard(&input, LeaderboardMode::QpsAtRecall, &t, 1).unwrap();
        assert_eq!(qps.per_dataset["d"][0].algorithm, "fast");
        let joules = leaderboard(&input, LeaderboardMode::JoulesPerQuery, &t, 1).unwrap();
        assert_eq!(joules.per_dataset["d"][0].algorithm, "slow");
        assert_eq!(joules.entries[0].aggregate, None);
    }
}
