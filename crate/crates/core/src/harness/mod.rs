// SPDX-License-Identifier: Apache-2.0

//! Experiment execution, run records, and the REST protocol for
//! out-of-process algorithms.

mod clock;
pub mod protocol;
mod records;
mod remote;
mod server;

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::dataset::{KnnGroundTruth, RangeGroundTruth, VectorDataset};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::index::{AnnIndex, Algorithm, IndexDescription, ResultSet, SearchParams};
use crate::metrics::{range_ap, recall_at_k, AccuracyReport, TieTolerance};

pub use clock::{Clock, ScriptedClock, SystemClock};
pub use protocol::{ServerState, StatusResponse, PROTOCOL_VERSION};
pub use records::{load_runs, persist_runs, RunRecord, RUN_SCHEMA_VERSION};
pub use remote::RemoteIndex;
pub use server::{algorithm_builder, serve_algorithm, BuildRequest, IndexBuilder, ServerHandle};

/// Most search configurations allowed per algorithm and dataset.
pub const MAX_QUERY_CONFIGS: usize = 10;

/// Query sets smaller than this trigger a warning.
pub const RECOMMENDED_MIN_QUERIES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryConfig {
    pub name: String,
    #[serde(default)]
    pub params: SearchParams,
}

impl QueryConfig {
    pub fn new(name: impl Into<String>, params: SearchParams) -> Self {
        QueryConfig {
            name: name.into(),
            params,
        }
    }
}

/// Checks the count bound and that names are unique and non-empty.
pub fn validate_configs(configs: &[QueryConfig]) -> Result<()> {
    if configs.is_empty() {
        return Err(Error::invalid("at least one query configuration is required"));
    }
    if configs.len() > MAX_QUERY_CONFIGS {
        return Err(Error::invalid(format!(
            "{} query configurations given; the limit is {MAX_QUERY_CONFIGS}",
            configs.len()
        )));
    }
    let mut names = std::collections::HashSet::new();
    for c in configs {
        if c.name.is_empty() {
            return Err(Error::invalid("query configuration names must be non-empty"));
        }
        if !names.insert(c.name.as_str()) {
            return Err(Error::invalid(format!(
                "duplicate query configuration name `{}`",
                c.name
            )));
        }
    }
    Ok(())
}

/// What the queries ask for and how answers are scored.
#[derive(Clone, Copy, Debug)]
pub enum Task<'a> {
    Knn {
        gt: &'a KnnGroundTruth,
        k: usize,
        tie: TieTolerance,
    },
    Range {
        gt: &'a RangeGroundTruth,
        /// Squared-L2 radius.
        radius: f32,
    },
}

impl Task<'_> {
    fn num_queries(&self) -> usize {
        match self {
            Task::Knn { gt, .. } => gt.num_queries(),
            Task::Range { gt, .. } => gt.num_queries(),
        }
    }
}

/// Identity of the base dataset an index was built on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub count: usize,
}

impl DatasetInfo {
    pub fn of(dataset: &VectorDataset) -> Self {
        DatasetInfo {
            name: dataset.name().to_string(),
            count: dataset.len(),
        }
    }
}

pub struct RunOptions<'a> {
    /// Timed passes per configuration; the fastest one is reported.
    pub repeats: usize,
    pub clock: &'a dyn Clock,
    pub exec: &'a Executor,
    pub build_seconds: f64,
}

/// Runs every configuration in order and returns one record per
/// configuration.
///
/// Each pass submits the whole query set in one call and is timed from
/// submission to the last result. Accuracy is scored from the first pass.
pub fn run_experiment(
    index: &dyn AnnIndex,
    dataset: &DatasetInfo,
    queries: &VectorDataset,
    task: &Task<'_>,
    configs: &[QueryConfig],
    opts: &RunOptions<'_>,
) -> Result<Vec<RunRecord>> {
    validate_configs(configs)?;
    if opts.repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    if task.num_queries() != queries.len() {
        return Err(Error::invalid(format!(
            "ground truth covers {} queries but {} were given",
            task.num_queries(),
            queries.len()
        )));
    }
    let description = index.describe();
    if let Ok(algorithm) = Algorithm::parse(&description.algorithm) {
        let context = format!("{algorithm} search");
        for c in configs {
            c.params.validate(algorithm.search_keys(), &context)?;
        }
    }
    if queries.len() < RECOMMENDED_MIN_QUERIES {
        log::warn!(
            "only {} queries; at least {RECOMMENDED_MIN_QUERIES} are recommended for stable throughput",
            queries.len()
        );
    }

    let mut records = Vec::with_capacity(configs.len());
    for config in configs {
        let mut best_ns = u64::MAX;
        let mut first: Option<ResultSet> = None;
        for _ in 0..opts.repeats {
            let start = opts.clock.now_ns();
            let results = search(index, queries, task, &config.params, opts.exec)?;
            let end = opts.clock.now_ns();
            best_ns = best_ns.min(end.saturating_sub(start).max(1));
            first.get_or_insert(results);
        }
        let results = first.expect("at least one pass");
        let accuracy = score(&results, task)?;
        let wall_seconds = best_ns as f64 / 1e9;
        log::info!(
            "{} {}: qps={:.1} accuracy={:.4}",
            description.algorithm,
            config.name,
            queries.len() as f64 / wall_seconds,
            accuracy.value
        );
        records.push(RunRecord {
            schema_version: RUN_SCHEMA_VERSION,
            algorithm: description.algorithm.clone(),
            index: description.clone(),
            dataset: dataset.name.clone(),
            dataset_count: dataset.count,
            build_params: description.params.clone(),
            config: config.name.clone(),
            search_params: config.params.clone(),
            qps: queries.len() as f64 / wall_seconds,
            accuracy,
            build_seconds: opts.build_seconds,
            index_size_bytes: index.index_size_bytes(),
            wall_seconds,
            num_queries: queries.len(),
            repeats: opts.repeats,
            workers: opts.exec.workers(),
            energy_joules: None,
            timestamp: unix_now(),
        });
    }
    Ok(records)
}

fn search(
    index: &dyn AnnIndex,
    queries: &VectorDataset,
    task: &Task<'_>,
    params: &SearchParams,
    exec: &Executor,
) -> Result<ResultSet> {
    match *task {
        Task::Knn { k, .. } => index.search_knn(queries, k, params, exec),
        Task::Range { radius, .. } => index.search_range(queries, radius, params, exec),
    }
}

fn score(results: &ResultSet, task: &Task<'_>) -> Result<AccuracyReport> {
    match *task {
        Task::Knn { gt, k, tie } => recall_at_k(results, gt, k, tie),
        Task::Range { gt, radius } => Ok(range_ap(results, gt)?.with_radius(radius)),
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Human-readable identity of an index for logs.
pub fn describe_line(d: &IndexDescription) -> String {
    format!(
        "{} ({}) {}",
        d.algorithm,
        d.metric.name(),
        serde_json::to_string(&d.params).unwrap_or_default()
    )
}
