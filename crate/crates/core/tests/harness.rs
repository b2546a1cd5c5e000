// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use annbench::dataset::{generate_synthetic, QueryMode, ScalarKind, SyntheticSpec, VectorDataset};
use annbench::harness::{
    load_runs, persist_runs, run_experiment, DatasetInfo, QueryConfig, RunOptions, RunRecord,
    ScriptedClock, SystemClock, Task, MAX_QUERY_CONFIGS,
};
use annbench::index::{build_index, index_bytes, Algorithm, Params};
use annbench::metrics::TieTolerance;
use annbench::oracle::{brute_force_knn, brute_force_range};
use annbench::{Error, Executor, Metric};

fn data() -> (VectorDataset, VectorDataset) {
    let s = generate_synthetic(&SyntheticSpec {
        n: 1000,
        dim: 8,
        kind: ScalarKind::F32,
        n_clusters: 4,
        cluster_std: 0.3,
        n_queries: 40,
        seed: 21,
        query_mode: QueryMode::InDistribution,
    })
    .unwrap();
    (s.base, s.queries)
}

fn records(n: usize) -> Vec<RunRecord> {
    let exec = Executor::sequential();
    let (base, queries) = data();
    let gt = brute_force_knn(&base, &queries, 10, Metric::L2, &exec).unwrap();
    let index = build_index(Algorithm::Ivf, &base, Metric::L2, &Params::new().with("nlist", 8), &exec).unwrap();
    let configs: Vec<_> = (1..=n)
        .map(|p| QueryConfig::new(format!("nprobe={p}"), Params::new().with("nprobe", p)))
        .collect();
    let clock = SystemClock::new();
    let opts = RunOptions { repeats: 1, clock: &clock, exec: &exec, build_seconds: 0.5 };
    let task = Task::Knn { gt: &gt, k: 10, tie: TieTolerance::default() };
    run_experiment(index.as_ref(), &DatasetInfo::of(&base), &queries, &task, &configs, &opts).unwrap()
}

#[test]
fn records_round_trip_and_append() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    let first = records(3);
    persist_runs(&first, &path).unwrap();
    assert_eq!(load_runs(&path).unwrap(), first);
    let second = records(2);
    persist_runs(&second, &path).unwrap();
    let all = load_runs(&path).unwrap();
    assert_eq!(all.len(), 5);
    assert_eq!(&all[..3], &first[..]);
    assert_eq!(&all[3..], &second[..]);
}

#[test]
fn empty_file_holds_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    std::fs::File::create(&path).unwrap();
    assert!(load_runs(&path).unwrap().is_empty());
}

#[test]
fn malformed_line_is_reported_by_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    persist_runs(&records(2), &path).unwrap();
    writeln!(std::fs::OpenOptions::new().append(true).open(&path).unwrap(), "{{not json").unwrap();
    match load_runs(&path) {
        Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a malformed-line error, got {other:?}"),
    }
}

#[test]
fn unknown_schema_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    let mut r = records(1);
    r[0].schema_version = 99;
    persist_runs(&r, &path).unwrap();
    assert!(matches!(load_runs(&path), Err(Error::Malformed { line: 1, .. })));
}

#[test]
fn configuration_limits_are_enforced() {
    let exec = Executor::sequential();
    let (base, queries) = data();
    let gt = brute_force_knn(&base, &queries, 5, Metric::L2, &exec).unwrap();
    let index = build_index(Algorithm::Flat, &base, Metric::L2, &Params::new(), &exec).unwrap();
    let clock = SystemClock::new();
    let opts = RunOptions { repeats: 1, clock: &clock, exec: &exec, build_seconds: 0.0 };
    let task = Task::Knn { gt: &gt, k: 5, tie: TieTolerance::default() };
    let info = DatasetInfo::of(&base);

    let many: Vec<_> = (0..=MAX_QUERY_CONFIGS).map(|i| QueryConfig::new(format!("c{i}"), Params::new())).collect();
    let err = run_experiment(index.as_ref(), &info, &queries, &task, &many, &opts).unwrap_err();
    assert!(err.to_string().contains("limit is 10"), "{err}");
    let ok = &many[..MAX_QUERY_CONFIGS];
    assert_eq!(run_experiment(index.as_ref(), &info, &queries, &task, ok, &opts).unwrap().len(), 10);

    let dup = vec![QueryConfig::new("a", Params::new()), QueryConfig::new("a", Params::new())];
    assert!(run_experiment(index.as_ref(), &info, &queries, &task, &dup, &opts).is_err());
    assert!(run_experiment(index.as_ref(), &info, &queries, &task, &[], &opts).is_err());
    let bad = vec![QueryConfig::new("a", Params::new().with("nprobe", 1))];
    assert!(matches!(
        run_experiment(index.as_ref(), &info, &queries, &task, &bad, &opts),
        Err(Error::UnknownParameter { .. })
    ));
    let zero = RunOptions { repeats: 0, ..opts };
    assert!(run_experiment(index.as_ref(), &info, &queries, &task, &many[..1], &zero).is_err());
    let fewer = queries.slice_prefix(10).unwrap();
    assert!(run_experiment(index.as_ref(), &info, &fewer, &task, &many[..1], &opts).is_err());
}

#[test]
fn runs_leave_the_index_untouched() {
    let exec = Executor::sequential();
    let (base, queries) = data();
    let gt = brute_force_knn(&base, &queries, 10, Metric::L2, &exec).unwrap();
    let index = build_index(
        Algorithm::IvfPq,
        &base,
        Metric::L2,
        &Params::new().with("nlist", 4).with("m", 2).with("nbits", 4).with("keep_raw", true),
        &exec,
    )
    .unwrap();
    let before = index_bytes(index.as_ref()).unwrap();
    let clock = SystemClock::new();
    let opts = RunOptions { repeats: 2, clock: &clock, exec: &exec, build_seconds: 0.0 };
    let task = Task::Knn { gt: &gt, k: 10, tie: TieTolerance::default() };
    let configs = vec![
        QueryConfig::new("fast", Params::new().with("nprobe", 1)),
        QueryConfig::new("slow", Params::new().with("nprobe", 4).with("rerank", 50)),
    ];
    let first = run_experiment(index.as_ref(), &DatasetInfo::of(&base), &queries, &task, &configs, &opts).unwrap();
    assert_eq!(index_bytes(index.as_ref()).unwrap(), before);
    let again = run_experiment(index.as_ref(), &DatasetInfo::of(&base), &queries, &task, &configs, &opts).unwrap();
    for (a, b) in first.iter().zip(&again) {
        assert_eq!(a.accuracy, b.accuracy);
    }
}

#[test]
fn scripted_timing_and_range_scoring() {
    let exec = Executor::sequential();
    let (base, queries) = data();
    let knn = brute_force_knn(&base, &queries, 10, Metric::L2, &exec).unwrap();
    let radius = knn.distances(0)[9];
    let gt = brute_force_range(&base, &queries, radius, Metric::L2, &exec).unwrap();
    let index = build_index(Algorithm::Flat, &base, Metric::L2, &Params::new(), &exec).unwrap();
    let clock = ScriptedClock::from_pass_durations(&[0.5, 0.25, 2.0]);
    let opts = RunOptions { repeats: 3, clock: &clock, exec: &exec, build_seconds: 1.0 };
    let task = Task::Range { gt: &gt, radius };
    let configs = vec![QueryConfig::new("exact", Params::new())];
    let runs = run_experiment(index.as_ref(), &DatasetInfo::of(&base), &queries, &task, &configs, &opts).unwrap();
    assert_eq!(runs[0].wall_seconds, 0.25);
    assert_eq!(runs[0].qps, 160.0);
    assert_eq!(runs[0].accuracy.value, 1.0);
    assert_eq!(runs[0].accuracy.radius, Some(radius));
    assert_eq!(runs[0].repeats, 3);
}
