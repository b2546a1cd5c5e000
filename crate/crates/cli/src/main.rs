// SPDX-License-Identifier: Apache-2.0

//! `annbench` command-line driver.
//!
//! Exit status is 0 on success, 1 when inputs or configuration are invalid
//! and 2 when a step fails at run time.

mod params;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use annbench::dataset::{
    generate_synthetic, read_vectors, write_knn_gt, write_range_gt, write_vectors, QueryMode,
    ScalarKind, SyntheticSpec, KNN_GT_EXTENSION, RANGE_GT_EXTENSION,
};
use annbench::dataset::{read_knn_gt, read_range_gt};
use annbench::harness::{
    algorithm_builder, describe_line, load_runs, persist_runs, run_experiment, serve_algorithm,
    DatasetInfo, RunOptions, RunRecord, SystemClock, Task,
};
use annbench::index::{build_index, load_index, save_index, Algorithm, AnnIndex};
use annbench::metrics::TieTolerance;
use annbench::oracle::{brute_force_knn, brute_force_range};
use annbench::scoring::{
    emit_tradeoff_plot, leaderboard, pareto_frontier, points_from_runs, Hardware, Leaderboard,
    LeaderboardInput, LeaderboardMode, PlotFormat, PlotSeries, Thresholds, DEFAULT_MIN_DATASETS,
    T1_QPS_THRESHOLD,
};
use annbench::{Error, Executor, Metric};

use params::ParamFile;

const INDEX_FILE: &str = "index.ann";

#[derive(Parser, Debug)]
#[command(name = "annbench", version, about = "Approximate nearest neighbor benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic base set and query set.
    Gen(GenArgs),
    /// Compute exact ground truth with the brute-force oracle.
    Gt(GtArgs),
    /// Build an index and save it.
    Build(BuildArgs),
    /// Run query configurations against an index and record the results.
    Run(RunArgs),
    /// Serve an algorithm over the REST protocol.
    Serve(ServeArgs),
    /// Rank algorithms from run records.
    Score(ScoreArgs),
    /// Draw throughput/accuracy tradeoff plots from run records.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct DataRoot {
    /// Directory that relative input paths are resolved against.
    #[arg(long, env = "BIGANN_BENCH_DATA", value_name = "DIR")]
    data_root: Option<PathBuf>,
}

impl DataRoot {
    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.data_root {
            Some(root) if path.is_relative() && !path.exists() => root.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn input(&self, path: &Path) -> annbench::Result<PathBuf> {
        let p = self.resolve(path);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::InvalidArgument(format!("input file {} does not exist", p.display())))
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Output directory; defaults to the data root.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Name used for the output files.
    #[arg(long, default_value = "synthetic")]
    name: String,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    /// Element type: u8, i8 or f32.
    #[arg(long, default_value = "f32")]
    kind: String,
    #[arg(long, default_value_t = 16)]
    clusters: usize,
    /// Per-coordinate cluster standard deviation, in element units.
    #[arg(long, default_value_t = 0.5)]
    cluster_std: f64,
    #[arg(long, default_value_t = 1_000)]
    num_queries: usize,
    /// Draw queries around fresh centers instead of the base centers.
    #[arg(long)]
    out_of_distribution: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    root: DataRoot,
}

#[derive(Args, Debug)]
struct GtArgs {
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    #[arg(long, value_name = "FILE")]
    queries: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Neighbors per query.
    #[arg(long, default_value_t = 100, conflicts_with = "radius")]
    k: usize,
    /// Squared-L2 radius; switches to range ground truth.
    #[arg(long)]
    radius: Option<f32>,
    /// l2 or ip.
    #[arg(long, default_value = "l2")]
    metric: String,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    root: DataRoot,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// flat, ivf, ivfpq or vamana.
    #[arg(long)]
    algo: String,
    /// JSON parameter file; only `build_params` is used.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: String,
    /// Overrides the `seed` build parameter.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    root: DataRoot,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Base set; used to build the index unless `--index` is given, and to
    /// name the dataset in run records.
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// Previously built index file.
    #[arg(long, value_name = "FILE")]
    index: Option<PathBuf>,
    /// Algorithm to build when no `--index` is given.
    #[arg(long, required_unless_present = "index")]
    algo: Option<String>,
    #[arg(long, value_name = "FILE")]
    queries: PathBuf,
    /// Ground truth file (`.knn.gt` or `.range.gt`).
    #[arg(long, value_name = "FILE")]
    gt: PathBuf,
    /// JSON parameter file with build parameters and query configurations.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Squared-L2 radius; required with range ground truth.
    #[arg(long)]
    radius: Option<f32>,
    #[arg(long, default_value = "l2")]
    metric: String,
    /// Timed passes per configuration; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Overrides the `seed` build parameter.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    root: DataRoot,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    algo: String,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Run record files.
    #[arg(required = true, value_name = "RUNS")]
    runs: Vec<PathBuf>,
    /// recall-at-qps, qps-at-recall, joules-per-query or capacity-cost.
    #[arg(long, default_value = "recall-at-qps")]
    mode: String,
    /// QPS floor for recall-at-qps; accuracy floor for the other modes.
    #[arg(long)]
    threshold: Option<f64>,
    /// QPS floor for joules-per-query.
    #[arg(long, default_value_t = T1_QPS_THRESHOLD)]
    min_qps: f64,
    /// Algorithm whose runs form the baseline curves.
    #[arg(long)]
    baseline: Option<String>,
    /// JSON map from algorithm to `{msrp_usd, avg_power_watts}`.
    #[arg(long, value_name = "FILE")]
    hardware: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_DATASETS)]
    min_datasets: usize,
    /// Also write the leaderboard as JSON into this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Run record files.
    #[arg(required = true, value_name = "RUNS")]
    runs: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// svg or csv.
    #[arg(long, default_value = "svg")]
    format: String,
    /// Draw a cutoff line at this QPS.
    #[arg(long)]
    threshold: Option<f64>,
    /// Plot only this dataset; by default every dataset gets a file.
    #[arg(long)]
    dataset: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Remote(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Gt(a) => gt(a),
        Command::Build(a) => build(a),
        Command::Run(a) => run(a),
        Command::Serve(a) => serve(a),
        Command::Score(a) => score(a),
        Command::Plot(a) => plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn out_dir(path: &Path) -> CliResult<&Path> {
    fs::create_dir_all(path)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))?;
    Ok(path)
}

fn stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("dataset");
    name.split('.').next().unwrap_or(name).to_string()
}

fn load_params(root: &DataRoot, path: Option<&Path>) -> CliResult<ParamFile> {
    match path {
        Some(p) => Ok(ParamFile::load(&root.input(p)?)?),
        None => Ok(ParamFile::default()),
    }
}

fn gen(a: GenArgs) -> CliResult {
    let out = a
        .out
        .clone()
        .or_else(|| a.root.data_root.clone())
        .ok_or_else(|| Failure::Validation("--out is required when no data root is set".into()))?;
    let kind = ScalarKind::parse(&a.kind)?;
    let spec = SyntheticSpec {
        n: a.n,
        dim: a.dim,
        kind,
        n_clusters: a.clusters,
        cluster_std: a.cluster_std,
        n_queries: a.num_queries,
        seed: a.seed,
        query_mode: if a.out_of_distribution {
            QueryMode::OutOfDistribution
        } else {
            QueryMode::InDistribution
        },
    };
    spec.validate()?;
    let data = generate_synthetic(&spec)?;
    let dir = out_dir(&out)?;
    let base = dir.join(format!("{}.base.{}", a.name, kind.extension()));
    let queries = dir.join(format!("{}.query.{}", a.name, kind.extension()));
    write_vectors(&data.base.with_name(a.name.clone()), &base)?;
    write_vectors(&data.queries, &queries)?;
    println!("{}", base.display());
    println!("{}", queries.display());
    Ok(())
}

fn gt(a: GtArgs) -> CliResult {
    let metric = Metric::parse(&a.metric)?;
    let base = read_vectors(&a.root.input(&a.dataset)?)?;
    let queries = read_vectors(&a.root.input(&a.queries)?)?;
    let exec = Executor::with_workers(a.workers);
    let dir = out_dir(&a.out)?;
    let name = stem(&a.dataset);
    let path = match a.radius {
        Some(radius) => {
            let gt = brute_force_range(&base, &queries, radius, metric, &exec)?;
            let path = dir.join(format!("{name}.{RANGE_GT_EXTENSION}"));
            write_range_gt(&gt, &path)?;
            path
        }
        None => {
            let gt = brute_force_knn(&base, &queries, a.k, metric, &exec)?;
            let path = dir.join(format!("{name}.{KNN_GT_EXTENSION}"));
            write_knn_gt(&gt, &path)?;
            path
        }
    };
    println!("{}", path.display());
    Ok(())
}

fn build_params(file: &ParamFile, seed: Option<u64>) -> annbench::index::Params {
    let mut p = file.build_params.clone();
    if let Some(s) = seed {
        p = p.with("seed", s as i64);
    }
    p
}

fn build(a: BuildArgs) -> CliResult {
    let algo = Algorithm::parse(&a.algo)?;
    let metric = Metric::parse(&a.metric)?;
    let file = load_params(&a.root, a.params.as_deref())?;
    let params = build_params(&file, a.seed);
    params.validate(algo.build_keys(), &format!("{algo} build"))?;
    let base = read_vectors(&a.root.input(&a.dataset)?)?;
    let exec = Executor::with_workers(a.workers);
    let started = Instant::now();
    let index = build_index(algo, &base, metric, &params, &exec)?;
    let seconds = started.elapsed().as_secs_f64();
    let path = out_dir(&a.out)?.join(INDEX_FILE);
    save_index(index.as_ref(), &path)?;
    println!("{} built in {seconds:.2}s -> {}", describe_line(&index.describe()), path.display());
    Ok(())
}

fn run(a: RunArgs) -> CliResult {
    let metric = Metric::parse(&a.metric)?;
    let file = load_params(&a.root, a.params.as_deref())?;
    let configs = file.configs_or_default()?;
    if a.repeats == 0 {
        return Err(Failure::Validation("--repeats must be at least 1".into()));
    }
    let gt_path = a.root.input(&a.gt)?;
    let queries_path = a.root.input(&a.queries)?;
    let dataset_path = a.root.resolve(&a.dataset);
    let exec = Executor::with_workers(a.workers);

    let (index, build_seconds): (Box<dyn AnnIndex>, f64) = match &a.index {
        Some(p) => (load_index(&a.root.input(p)?)?, 0.0),
        None => {
            let algo = Algorithm::parse(a.algo.as_deref().unwrap_or_default())?;
            let params = build_params(&file, a.seed);
            params.validate(algo.build_keys(), &format!("{algo} build"))?;
            let base = read_vectors(&a.root.input(&a.dataset)?)?;
            let started = Instant::now();
            let index = build_index(algo, &base, metric, &params, &exec)?;
            (index, started.elapsed().as_secs_f64())
        }
    };
    let queries = read_vectors(&queries_path)?;
    let dataset = DatasetInfo {
        name: stem(&dataset_path),
        count: index.len(),
    };

    let gt_name = gt_path.to_string_lossy();
    let knn;
    let range;
    let task = if gt_name.ends_with(RANGE_GT_EXTENSION) {
        let radius = a
            .radius
            .ok_or_else(|| Failure::Validation("--radius is required with range ground truth".into()))?;
        range = read_range_gt(&gt_path)?;
        Task::Range { gt: &range, radius }
    } else {
        knn = read_knn_gt(&gt_path)?;
        Task::Knn {
            gt: &knn,
            k: a.k,
            tie: TieTolerance::default(),
        }
    };

    let clock = SystemClock::new();
    let opts = RunOptions {
        repeats: a.repeats,
        clock: &clock,
        exec: &exec,
        build_seconds,
    };
    let records = run_experiment(index.as_ref(), &dataset, &queries, &task, &configs, &opts)?;
    for r in &records {
        println!("{}\tqps={:.1}\taccuracy={:.4}", r.config, r.qps, r.accuracy.value);
    }
    let path = out_dir(&a.out)?.join(format!("{}.{}.runs.jsonl", dataset.name, index.describe().algorithm));
    if path.exists() {
        fs::remove_file(&path).map_err(Error::from)?;
    }
    persist_runs(&records, &path)?;
    Ok(())
}

fn serve(a: ServeArgs) -> CliResult {
    let algo = Algorithm::parse(&a.algo)?;
    let exec = Executor::with_workers(a.workers);
    let handle = serve_algorithm(algorithm_builder(algo, exec.clone()), a.addr.as_str(), exec)?;
    println!("serving {algo} on {}", handle.url());
    handle.wait();
    Ok(())
}

fn load_all_runs(paths: &[PathBuf]) -> CliResult<Vec<RunRecord>> {
    let mut all = Vec::new();
    for p in paths {
        if !p.is_file() {
            return Err(Failure::Validation(format!("run file {} does not exist", p.display())));
        }
        all.extend(load_runs(p)?);
    }
    Ok(all)
}

fn score(a: ScoreArgs) -> CliResult {
    let mode = LeaderboardMode::parse(&a.mode)?;
    let mut thresholds = Thresholds {
        qps: a.min_qps,
        ..Thresholds::default()
    };
    match (mode, a.threshold) {
        (LeaderboardMode::RecallAtQps, Some(t)) => thresholds.qps = t,
        (_, Some(t)) => thresholds.accuracy = t,
        _ => {}
    }
    let records = load_all_runs(&a.runs)?;
    let mut input = LeaderboardInput::default();
    for ((algorithm, dataset), points) in points_from_runs(&records) {
        if a.baseline.as_deref() == Some(algorithm.as_str()) {
            input.baselines.insert(dataset, points);
        } else {
            input.entries.entry(algorithm).or_default().insert(dataset, points);
        }
    }
    if mode == LeaderboardMode::RecallAtQps && a.baseline.is_none() {
        return Err(Failure::Validation("recall-at-qps scoring needs --baseline".into()));
    }
    if let Some(p) = &a.hardware {
        if !p.is_file() {
            return Err(Failure::Validation(format!("hardware file {} does not exist", p.display())));
        }
        let text = fs::read_to_string(p).map_err(Error::from)?;
        let hw: BTreeMap<String, Hardware> = serde_json::from_str(&text).map_err(Error::from)?;
        input.hardware = hw;
    }
    let board = leaderboard(&input, mode, &thresholds, a.min_datasets)?;
    print_board(&board);
    if let Some(dir) = &a.out {
        let path = out_dir(dir)?.join(format!("leaderboard.{}.json", mode.name()));
        let text = serde_json::to_string_pretty(&board).map_err(Error::from)?;
        fs::write(&path, text + "\n").map_err(Error::from)?;
    }
    Ok(())
}

fn print_board(board: &Leaderboard) {
    if board.mode == LeaderboardMode::RecallAtQps {
        for e in &board.entries {
            let rank = e.rank.map_or("-".to_string(), |r| r.to_string());
            let note = if e.eligible { "" } else { " (ineligible)" };
            println!(
                "{rank}\t{}\t{:.4}\t{} datasets{note}",
                e.algorithm,
                e.aggregate.unwrap_or(0.0),
                e.scores.len()
            );
        }
        return;
    }
    for (dataset, cells) in &board.per_dataset {
        for c in cells {
            println!("{dataset}\t{}\t{}\t{}", c.rank, c.algorithm, c.value);
        }
    }
}

fn plot(a: PlotArgs) -> CliResult {
    let format = PlotFormat::parse(&a.format)?;
    let records = load_all_runs(&a.runs)?;
    let mut by_dataset: BTreeMap<String, Vec<PlotSeries>> = BTreeMap::new();
    for ((algorithm, dataset), points) in points_from_runs(&records) {
        if a.dataset.as_deref().is_some_and(|d| d != dataset) {
            continue;
        }
        let curve = pareto_frontier(&points)?;
        by_dataset.entry(dataset).or_default().push(PlotSeries {
            name: algorithm,
            points: curve.points().to_vec(),
        });
    }
    if by_dataset.is_empty() {
        return Err(Failure::Validation("no run records match".into()));
    }
    let dir = out_dir(&a.out)?;
    let ext = match format {
        PlotFormat::Svg => "svg",
        PlotFormat::Csv => "csv",
    };
    for (dataset, series) in by_dataset {
        let path = dir.join(format!("{dataset}.{ext}"));
        emit_tradeoff_plot(&series, &path, format, a.threshold)?;
        println!("{}", path.display());
    }
    Ok(())
}
