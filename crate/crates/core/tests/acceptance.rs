// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use annbench::dataset::{
    decode_knn_gt, decode_range_gt, decode_vectors, encode_knn_gt, encode_range_gt,
    encode_vectors, generate_synthetic, read_knn_gt, read_range_gt, read_vectors, write_knn_gt,
    write_range_gt, write_vectors, KnnGroundTruth, QueryMode, RangeGroundTruth, ScalarKind,
    SyntheticSpec, VectorData, VectorDataset,
};
use annbench::harness::{
    algorithm_builder, run_experiment, serve_algorithm, DatasetInfo, QueryConfig, RemoteIndex,
    RunOptions, ScriptedClock, Task,
};
use annbench::index::{build_index, Algorithm, AnnIndex, Params, ResultSet};
use annbench::metrics::{range_ap, recall_at_k, TieTolerance};
use annbench::oracle::{brute_force_knn, brute_force_range};
use annbench::quantization::{kmeans_train, PqCodebook, Sq8Model};
use annbench::scoring::{
    accuracy_at_qps, capacity_cost, integrate_power, joules_per_query, leaderboard,
    machines_required, pareto_frontier, CostModelInput, LeaderboardInput, LeaderboardMode,
    PowerSample, Thresholds, TradeoffPoint, T1_QPS_THRESHOLD,
};
use annbench::{Executor, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Recall@10 of the first run of criterion 8, committed as the regression
/// bound.
const FROZEN_VAMANA_RECALL: f64 = 0.9088;

fn synthetic(n: usize, dim: usize, n_queries: usize, seed: u64) -> (VectorDataset, VectorDataset) {
    let s = generate_synthetic(&SyntheticSpec {
        n,
        dim,
        kind: ScalarKind::F32,
        n_clusters: 32,
        cluster_std: 0.2,
        n_queries,
        seed,
        query_mode: QueryMode::InDistribution,
    })
    .expect("synthetic data");
    (s.base, s.queries)
}

fn c1_oracle_equivalence() -> Outcome {
    let exec = Executor::default();
    let (base, queries) = synthetic(10_000, 64, 200, 1);
    let gt = brute_force_knn(&base, &queries, 10, Metric::L2, &exec).map_err(|e| e.to_string())?;
    let flat = build_index(Algorithm::Flat, &base, Metric::L2, &Params::new(), &exec).unwrap();
    let res = flat.search_knn(&queries, 10, &Params::new(), &exec).unwrap();
    let recall = recall_at_k(&res, &gt, 10, TieTolerance::Exact).unwrap().value;
    ensure!(recall == 1.0, "recall@10 = {recall}");

    let mut d10: Vec<f32> = (0..gt.num_queries()).map(|q| gt.distances(q)[9]).collect();
    d10.sort_by(f32::total_cmp);
    let radius = d10[d10.len() / 2];
    let rgt = brute_force_range(&base, &queries, radius, Metric::L2, &exec).unwrap();
    let rres = flat.search_range(&queries, radius, &Params::new(), &exec).unwrap();
    let ap = range_ap(&rres, &rgt).unwrap().value;
    ensure!(ap == 1.0, "range AP = {ap}");
    Ok(format!("recall@10 = {recall}, range AP = {ap} over {} gt pairs", rgt.total()))
}

fn c2_ivf_exactness_limit() -> Outcome {
    let exec = Executor::default();
    let (base, queries) = synthetic(10_000, 32, 200, 2);
    let flat = build_index(Algorithm::Flat, &base, Metric::L2, &Params::new(), &exec).unwrap();
    let nlist = 64;
    let ivf = build_index(
        Algorithm::Ivf,
        &base,
        Metric::L2,
        &Params::new().with("nlist", nlist).with("seed", 7),
        &exec,
    )
    .unwrap();
    let expected = flat.search_knn(&queries, 10, &Params::new(), &exec).unwrap();
    let got = ivf
        .search_knn(&queries, 10, &Params::new().with("nprobe", nlist), &exec)
        .unwrap();
    ensure!(got.ids() == expected.ids(), "ids differ from the flat index");
    ensure!(got == expected, "distances differ from the flat index");
    Ok(format!("{} queries identical with nprobe = nlist = {nlist}", queries.len()))
}

fn cells(v: &[(&str, f64)]) -> BTreeMap<String, Vec<TradeoffPoint>> {
    v.iter()
        .map(|&(d, acc)| (d.to_string(), vec![TradeoffPoint::new(T1_QPS_THRESHOLD, acc, "published")]))
        .collect()
}

fn c3_leaderboard() -> Outcome {
    let mut input = LeaderboardInput::default();
    input.baselines = cells(&[
        ("bigann-1B", 0.6345),
        ("deep-1B", 0.6503),
        ("msspacev-1B", 0.7289),
        ("msturing-1B", 0.7036),
        ("ssnpp-1B", 0.7538),
        ("text2image-1B", 0.0693),
    ]);
    input.entries.insert(
        "kst_ann_t1".into(),
        cells(&[("bigann-1B", 0.7122), ("deep-1B", 0.7122), ("msspacev-1B", 0.7645), ("msturing-1B", 0.7564)]),
    );
    input
        .entries
        .insert("puck-t1".into(), cells(&[("bigann-1B", 0.7147), ("deep-1B", 0.7226)]));
    input.entries.insert("buddy-t1".into(), cells(&[("bigann-1B", 0.6277)]));
    input
        .entries
        .insert("team11".into(), cells(&[("deep-1B", 0.6496), ("msturing-1B", 0.7122)]));
    let t = Thresholds {
        qps: T1_QPS_THRESHOLD,
        accuracy: 0.9,
    };
    let lb = leaderboard(&input, LeaderboardMode::RecallAtQps, &t, 3).map_err(|e| e.to_string())?;
    let get = |a: &str| lb.entries.iter().find(|e| e.algorithm == a).unwrap();
    let kst = get("kst_ann_t1").aggregate.unwrap();
    let puck = get("puck-t1").aggregate.unwrap();
    ensure!((kst - 0.2280).abs() <= 1e-6, "kst_ann_t1 aggregate {kst}");
    ensure!((puck - 0.1525).abs() <= 1e-6, "puck-t1 aggregate {puck}");
    ensure!(lb.entries[0].algorithm == "kst_ann_t1", "first place is {}", lb.entries[0].algorithm);
    ensure!(lb.entries[0].rank == Some(1), "kst_ann_t1 is not ranked");
    ensure!(!get("buddy-t1").eligible, "buddy-t1 should be ineligible");
    Ok(format!("kst_ann_t1 {kst:.4}, puck-t1 {puck:.4}, kst_ann_t1 ranked first"))
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, coarse: bool) -> Vec<TradeoffPoint> {
    (0..n)
        .map(|i| {
            let (q, a) = if coarse {
                (rng.random_range(1..20) as f64 * 500.0, rng.random_range(0..=10) as f64 / 10.0)
            } else {
                (rng.random_range(1.0..50_000.0), rng.random_range(0.0..=1.0))
            };
            TradeoffPoint::new(q, a, format!("c{i}"))
        })
        .collect()
}

fn c4_threshold_semantics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let n = rng.random_range(1..40);
        let pts = random_points(&mut rng, n, case % 2 == 0);
        let curve = pareto_frontier(&pts).unwrap();
        let threshold = rng.random_range(0.0..20_000.0);
        let mut brute: Option<f64> = None;
        for p in curve.points() {
            if p.qps >= threshold && brute.is_none_or(|b| p.accuracy > b) {
                brute = Some(p.accuracy);
            }
        }
        let got = accuracy_at_qps(&curve, threshold);
        ensure!(got == brute, "case {case}: {got:?} != {brute:?}");
    }
    Ok("1000 random curves agree with the brute-force maximum".into())
}

fn dominance_filter(points: &[TradeoffPoint]) -> Vec<(f64, f64, String)> {
    let mut out: Vec<(f64, f64, String)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let dominated = points.iter().any(|o| {
            o.qps >= p.qps && o.accuracy >= p.accuracy && (o.qps > p.qps || o.accuracy > p.accuracy)
        });
        let duplicate = points[..i].iter().any(|o| o.qps == p.qps && o.accuracy == p.accuracy);
        if !dominated && !duplicate {
            out.push((p.qps, p.accuracy, p.config.clone()));
        }
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

fn c5_pareto() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..1000 {
        let n = rng.random_range(1..60);
        let pts = random_points(&mut rng, n, case % 2 == 0);
        let curve = pareto_frontier(&pts).unwrap();
        let got: Vec<(f64, f64, String)> = curve
            .points()
            .iter()
            .map(|p| (p.qps, p.accuracy, p.config.clone()))
            .collect();
        ensure!(got == dominance_filter(&pts), "case {case}: frontier mismatch");
    }
    Ok("1000 random point sets agree with the O(n^2) dominance filter".into())
}

/// Threshold sweep written independently of the library: every distinct
/// returned distance is a threshold and counts are recomputed by full scan.
fn sweep_ap(results: &[Vec<(u32, f32)>], gt: &[Vec<u32>]) -> f64 {
    let total: usize = gt.iter().map(Vec::len).sum();
    let mut thresholds: Vec<f32> = results.iter().flatten().map(|&(_, d)| d).collect();
    thresholds.sort_by(f32::total_cmp);
    thresholds.dedup();
    let mut ap = 0.0;
    let mut last_recall = 0.0;
    for t in thresholds {
        let mut returned = 0usize;
        let mut tp = 0usize;
        for (q, list) in results.iter().enumerate() {
            for &(id, d) in list {
                if d <= t {
                    returned += 1;
                    tp += gt[q].contains(&id) as usize;
                }
            }
        }
        let recall = tp as f64 / total as f64;
        ap += (recall - last_recall) * (tp as f64 / returned as f64);
        last_recall = recall;
    }
    ap
}

fn c6_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let nq = 100;
        let mut gt_lists = Vec::with_capacity(nq);
        let mut res_lists = Vec::with_capacity(nq);
        for _ in 0..nq {
            let mut ids: Vec<u32> = (0..50).collect();
            let n_gt = rng.random_range(0..8);
            let n_res = rng.random_range(0..10);
            let mut pick = |n: usize| -> Vec<u32> {
                let mut v = Vec::new();
                for _ in 0..n {
                    let j = rng.random_range(0..ids.len());
                    v.push(ids.swap_remove(j));
                }
                v
            };
            let gt_ids = pick(n_gt);
            let mut res_ids: Vec<u32> = pick(n_res);
            res_ids.extend(gt_ids.iter().copied().filter(|_| rng.random_bool(0.6)));
            gt_lists.push(gt_ids);
            res_lists.push(
                res_ids
                    .into_iter()
                    .map(|id| (id, (rng.random_range(0..200) as f32) / 16.0))
                    .collect::<Vec<_>>(),
            );
        }
        if gt_lists.iter().all(Vec::is_empty) {
            gt_lists[0].push(0);
        }
        let gt = RangeGroundTruth::from_lists(
            gt_lists.iter().map(|l| l.iter().map(|&i| (i, 0.0)).collect()).collect(),
        );
        let mut sorted = res_lists.clone();
        for l in &mut sorted {
            l.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        }
        let results = ResultSet::from_lists(
            sorted
                .iter()
                .map(|l| l.iter().map(|&(i, d)| annbench::index::Neighbor::new(i, d)).collect())
                .collect(),
        );
        let got = range_ap(&results, &gt).map_err(|e| e.to_string())?.value;
        let want = sweep_ap(&res_lists, &gt_lists);
        worst = worst.max((got - want).abs());
        ensure!((got - want).abs() <= 1e-6, "case {case}: {got} vs {want}");
    }

    let exec = Executor::default();
    let (base, queries) = synthetic(2000, 16, 100, 66);
    let gt = brute_force_knn(&base, &queries, 10, Metric::L2, &exec).unwrap();
    for (case, nprobe) in [1usize, 2, 4, 8].into_iter().enumerate() {
        let ivf = build_index(Algorithm::Ivf, &base, Metric::L2, &Params::new().with("nlist", 16), &exec).unwrap();
        let res = ivf.search_knn(&queries, 10, &Params::new().with("nprobe", nprobe), &exec).unwrap();
        let report = recall_at_k(&res, &gt, 10, TieTolerance::from(0.0)).unwrap();
        for q in 0..queries.len() {
            let truth: HashSet<u32> = gt.ids(q).iter().copied().collect();
            let inter = res.query(q).iter().take(10).filter(|n| truth.contains(&n.id)).count();
            let want = inter as f64 / 10.0;
            ensure!(report.per_query[q] == want, "recall case {case} query {q}");
        }
    }
    Ok(format!("100 AP instances within {worst:.1e}; tie_eps=0 recall equals set intersection"))
}

fn c7_quantization() -> Outcome {
    let exec = Executor::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dim = 8;
    let pts: Vec<f32> = (0..2000 * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let pq = PqCodebook::train(&pts, dim, 2, 4, 3, &exec).unwrap();
    let err = |x: &[f32], code: &[u16]| -> f64 {
        let rec = pq.decode(code).unwrap();
        x.iter().zip(&rec).map(|(a, b)| ((a - b) as f64).powi(2)).sum()
    };
    for x in pts.chunks_exact(dim).take(500) {
        let code = pq.encode(x).unwrap();
        let mut best = f64::INFINITY;
        for a in 0..16u16 {
            for b in 0..16u16 {
                best = best.min(err(x, &[a, b]));
            }
        }
        let e = err(x, &code);
        ensure!(e == best, "PQ encoding error {e} exceeds exhaustive minimum {best}");
    }

    let vecs: Vec<f32> = (0..10_000 * 16).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let sq = Sq8Model::train(&vecs, 16).unwrap();
    for x in vecs.chunks_exact(16) {
        let back = sq.decode(&sq.encode(x).unwrap()).unwrap();
        for j in 0..16 {
            let bound = sq.scale[j] / 2.0 + 1e-6;
            ensure!((x[j] - back[j]).abs() <= bound, "SQ8 error {} > {bound}", (x[j] - back[j]).abs());
        }
    }

    for run in 0..100u64 {
        let mut r = ChaCha8Rng::seed_from_u64(1000 + run);
        let n = r.random_range(50..400);
        let d = r.random_range(1..6);
        let k = r.random_range(1..12);
        let data: Vec<f32> = (0..n * d).map(|_| r.random_range(-3.0f32..3.0)).collect();
        let model = kmeans_train(&data, d, k, 30, run, &exec).unwrap();
        let h = &model.inertia_history;
        ensure!(h.windows(2).all(|w| w[1] <= w[0]), "run {run}: inertia rose: {h:?}");
    }
    Ok("PQ exhaustive-minimum, SQ8 half-step bound and k-means monotonicity hold".into())
}

fn c8_vamana_quality() -> Outcome {
    let start = Instant::now();
    let exec = Executor::default();
    let s = generate_synthetic(&SyntheticSpec {
        n: 100_000,
        dim: 64,
        kind: ScalarKind::F32,
        n_clusters: 32,
        cluster_std: 0.5,
        n_queries: 1000,
        seed: 8,
        query_mode: QueryMode::InDistribution,
    })
    .unwrap();
    let (base, queries) = (s.base, s.queries);
    let gt = brute_force_knn(&base, &queries, 10, Metric::L2, &exec).unwrap();
    let params = Params::new()
        .with("R", 32)
        .with("L_build", 64)
        .with("alpha", 1.2)
        .with("seed", 8);
    let build = Instant::now();
    let index = build_index(Algorithm::Vamana, &base, Metric::L2, &params, &exec).unwrap();
    let build_s = build.elapsed().as_secs_f64();
    let res = index
        .search_knn(&queries, 10, &Params::new().with("L_search", 100), &exec)
        .unwrap();
    let recall = recall_at_k(&res, &gt, 10, TieTolerance::default()).unwrap().value;
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "recall@10 = {recall:.4} (bound {:.4}), build {build_s:.1}s, total {elapsed:.1}s",
        FROZEN_VAMANA_RECALL - 0.01
    );
    ensure!(recall >= FROZEN_VAMANA_RECALL - 0.01, "{detail}");
    ensure!(elapsed < 600.0, "{detail}");
    Ok(detail)
}

fn c9_cost_power() -> Outcome {
    ensure!(machines_required(100_000.0, 2000.0).unwrap() == 50, "2000 qps");
    ensure!(machines_required(100_000.0, 8_016_944.0).unwrap() == 1, "8M qps");
    ensure!(machines_required(100_000.0, 3.0).unwrap() == 33_334, "3 qps");
    let cost = capacity_cost(&CostModelInput::new(10_000.0, 500.0, 2000.0)).unwrap();
    ensure!(cost == 587_600.0, "cost {cost}");
    let cost = capacity_cost(&CostModelInput::new(25_000.0, 1000.0, 8_016_944.0)).unwrap();
    ensure!(cost == 25_000.0 + 3504.0, "single machine cost {cost}");

    let flat = integrate_power(&[
        PowerSample { seconds: 0.0, watts: 100.0 },
        PowerSample { seconds: 10.0, watts: 100.0 },
    ])
    .unwrap();
    let jpq = joules_per_query(flat, 20_000).unwrap();
    ensure!((jpq - 0.05).abs() <= 1e-9 * 0.05, "constant trace {jpq}");

    // Piecewise linear trace w(t) = a_i + b_i (t - t_i) on [t_i, t_{i+1}].
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..50 {
        let mut t = 0.0f64;
        let mut w = rng.random_range(50.0..300.0);
        let mut samples = vec![PowerSample { seconds: t, watts: w }];
        let mut analytic = 0.0;
        for _ in 0..rng.random_range(1..20) {
            let dt = rng.random_range(0.1..5.0);
            let slope = (rng.random_range(20.0..300.0) - w) / dt;
            let steps = rng.random_range(1..5);
            analytic += w * dt + 0.5 * slope * dt * dt;
            for s in 1..=steps {
                let h = dt * s as f64 / steps as f64;
                samples.push(PowerSample { seconds: t + h, watts: w + slope * h });
            }
            t += dt;
            w += slope * dt;
        }
        let got = integrate_power(&samples).unwrap();
        ensure!((got - analytic).abs() <= 1e-9 * analytic.abs(), "case {case}: {got} vs {analytic}");
    }
    ensure!(integrate_power(&[]).is_err(), "empty trace accepted");
    Ok("capacity cost and energy integrals match hand and analytic values".into())
}

fn c10_harness_timing() -> Outcome {
    let exec = Executor::sequential();
    let (base, _) = synthetic(100, 4, 1, 10);
    let (_, queries) = synthetic(100, 4, 10_000, 11);
    let gt = brute_force_knn(&base, &queries, 1, Metric::L2, &exec).unwrap();
    let index = build_index(Algorithm::Flat, &base, Metric::L2, &Params::new(), &exec).unwrap();
    let task = Task::Knn { gt: &gt, k: 1, tie: TieTolerance::Exact };
    let configs = [QueryConfig::new("default", Params::new())];
    let info = DatasetInfo::of(&base);

    let clock = ScriptedClock::from_pass_durations(&[2.0]);
    let opts = RunOptions { repeats: 1, clock: &clock, exec: &exec, build_seconds: 0.0 };
    let rec = run_experiment(index.as_ref(), &info, &queries, &task, &configs, &opts).unwrap();
    ensure!(rec[0].qps == 5000.0, "single pass qps {}", rec[0].qps);
    ensure!(rec[0].accuracy.value == 1.0, "accuracy {}", rec[0].accuracy.value);

    let clock = ScriptedClock::from_pass_durations(&[2.0, 1.0]);
    let opts = RunOptions { repeats: 2, clock: &clock, exec: &exec, build_seconds: 0.0 };
    let rec = run_experiment(index.as_ref(), &info, &queries, &task, &configs, &opts).unwrap();
    ensure!(rec[0].qps == 10_000.0, "best-of-two qps {}", rec[0].qps);
    ensure!(rec[0].wall_seconds == 1.0, "wall {}", rec[0].wall_seconds);
    Ok("qps 5000 for 10 000 queries in 2 s; best of (2 s, 1 s) gives 10 000".into())
}

fn c11_rest_loopback() -> Outcome {
    let exec = Executor::default();
    let (base, queries) = synthetic(1000, 16, 50, 12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("base.fbin");
    write_vectors(&base, &path).unwrap();
    let cases: [(Algorithm, Params, Params, bool); 4] = [
        (Algorithm::Flat, Params::new(), Params::new(), true),
        (Algorithm::Ivf, Params::new().with("nlist", 8), Params::new().with("nprobe", 3), true),
        (
            Algorithm::IvfPq,
            Params::new().with("nlist", 4).with("m", 4).with("nbits", 6).with("keep_raw", true),
            Params::new().with("nprobe", 2).with("rerank", 20),
            false,
        ),
        (Algorithm::Vamana, Params::new().with("R", 16).with("L_build", 32), Params::new().with("L_search", 40), true),
    ];
    let radius = {
        let gt = brute_force_knn(&base, &queries, 5, Metric::L2, &exec).unwrap();
        gt.distances(0)[4]
    };
    for (algo, build, search, range) in cases {
        let local = build_index(algo, &base, Metric::L2, &build, &exec).unwrap();
        let server = serve_algorithm(algorithm_builder(algo, Executor::default()), "127.0.0.1:0", Executor::default())
            .map_err(|e| e.to_string())?;
        let remote = RemoteIndex::connect(&server.url()).map_err(|e| e.to_string())?;
        remote.build(&path, Metric::L2, &build).map_err(|e| e.to_string())?;
        let a = local.search_knn(&queries, 10, &search, &exec).unwrap();
        let b = remote.search_knn(&queries, 10, &search, &exec).map_err(|e| e.to_string())?;
        ensure!(a == b, "{algo}: k-NN results differ over REST");
        if range {
            let a = local.search_range(&queries, radius, &search, &exec).unwrap();
            let b = remote.search_range(&queries, radius, &search, &exec).map_err(|e| e.to_string())?;
            ensure!(a == b, "{algo}: range results differ over REST");
        }
        server.shutdown();
    }
    Ok("flat, ivf, ivfpq and vamana are bit-identical over the REST protocol".into())
}

fn random_dataset(rng: &mut ChaCha8Rng, kind: ScalarKind) -> VectorDataset {
    let dim = rng.random_range(1..12);
    let n = rng.random_range(0..20);
    let len = n * dim;
    let data = match kind {
        ScalarKind::U8 => VectorData::U8((0..len).map(|_| rng.random()).collect()),
        ScalarKind::I8 => VectorData::I8((0..len).map(|_| rng.random()).collect()),
        ScalarKind::F32 => VectorData::F32(
            (0..len)
                .map(|_| loop {
                    let v = f32::from_bits(rng.random());
                    if v.is_finite() {
                        break v;
                    }
                })
                .collect(),
        ),
    };
    VectorDataset::new("fuzz", dim, data).unwrap()
}

fn bits(v: &[f32]) -> Vec<u32> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn c12_format_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dir = tempfile::tempdir().unwrap();
    for kind in [ScalarKind::U8, ScalarKind::I8, ScalarKind::F32] {
        let path = dir.path().join(format!("fuzz.{}", kind.extension()));
        for case in 0..1000 {
            let ds = random_dataset(&mut rng, kind);
            let bytes = encode_vectors(&ds).unwrap();
            write_vectors(&ds, &path).unwrap();
            ensure!(std::fs::read(&path).unwrap() == bytes, "{kind:?} case {case}: file bytes");
            let back = read_vectors(&path).unwrap();
            ensure!(encode_vectors(&back).unwrap() == bytes, "{kind:?} case {case}: re-encode");
            ensure!(decode_vectors(&bytes, kind, "fuzz").unwrap().data() == ds.data(), "{kind:?} case {case}: data");
        }
    }
    let knn_path = dir.path().join("fuzz.knn.gt");
    for case in 0..1000 {
        let nq = rng.random_range(0..10);
        let k = rng.random_range(1..8);
        let ids: Vec<u32> = (0..nq * k).map(|_| rng.random()).collect();
        let dists: Vec<f32> = (0..nq * k).map(|_| f32::from_bits(rng.random())).collect();
        let gt = KnnGroundTruth::new(k, ids.clone(), dists.clone()).unwrap();
        write_knn_gt(&gt, &knn_path).unwrap();
        let bytes = std::fs::read(&knn_path).unwrap();
        ensure!(bytes == encode_knn_gt(&gt).unwrap(), "knn case {case}: bytes");
        let back = read_knn_gt(&knn_path).unwrap();
        ensure!(back.all_ids() == ids.as_slice() && bits(back.all_distances()) == bits(&dists), "knn case {case}");
        ensure!(encode_knn_gt(&decode_knn_gt(&bytes).unwrap()).unwrap() == bytes, "knn case {case}: re-encode");
    }
    let range_path = dir.path().join("fuzz.range.gt");
    for case in 0..1000 {
        let nq = rng.random_range(0..10);
        let lists: Vec<Vec<(u32, f32)>> = (0..nq)
            .map(|_| {
                (0..rng.random_range(0..6))
                    .map(|_| (rng.random(), f32::from_bits(rng.random())))
                    .collect()
            })
            .collect();
        let gt = RangeGroundTruth::from_lists(lists.clone());
        write_range_gt(&gt, &range_path).unwrap();
        let bytes = std::fs::read(&range_path).unwrap();
        ensure!(bytes == encode_range_gt(&gt).unwrap(), "range case {case}: bytes");
        let back = read_range_gt(&range_path).unwrap();
        for (q, list) in lists.iter().enumerate() {
            let ids: Vec<u32> = list.iter().map(|p| p.0).collect();
            let ds: Vec<f32> = list.iter().map(|p| p.1).collect();
            ensure!(back.ids(q) == ids.as_slice() && bits(back.distances(q)) == bits(&ds), "range case {case}");
        }
        ensure!(encode_range_gt(&decode_range_gt(&bytes).unwrap()).unwrap() == bytes, "range case {case}: re-encode");
    }
    Ok("u8bin, i8bin, fbin, knn.gt and range.gt roundtrip bit-exactly over 1000 cases each".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("oracle equivalence", c1_oracle_equivalence),
        ("IVF exactness limit", c2_ivf_exactness_limit),
        ("leaderboard reproduction", c3_leaderboard),
        ("threshold semantics", c4_threshold_semantics),
        ("Pareto correctness", c5_pareto),
        ("metric correctness", c6_metrics),
        ("quantization properties", c7_quantization),
        ("graph index quality regression", c8_vamana_quality),
        ("cost and power arithmetic", c9_cost_power),
        ("harness timing", c10_harness_timing),
        ("REST loopback", c11_rest_loopback),
        ("format stability", c12_format_stability),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
