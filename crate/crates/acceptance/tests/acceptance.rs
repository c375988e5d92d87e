//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so every criterion reports
//! even when an earlier one fails; the process exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use common::{
    bfs_components, contact_time_oracle_step, count_linear_extensions_brute, random_vector, resimulate_merges,
};
use dynclust::cluster_tree::{build_cluster_tree, NodeRef};
use dynclust::clustering::{build_interaction_graph, build_interaction_graph_all_pairs, connected_components};
use dynclust::combinatorics::{
    binomial, enumerate_shapes, factorial, lemma_bound_scan, linear_extensions, normalized_ratio, pair_factor,
    q_recurrence_bound, q_value, TreeShape,
};
use dynclust::dynamics::{free_flight, sample_velocity, DynamicsKind, ParticleState, SimConfig, Trajectory};
use dynclust::estimator::{estimate_pk, fit_geometric_ratio, EstimatorConfig, GeometricFit, PkTable, Z95};
use dynclust::geometry::{
    ball_volume, capture_volume_bound, first_contact_time, min_distance_on_interval, MotionSegment,
};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Contact times agree with a stepping oracle (step 1e-6, then bisection)
/// within 1e-9 over 10^4 random pairs; under 30 s.
fn criterion_1() -> Verdict {
    const TOL: f64 = 1e-9;
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut hits, mut misses, mut bad, mut worst) = (0, 0, Vec::new(), 0.0f64);
    for n in 0..10_000 {
        let d = rng.random_range(1..=3);
        let t0 = rng.random_range(0.0..1.0);
        let a = MotionSegment::new(
            t0,
            t0 + rng.random_range(0.5..3.0),
            random_vector(&mut rng, d, 2.5),
            random_vector(&mut rng, d, 2.0),
        )
        .unwrap();
        let b = MotionSegment::new(
            0.0,
            rng.random_range(t0 + 0.1..5.0),
            random_vector(&mut rng, d, 2.5),
            random_vector(&mut rng, d, 2.0),
        )
        .unwrap();
        let thr = rng.random_range(0.2..2.0);
        let got = first_contact_time(&a, &b, thr).unwrap();
        let want = contact_time_oracle_step(&a, &b, thr, 1e-6);
        match (got, want) {
            (Some(x), Some(y)) => {
                hits += 1;
                worst = worst.max((x - y).abs());
                if (x - y).abs() > TOL {
                    bad.push(n);
                }
            }
            (None, None) => misses += 1,
            _ => {
                // a disagreement is only excusable at exact tangency
                let (_, dmin) = min_distance_on_interval(&a, &b).unwrap();
                if (dmin - thr).abs() > 1e-12 * thr {
                    bad.push(n);
                }
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        bad.is_empty() && secs < 30.0,
        format!("{hits} contacts, {misses} misses, max |dt| = {worst:.2e}, {} disagreements, {secs:.1} s", bad.len()),
    )
}

fn ghost_states(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<ParticleState> {
    (0..n)
        .map(|id| ParticleState { id, x: random_vector(rng, 2, half), v: sample_velocity(2, 1.0, rng), a: 1 })
        .collect()
}

/// Components equal a BFS oracle and the grid graph equals the all-pairs
/// graph on 10^3 random 12-particle ghost configurations.
fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let (mut comp_bad, mut graph_bad, mut nontrivial) = (0, 0, 0);
    for _ in 0..1000 {
        let trajs = free_flight(&ghost_states(&mut rng, 12, 3.0), 1.0);
        let grid = build_interaction_graph(&trajs, 0.5, 1.0);
        let all = build_interaction_graph_all_pairs(&trajs, 0.5, 1.0);
        if grid != all {
            graph_bad += 1;
        }
        let pairs: Vec<(usize, usize)> = all.edges.iter().map(|e| (e.i, e.j)).collect();
        let clusters = connected_components(&grid).clusters();
        if clusters != bfs_components(&all.vertices, &pairs) {
            comp_bad += 1;
        }
        if clusters.iter().any(|c| c.len() > 2) {
            nontrivial += 1;
        }
    }
    verdict(
        comp_bad == 0 && graph_bad == 0,
        format!(
            "component mismatches {comp_bad}, graph mismatches {graph_bad}, {nontrivial} configs with a cluster of 3+"
        ),
    )
}

/// Merge sequences equal the re-simulation oracle on 200 random clusters of
/// size at most 6; the maximal-subcluster count after step k is N - k.
fn criterion_3() -> Verdict {
    const R: f64 = 0.5;
    const TAU: f64 = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut clusters: Vec<Vec<Trajectory>> = Vec::new();
    while clusters.len() < 200 {
        let n = 2 + clusters.len() % 5;
        let half = 0.6 + 0.35 * n as f64;
        let mut states: Vec<ParticleState> = Vec::new();
        while states.len() < n {
            let x = random_vector(&mut rng, 2, half);
            if states.iter().all(|s| s.x.distance(&x) > 2.0 * R) {
                states.push(ParticleState { id: states.len(), x, v: sample_velocity(2, 1.0, &mut rng), a: 1 });
            }
        }
        let trajs = free_flight(&states, TAU);
        if connected_components(&build_interaction_graph(&trajs, R, TAU)).clusters().len() == 1 {
            clusters.push(trajs);
        }
    }
    let (mut seq_bad, mut count_bad) = (0, 0);
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for cluster in &clusters {
        *sizes.entry(cluster.len()).or_default() += 1;
        let tree = build_cluster_tree(cluster, R, TAU).unwrap();
        let oracle = resimulate_merges(cluster, R, TAU).unwrap();
        let same = tree.merges.len() == oracle.len()
            && tree.merges.iter().zip(&oracle).all(|(m, (t, l, r))| {
                let mut got = [tree.members(m.left), tree.members(m.right)];
                let mut want = [l.clone(), r.clone()];
                got.sort();
                want.sort();
                (m.t - t).abs() < 1e-9 && got == want
            });
        if !same {
            seq_bad += 1;
        }
        let n = cluster.len();
        let mut maximal: std::collections::BTreeSet<NodeRef> = (0..n).map(NodeRef::Leaf).collect();
        for (k, m) in tree.merges.iter().enumerate() {
            let ok = maximal.remove(&m.left) && maximal.remove(&m.right);
            maximal.insert(NodeRef::Internal(k));
            if !ok || maximal.len() != n - (k + 1) {
                count_bad += 1;
            }
        }
    }
    verdict(
        seq_bad == 0 && count_bad == 0,
        format!("sizes {sizes:?}, sequence mismatches {seq_bad}, count violations {count_bad}"),
    )
}

/// Exhaustive linear extensions for N <= 7, shape counts, split recurrences
/// for N <= 12, left comb values; under 60 s.
fn criterion_4() -> Verdict {
    let clock = Instant::now();
    let counts: Vec<usize> = (1..=7).map(|n| enumerate_shapes(n).unwrap().len()).collect();
    let counts_ok = counts == [1, 1, 1, 2, 3, 6, 11];
    let mut ext_bad = 0;
    for n in 1..=7 {
        for s in enumerate_shapes(n).unwrap() {
            if linear_extensions(&s) != BigUint::from(count_linear_extensions_brute(&s)) {
                ext_bad += 1;
            }
        }
    }
    let (mut rec_bad, mut checked) = (0, 0);
    for n in 2..=12 {
        for s in enumerate_shapes(n).unwrap() {
            let (a, b) = s.children().unwrap();
            let k = a.leaves();
            checked += 1;
            if linear_extensions(&s) != linear_extensions(a) * linear_extensions(b) * binomial(n - 2, k - 1)
                || pair_factor(&s) != pair_factor(a) * pair_factor(b) * BigUint::from(k * (n - k))
            {
                rec_bad += 1;
            }
        }
    }
    let comb_ok = (2..=12).all(|n| {
        let c = TreeShape::left_comb(n);
        linear_extensions(&c) == BigUint::one() && pair_factor(&c) == factorial(n - 1)
    });
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        counts_ok && ext_bad == 0 && rec_bad == 0 && comb_ok && secs < 60.0,
        format!(
            "shape counts {counts:?}, extension mismatches {ext_bad}, recurrence failures {rec_bad}/{checked}, left comb ok {comb_ok}, {secs:.1} s"
        ),
    )
}

/// Constant for the scan check; the bound's constant is not given
/// numerically, so a fixed value is pinned here.
const SCAN_CONSTANT: f64 = 2.0;

/// r(k, n-k) <= 1 for n <= 200; Q <= recurrence bound for N <= 12;
/// (Q/N!)^(1/N) below one constant for N <= 12.
fn criterion_5() -> Verdict {
    let mut ratio_bad = 0;
    for n in 2..=200 {
        for k in 1..=n / 2 {
            if normalized_ratio(k, n).unwrap() > BigRational::one() {
                ratio_bad += 1;
            }
        }
    }
    let (mut bound_bad, mut shapes, mut first_bad) = (0, 0, None);
    for n in 2..=12 {
        for s in enumerate_shapes(n).unwrap() {
            shapes += 1;
            if q_value(&s) > q_recurrence_bound(&s).unwrap() {
                bound_bad += 1;
                first_bad.get_or_insert_with(|| {
                    format!("{s}: Q = {}, bound = {}", q_value(&s), q_recurrence_bound(&s).unwrap())
                });
            }
        }
    }
    let scan = lemma_bound_scan(12).unwrap();
    let max_root = scan.rows.iter().map(|r| r.max_root).fold(0.0, f64::max);
    let scan_ok = max_root < SCAN_CONSTANT;
    verdict(
        ratio_bad == 0 && bound_bad == 0 && scan_ok,
        format!(
            "r <= 1 violations {ratio_bad}; Q above recurrence bound for {bound_bad}/{shapes} shapes{}; max (Q/N!)^(1/N) = {max_root:.4} vs C = {SCAN_CONSTANT}",
            first_bad.map(|s| format!(" (first: {s})")).unwrap_or_default()
        ),
    )
}

fn ghost_config(alpha: f64, tau: f64, box_side: f64, seed: u64) -> SimConfig {
    SimConfig { d: 2, box_side, tau, r: 0.5, v0: 1.0, alpha, dynamics: DynamicsKind::Ghost, rate: 1.0, types: 1, seed }
}

/// P_1 at tau = 1e-6 equals the void probability within 3 standard errors
/// at 10^4 replicas; under 2 minutes.
fn criterion_6() -> Verdict {
    let clock = Instant::now();
    let tau = 1e-6;
    // rho = 0.4 with rho = alpha / (tau v0 r)
    let sim = ghost_config(0.4 * tau * 0.5, tau, 12.0, 1006);
    let table = estimate_pk(&EstimatorConfig::new(sim.clone(), 10_000), None).unwrap();
    let want = (-sim.density() * ball_volume(2, 2.0 * sim.r)).exp();
    let (got, se) = (table.p_hat(1), table.std_error(1));
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        (got - want).abs() < 3.0 * se && secs < 120.0,
        format!("P1 = {got:.4} +- {se:.4}, exp(-rho vol) = {want:.4}, {secs:.1} s"),
    )
}

struct Run {
    alpha: f64,
    table: PkTable,
    fit: Option<GeometricFit>,
}

fn theorem_run(alpha: f64, tau: f64) -> Run {
    let sim = ghost_config(alpha, tau, 40.0, 1007);
    let table = estimate_pk(&EstimatorConfig::new(sim, 20_000), None).unwrap();
    let fit = fit_geometric_ratio(&table).ok();
    Run { alpha, table, fit }
}

/// Qualitative checks at alpha in {0.05, 0.1, 0.2}; under 15 minutes.
fn criterion_7() -> Verdict {
    let clock = Instant::now();
    let alphas = [0.05, 0.1, 0.2];
    let runs: Vec<Run> = alphas.iter().map(|&a| theorem_run(a, 1.0)).collect();
    let doubled: Vec<Run> = alphas.iter().map(|&a| theorem_run(a, 2.0)).collect();

    // (a) no significant increase from k to k + 1
    let mut a_bad = Vec::new();
    for run in &runs {
        for k in 1..run.table.max_k() {
            if run.table.interval(k + 1).0 > run.table.interval(k).1 {
                a_bad.push((run.alpha, k));
            }
        }
    }
    // (b) monotone fitted ratio, 0.05 and 0.2 intervals disjoint
    let fits: Vec<Option<GeometricFit>> = runs.iter().map(|r| r.fit).collect();
    let b_ok = match (fits[0], fits[1], fits[2]) {
        (Some(f0), Some(f1), Some(f2)) => f0.ratio < f1.ratio && f1.ratio < f2.ratio && f0.ci_hi < f2.ci_lo,
        _ => false,
    };
    // (c) ratio / alpha below the branching bound e * rho * (capture volume) / alpha
    let bound = capture_volume_bound(2, 0.5, 1.0, 1.0).unwrap();
    let c_const = std::f64::consts::E * bound.total() / (1.0 * 1.0 * 0.5);
    let per_alpha: Vec<f64> = runs.iter().filter_map(|r| r.fit.map(|f| f.ratio / r.alpha)).collect();
    let c_ok = per_alpha.len() == runs.len() && per_alpha.iter().all(|&x| x <= c_const);
    // (d) (tau, rho) -> (2 tau, rho / 2) leaves P_1..P_3 unchanged
    let mut d_bad = Vec::new();
    for (x, y) in runs.iter().zip(&doubled) {
        for k in 1..=3 {
            let diff = x.table.p_hat(k) - y.table.p_hat(k);
            let width = Z95 * (x.table.std_error(k).powi(2) + y.table.std_error(k).powi(2)).sqrt();
            if diff.abs() > width {
                d_bad.push(format!("a={} k={k}: {:.4} vs {:.4}", x.alpha, x.table.p_hat(k), y.table.p_hat(k)));
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let ratios: Vec<String> = fits
        .iter()
        .map(|f| f.map_or("none".into(), |f| format!("{:.3} [{:.3}, {:.3}]", f.ratio, f.ci_lo, f.ci_hi)))
        .collect();
    let part = |ok: bool| if ok { "pass" } else { "FAIL" };
    verdict(
        a_bad.is_empty() && b_ok && c_ok && d_bad.is_empty() && secs < 900.0,
        format!(
            "(a) {} {a_bad:?}; (b) {} ratios {ratios:?}; (c) {} ratio/alpha {per_alpha:.2?} vs C = {c_const:.1}; (d) {} {d_bad:?}; {secs:.0} s",
            part(a_bad.is_empty()),
            part(b_ok),
            part(c_ok),
            part(d_bad.is_empty()),
        ),
    )
}

fn run_cli(args: &[&str]) -> i32 {
    dynclust::cli::run_from(std::iter::once("dynclust").chain(args.iter().copied()))
}

/// Data files of one output directory. Timestamps and the run time are
/// dropped: only the manifest's digests of the other files and summary.json
/// without `runtime_seconds` are compared.
fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let bytes = fs::read(&path).unwrap();
        let bytes = match name.as_str() {
            "manifest.json" => {
                let v: Value = serde_json::from_slice(&bytes).unwrap();
                let outputs: Vec<&Value> =
                    v["outputs"].as_array().unwrap().iter().filter(|o| o["file"] != "summary.json").collect();
                serde_json::to_vec(&outputs).unwrap()
            }
            "summary.json" => {
                let mut v: Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("runtime_seconds");
                serde_json::to_vec(&v).unwrap()
            }
            _ => bytes,
        };
        out.insert(name, bytes);
    }
    out
}

/// Every command run twice with the same config and seed gives identical
/// data files.
fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let sim = root.join("sim.toml");
    fs::write(&sim, "d = 2\nL = 14.0\ntau = 1.0\nr = 0.5\nv0 = 1.0\nalpha = 0.3\ndynamics = \"jump\"\nrate = 2.0\ntypes = 2\nseed = 8\n").unwrap();
    let est = root.join("est.toml");
    fs::write(&est, "d = 2\nL = 20.0\ntau = 1.0\nr = 0.5\nv0 = 1.0\nalpha = 0.15\ndynamics = \"jump\"\nreplicas = 300\nseed = 8\nalpha_grid = [0.05, 0.1]\n").unwrap();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let mut failures = Vec::new();
    let mut files = 0;
    for round in ["a", "b"] {
        let out = |cmd: &str| s(&root.join(round).join(cmd));
        let traj = s(&root.join("a").join("simulate").join("trajectories.jsonl"));
        let codes = [
            run_cli(&["simulate", "--config", &s(&sim), "--out", &out("simulate")]),
            run_cli(&["clusters", "--config", &s(&sim), "--input", &traj, "--out", &out("clusters")]),
            run_cli(&["tree", "--config", &s(&sim), "--input", &traj, "--out", &out("tree")]),
            run_cli(&[
                "estimate-pk",
                "--config",
                &s(&est),
                "--out",
                &out("estimate-pk"),
                "--workers",
                if round == "a" { "1" } else { "3" },
            ]),
            run_cli(&["combinatorics", "--out", &out("combinatorics"), "--nmax", "7"]),
        ];
        if codes.iter().any(|&c| c != 0) {
            failures.push(format!("round {round} exit codes {codes:?}"));
        }
    }
    for cmd in ["simulate", "clusters", "tree", "estimate-pk", "combinatorics"] {
        let a = data_files(&root.join("a").join(cmd));
        let b = data_files(&root.join("b").join(cmd));
        files += a.len();
        if a.is_empty() || a != b {
            failures.push(format!("{cmd} differs"));
        }
    }
    verdict(failures.is_empty(), format!("{files} files per round compared; {failures:?}"))
}

fn main() {
    let criteria: [(u32, fn() -> Verdict); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = Vec::new();
    for (n, check) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let v = check();
        println!("criterion {n}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
