//! Acceptance suite. Every test prints exactly one `PASS` or `FAIL` line for
//! its criterion before asserting, so `cargo test --test acceptance --
//! --nocapture` doubles as the acceptance report.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;

use drauc::data::{load_csv, seeded_rng, Label, LabeledDataset};
use drauc::experiments::{relative_difference, run_benchmark, to_json, BenchmarkConfig, BenchmarkReport, CvScope};
use drauc::metrics::{auc_labeled, roc_curve, TiePolicy};
use drauc::models::reference::{inner_dual_lp, inner_primal_lp, solve_exact};
use drauc::models::{train, training_objective, worst_case_distribution, HyperParams, LinearModel, ModelKind};
use drauc::pairing::{build_atoms, distance_matrix, Atom, AtomSet, DistanceMatrix, DEFAULT_ATOM_CAP};
use drauc::solvers::{solve_lp, LpStatus, SubgradientConfig};

const DUALITY_TOL: f64 = 1e-6;
const DUALITY_BUDGET: Duration = Duration::from_secs(10);
const COLLAPSE_TOL: f64 = 1e-4;
const COLLAPSE_BUDGET: Duration = Duration::from_secs(60);
const ORACLE_TOL: f64 = 1e-3;
const ORACLE_BUDGET: Duration = Duration::from_secs(300);
const SINGLE_ATOM_TOL: f64 = 1e-3;
const MONOTONE_TOL: f64 = 1e-6;
const ROC_AREA_TOL: f64 = 1e-12;
const TABLE_TOL: f64 = 5e-4;
const BA_MIN_MEAN: f64 = 0.985;
const BA_BUDGET: Duration = Duration::from_secs(30 * 60);
const SH_MARGIN: f64 = 0.01;
/// Seed of the Statlog Heart directional check.
const SH_SEED: u64 = 42;

fn report(id: u32, name: &str, ok: bool, detail: String) {
    println!("{} criterion {id:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Two shifted, overlapping Gaussian-like classes.
fn random_dataset(seed: u64, n_pos: usize, n_neg: usize, dim: usize) -> LabeledDataset {
    let mut rng = seeded_rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (count, label, shift) in [(n_pos, Label::Positive, 0.7), (n_neg, Label::Negative, -0.7)] {
        for _ in 0..count {
            let row = (0..dim)
                .map(|_| {
                    let u: f64 = (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum();
                    shift + u
                })
                .collect();
            rows.push(row);
            labels.push(label);
        }
    }
    LabeledDataset::new(rows, labels).unwrap()
}

fn random_atoms(rng: &mut impl Rng, m: usize, dim: usize) -> AtomSet {
    let atoms = (0..m)
        .map(|k| Atom {
            x_plus: (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            x_minus: (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            i_index: k,
            j_index: 0,
        })
        .collect();
    AtomSet::from_atoms(atoms).unwrap()
}

fn trained(kind: ModelKind, ds: &LabeledDataset, hyper: HyperParams) -> LinearModel {
    train(kind, ds, &hyper, &SubgradientConfig::default()).unwrap()
}

fn objective(model: &LinearModel, ds: &LabeledDataset) -> f64 {
    training_objective(model, ds).unwrap()
}

#[test]
fn c01_strong_duality() {
    let start = Instant::now();
    let mut rng = seeded_rng(101);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let m = rng.gen_range(2..=5);
        let dim = rng.gen_range(1..=3);
        let atoms = random_atoms(&mut rng, m, dim);
        let dist = distance_matrix(&atoms);
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let eps = rng.gen_range(0.0..=2.0 * dist.max());
        let h = drauc::models::atom_hinges(&w, &atoms).unwrap();
        let primal = solve_lp(&inner_primal_lp(&h, &dist, eps)).unwrap();
        let dual = solve_lp(&inner_dual_lp(&h, &dist, eps)).unwrap();
        if primal.status != LpStatus::Optimal || dual.status != LpStatus::Optimal {
            failures += 1;
            continue;
        }
        let v = primal.objective_value;
        let gap = (v - dual.objective_value).abs() / (1.0 + v.abs());
        worst = worst.max(gap);
    }
    let elapsed = start.elapsed();
    let ok = failures == 0 && worst <= DUALITY_TOL && elapsed < DUALITY_BUDGET;
    report(
        1,
        "strong duality of the transport LP",
        ok,
        format!("100 instances, {failures} non-optimal, max scaled gap {worst:.2e} (tol {DUALITY_TOL:.0e}), {elapsed:.2?}"),
    );
}

#[test]
fn c02_zero_radius_collapse() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mut rng = seeded_rng(200 + seed);
        let n_pos = rng.gen_range(2..=10);
        let n_neg = rng.gen_range(2..=10);
        let ds = random_dataset(200 + seed, n_pos, n_neg, 2);
        let c = 1.0;
        let base = objective(&trained(ModelKind::DAuc, &ds, HyperParams::new(c, 0.0)), &ds);
        for kind in [ModelKind::DrAucF, ModelKind::DrAucV] {
            let v = objective(&trained(kind, &ds, HyperParams::new(c, 0.0)), &ds);
            worst = worst.max(rel_err(v, base));
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= COLLAPSE_TOL && elapsed < COLLAPSE_BUDGET;
    report(
        2,
        "eps = 0 collapse to D-AUC",
        ok,
        format!("20 datasets, max relative gap {worst:.2e} (tol {COLLAPSE_TOL:.0e}), {elapsed:.2?}"),
    );
}

#[test]
fn c03_oracle_equivalence() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in ModelKind::ALL {
        let hyper = if kind.is_robust() { HyperParams::new(1.0, 0.1) } else { HyperParams::new(1.0, 0.0) };
        let mut worst = 0.0f64;
        for seed in 0..10 {
            // 5 x 5 = 25 atoms
            let ds = random_dataset(300 + seed, 5, 5, 2);
            let exact = solve_exact(kind, &ds, &hyper).unwrap().value;
            let v = objective(&trained(kind, &ds, hyper), &ds);
            worst = worst.max(rel_err(v, exact));
        }
        ok &= worst <= ORACLE_TOL;
        lines.push(format!("{} {worst:.1e}", kind.cli_name()));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < ORACLE_BUDGET;
    report(
        3,
        "subgradient vs exact QP at M = 25",
        ok,
        format!("max relative gap [{}] (tol {ORACLE_TOL:.0e}), {elapsed:.2?}", lines.join(", ")),
    );
}

#[test]
fn c04_single_atom_optima() {
    let ds = LabeledDataset::new(vec![vec![1.0], vec![0.0]], vec![Label::Positive, Label::Negative]).unwrap();
    let d = trained(ModelKind::DAuc, &ds, HyperParams::new(1.0, 0.0));
    let v = trained(ModelKind::DrAucV, &ds, HyperParams::new(1.0, 0.1));
    let (dw, dv) = (d.weights[0], objective(&d, &ds));
    let (vw, vv) = (v.weights[0], objective(&v, &ds));
    let ok = (dw - 1.0).abs() <= SINGLE_ATOM_TOL
        && (dv - 0.5).abs() <= SINGLE_ATOM_TOL
        && (vw - 0.9).abs() <= SINGLE_ATOM_TOL
        && (vv - 0.595).abs() <= SINGLE_ATOM_TOL;
    report(
        4,
        "single-atom optima",
        ok,
        format!("d-auc w={dw:.5} obj={dv:.5}; dr-auc-v w={vw:.5} obj={vv:.5} (tol {SINGLE_ATOM_TOL:.0e})"),
    );
}

#[test]
fn c05_monotone_in_radius() {
    let grid = [0.0, 0.1, 0.5, 1.0, 5.0];
    let mut worst_drop = 0.0f64;
    for seed in 0..10 {
        let ds = random_dataset(500 + seed, 4, 4, 2);
        let atoms = build_atoms(&ds).unwrap();
        let dist = DistanceMatrix::build(&atoms, DEFAULT_ATOM_CAP).unwrap();
        let mut rng = seeded_rng(550 + seed);
        let w: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let values: Vec<f64> = grid
            .iter()
            .map(|&eps| worst_case_distribution(&w, &atoms, &dist, eps).unwrap().1)
            .collect();
        for pair in values.windows(2) {
            worst_drop = worst_drop.max(pair[0] - pair[1]);
        }
        for kind in [ModelKind::DrAucF, ModelKind::DrAucV] {
            let values: Vec<f64> = grid
                .iter()
                .map(|&eps| objective(&trained(kind, &ds, HyperParams::new(1.0, eps)), &ds))
                .collect();
            for pair in values.windows(2) {
                worst_drop = worst_drop.max(pair[0] - pair[1]);
            }
        }
    }
    report(
        5,
        "monotone in the radius",
        worst_drop <= MONOTONE_TOL,
        format!("10 seeds, largest decrease {worst_drop:.2e} (tol {MONOTONE_TOL:.0e})"),
    );
}

fn brute_auc(scores: &[f64], labels: &[Label], policy: TiePolicy) -> f64 {
    let tie = match policy {
        TiePolicy::CountAsSuccess => 1.0,
        TiePolicy::HalfCredit => 0.5,
    };
    let (mut total, mut pairs) = (0.0, 0u64);
    for (i, &a) in scores.iter().enumerate() {
        for (j, &b) in scores.iter().enumerate() {
            if labels[i] == Label::Positive && labels[j] == Label::Negative {
                pairs += 1;
                total += if a > b {
                    1.0
                } else if a == b {
                    tie
                } else {
                    0.0
                };
            }
        }
    }
    total / pairs as f64
}

#[test]
fn c06_auc_exactness() {
    let mut rng = seeded_rng(600);
    let mut mismatches = 0;
    let mut worst_area = 0.0f64;
    for _ in 0..200 {
        let n_pos = rng.gen_range(1..=30);
        let n_neg = rng.gen_range(1..=30);
        let levels = rng.gen_range(2..=8);
        // coarse levels inject ties
        let scores: Vec<f64> = (0..n_pos + n_neg)
            .map(|_| rng.gen_range(0..levels) as f64 / levels as f64)
            .collect();
        let labels: Vec<Label> = (0..n_pos + n_neg)
            .map(|i| if i < n_pos { Label::Positive } else { Label::Negative })
            .collect();
        for policy in [TiePolicy::CountAsSuccess, TiePolicy::HalfCredit] {
            if auc_labeled(&scores, &labels, policy).unwrap() != brute_auc(&scores, &labels, policy) {
                mismatches += 1;
            }
        }
        let area = roc_curve(&scores, &labels).unwrap().area();
        worst_area = worst_area.max((area - auc_labeled(&scores, &labels, TiePolicy::HalfCredit).unwrap()).abs());
    }
    report(
        6,
        "AUC exactness",
        mismatches == 0 && worst_area <= ROC_AREA_TOL,
        format!("200 instances, {mismatches} mismatches, max ROC area gap {worst_area:.1e} (tol {ROC_AREA_TOL:.0e})"),
    );
}

#[test]
fn c07_table_constants() {
    let sh = relative_difference(0.8333, 0.7816).unwrap();
    let pid = relative_difference(0.7353, 0.7065).unwrap();
    let ok = (sh - 0.2367).abs() <= TABLE_TOL && (pid - 0.0981).abs() <= TABLE_TOL;
    report(
        7,
        "published relative differences",
        ok,
        format!("SH vs SVM {:.4}%, PID vs D-AUC {:.4}% (tol {TABLE_TOL:.0e})", sh * 100.0, pid * 100.0),
    );
}

fn banknote_path() -> Option<PathBuf> {
    std::env::var_os("DR_AUC_BA_CSV")
        .map(PathBuf::from)
        .or_else(|| Some(data_dir().join("banknote.csv")))
        .filter(|p| p.is_file())
}

#[test]
fn c08_banknote_reproduction() {
    let Some(path) = banknote_path() else {
        report(
            8,
            "banknote mean AUC",
            false,
            "blocked: banknote CSV not found (set DR_AUC_BA_CSV or add data/banknote.csv)".into(),
        );
        return;
    };
    let ds = load_csv(&path, "class", "1").unwrap();
    let config = BenchmarkConfig {
        dataset_name: "BA".into(),
        ..BenchmarkConfig::default()
    };
    let start = Instant::now();
    let report_ = run_benchmark(&ds, &config, rayon::current_num_threads()).unwrap();
    let elapsed = start.elapsed();
    let means: Vec<String> = report_
        .reports
        .iter()
        .map(|r| format!("{} {:.4}", r.model_kind.cli_name(), r.mean))
        .collect();
    let ok = report_.reports.iter().all(|r| r.mean >= BA_MIN_MEAN) && elapsed < BA_BUDGET;
    report(
        8,
        "banknote mean AUC",
        ok,
        format!("[{}] (min {BA_MIN_MEAN}), {elapsed:.2?}", means.join(", ")),
    );
}

fn statlog_heart() -> LabeledDataset {
    load_csv(&data_dir().join("statlog_heart.csv"), "class", "2").unwrap()
}

#[test]
fn c09_statlog_heart_worst_case() {
    let ds = statlog_heart();
    let run = |cv_scope| {
        let config = BenchmarkConfig {
            dataset_name: "SH".into(),
            base_seed: SH_SEED,
            cv_scope,
            ..BenchmarkConfig::default()
        };
        let r = run_benchmark(&ds, &config, rayon::current_num_threads()).unwrap();
        let worst = |k| r.report(k).unwrap().worst_k_mean;
        [ModelKind::DAuc, ModelKind::DrAucF, ModelKind::DrAucV, ModelKind::Svm].map(worst)
    };
    let [bench, f, v, svm] = run(CvScope::Full);
    let ok = f >= bench - SH_MARGIN && v >= bench - SH_MARGIN;
    // Tuning at the training size is reported for comparison only.
    let [tb, tf, tv, _] = run(CvScope::TrainSize);
    report(
        9,
        "Statlog Heart worst-10 mean",
        ok,
        format!(
            "seed {SH_SEED}, full-data CV: d-auc {bench:.4}, dr-auc-f {f:.4}, dr-auc-v {v:.4}, svm {svm:.4} \
             (margin {SH_MARGIN}); train-size CV: d-auc {tb:.4}, dr-auc-f {tf:.4}, dr-auc-v {tv:.4}"
        ),
    );
}

#[test]
fn c10_determinism() {
    let ds = statlog_heart();
    let config = BenchmarkConfig {
        dataset_name: "SH".into(),
        runs: 6,
        base_seed: 7,
        ..BenchmarkConfig::default()
    };
    let json = |jobs| -> String {
        let r: BenchmarkReport = run_benchmark(&ds, &config, jobs).unwrap();
        to_json(&r).unwrap()
    };
    let serial = json(1);
    let again = json(1);
    let parallel = json(4);
    let ok = serial == again && serial == parallel;
    report(
        10,
        "byte-identical reports",
        ok,
        format!("{} bytes, rerun equal {}, jobs 4 equal {}", serial.len(), serial == again, serial == parallel),
    );
}
