use proptest::prelude::*;

use drauc::data::{apply_standardizer, fit_standardizer, k_fold_split, stratified_split, Label, LabeledDataset, Scaler};
use drauc::experiments::{mean, run_benchmark, sample_std, worst_k_mean, BenchmarkConfig, GridSpec};
use drauc::metrics::{auc_labeled, auc_wmw, hinge_pair_loss, roc_curve, TiePolicy};
use drauc::models::reference::{inner_dual_lp, inner_primal_lp};
use drauc::models::{
    atom_hinges, d_auc_objective, dr_auc_f_objective, dr_auc_v_objective, worst_case_distribution, HyperParams,
    LinearModel, ModelDocument, ModelKind, TrainingMeta,
};
use drauc::pairing::{atom_distance, build_atoms, distance_matrix, Atom, AtomSet};
use drauc::solvers::{minimize_subgradient, solve_lp, LpStatus, StopReason, SubgradientConfig};

fn dataset(max_per_class: usize, dim: usize) -> impl Strategy<Value = LabeledDataset> {
    (1..=max_per_class, 1..=max_per_class).prop_flat_map(move |(p, n)| {
        prop::collection::vec(prop::collection::vec(-5.0..5.0f64, dim), p + n).prop_map(move |rows| {
            let labels = (0..p + n)
                .map(|i| if i < p { Label::Positive } else { Label::Negative })
                .collect();
            LabeledDataset::new(rows, labels).unwrap()
        })
    })
}

fn weights(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, dim)
}

/// Scores on a coarse grid so that ties are common.
fn tied_scores() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    let s = prop::collection::vec((0..6i32).prop_map(|v| v as f64 * 0.5), 1..25);
    (s.clone(), s)
}

fn labeled(pos: &[f64], neg: &[f64]) -> (Vec<f64>, Vec<Label>) {
    let scores = pos.iter().chain(neg).copied().collect();
    let labels = (0..pos.len() + neg.len())
        .map(|i| if i < pos.len() { Label::Positive } else { Label::Negative })
        .collect();
    (scores, labels)
}

fn brute(pos: &[f64], neg: &[f64], tie: f64) -> f64 {
    let mut total = 0.0;
    for a in pos {
        for b in neg {
            total += if a > b { 1.0 } else if a == b { tie } else { 0.0 };
        }
    }
    total / (pos.len() * neg.len()) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k_fold_partitions_and_stratifies(ds in dataset(15, 1), k in 2usize..6, seed in any::<u64>()) {
        let (p, n) = ds.class_counts();
        prop_assume!(p >= k && n >= k);
        let folds = k_fold_split(&ds, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.validation.clone()).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        let frac = ds.class_counts().0 as f64 / ds.len() as f64;
        for fold in &folds {
            prop_assert_eq!(fold.train.len() + fold.validation.len(), ds.len());
            prop_assert!(fold.train.iter().all(|i| !fold.validation.contains(i)));
            if fold.validation.is_empty() {
                continue;
            }
            let pos = fold.validation.iter().filter(|&&i| ds.label(i) == Label::Positive).count();
            let size = fold.validation.len() as f64;
            prop_assert!((pos as f64 / size - frac).abs() <= 1.0 / size + 1e-12);
        }
    }

    #[test]
    fn stratified_split_is_a_partition(ds in dataset(20, 1), seed in any::<u64>(), frac in 0.1..0.9f64) {
        let size = ((ds.len() as f64 * frac) as usize).max(2);
        prop_assume!(size <= ds.len() && ds.class_counts().0 > 0 && ds.class_counts().1 > 0);
        let split = stratified_split(&ds, size, seed).unwrap();
        prop_assert_eq!(split.train.len(), size);
        let mut all: Vec<usize> = split.train.iter().chain(&split.rest).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        let pos = split.train.iter().filter(|&&i| ds.label(i) == Label::Positive).count();
        prop_assert!(pos >= 1 && pos < size);
        prop_assert_eq!(stratified_split(&ds, size, seed).unwrap(), split);
    }

    #[test]
    fn standardized_columns_are_centered(ds in dataset(12, 3)) {
        let scaler: Scaler = fit_standardizer(&ds);
        let z = apply_standardizer(&scaler, &ds).unwrap();
        for k in 0..ds.dim() {
            let col: Vec<f64> = ds.rows().map(|r| r[k]).collect();
            let zc: Vec<f64> = z.rows().map(|r| r[k]).collect();
            let m = zc.iter().sum::<f64>() / zc.len() as f64;
            prop_assert!(m.abs() <= 1e-10);
            let constant = col.iter().all(|v| *v == col[0]);
            if !constant {
                let var = zc.iter().map(|v| (v - m).powi(2)).sum::<f64>() / zc.len() as f64;
                prop_assert!((var.sqrt() - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn distances_form_a_metric(ds in dataset(4, 2)) {
        prop_assume!(ds.class_counts().0 > 0 && ds.class_counts().1 > 0);
        let atoms = build_atoms(&ds).unwrap();
        let dm = distance_matrix(&atoms);
        let m = dm.m();
        for i in 0..m {
            prop_assert_eq!(dm.get(i, i), 0.0);
            for j in 0..m {
                prop_assert_eq!(dm.get(i, j), dm.get(j, i));
                for k in 0..m {
                    prop_assert!(dm.get(i, k) <= dm.get(i, j) + dm.get(j, k) + 1e-9);
                }
            }
        }
        // atoms sharing their positive point differ only on the negative side
        let (_, n_neg) = atoms.class_counts();
        for a in atoms.atoms().iter().take(n_neg) {
            for b in atoms.atoms().iter().take(n_neg) {
                let l1: f64 = a.x_minus.iter().zip(&b.x_minus).map(|(x, y)| (x - y).abs()).sum();
                prop_assert_eq!(atom_distance(a, b).unwrap(), l1);
            }
        }
    }

    #[test]
    fn fast_auc_matches_enumeration((pos, neg) in tied_scores()) {
        prop_assert_eq!(auc_wmw(&pos, &neg, TiePolicy::CountAsSuccess).unwrap(), brute(&pos, &neg, 1.0));
        prop_assert_eq!(auc_wmw(&pos, &neg, TiePolicy::HalfCredit).unwrap(), brute(&pos, &neg, 0.5));
        let (s, y) = labeled(&pos, &neg);
        prop_assert_eq!(auc_labeled(&s, &y, TiePolicy::HalfCredit).unwrap(), brute(&pos, &neg, 0.5));
    }

    #[test]
    fn auc_ignores_monotone_transforms((pos, neg) in tied_scores(), c in 0.01..100.0f64, shift in -10.0..10.0f64) {
        for policy in [TiePolicy::CountAsSuccess, TiePolicy::HalfCredit] {
            let base = auc_wmw(&pos, &neg, policy).unwrap();
            let scale = |v: &[f64]| v.iter().map(|x| c * x + shift).collect::<Vec<_>>();
            let cube = |v: &[f64]| v.iter().map(|x| x.powi(3)).collect::<Vec<_>>();
            prop_assert_eq!(auc_wmw(&scale(&pos), &scale(&neg), policy).unwrap(), base);
            prop_assert_eq!(auc_wmw(&cube(&pos), &cube(&neg), policy).unwrap(), base);
        }
    }

    #[test]
    fn half_credit_complement((pos, neg) in tied_scores()) {
        let a = auc_wmw(&pos, &neg, TiePolicy::HalfCredit).unwrap();
        let b = auc_wmw(&neg, &pos, TiePolicy::HalfCredit).unwrap();
        prop_assert!((a + b - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn roc_area_is_half_credit_auc((pos, neg) in tied_scores()) {
        let (s, y) = labeled(&pos, &neg);
        let roc = roc_curve(&s, &y).unwrap();
        prop_assert!((roc.area() - auc_wmw(&pos, &neg, TiePolicy::HalfCredit).unwrap()).abs() <= 1e-12);
        prop_assert_eq!((roc.points[0].fpr, roc.points[0].tpr), (0.0, 0.0));
        let last = roc.points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn pair_hinge_is_convex(w1 in weights(3), w2 in weights(3), p in weights(3), n in weights(3), theta in 0.0..=1.0f64) {
        let atom = Atom { x_plus: p, x_minus: n, i_index: 0, j_index: 0 };
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
        let lhs = hinge_pair_loss(&mix, &atom).unwrap();
        let rhs = theta * hinge_pair_loss(&w1, &atom).unwrap() + (1.0 - theta) * hinge_pair_loss(&w2, &atom).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn transport_lp_weak_duality_and_feasibility(ds in dataset(3, 2), w in weights(2), eps in 0.0..6.0f64) {
        prop_assume!(ds.class_counts().0 > 0 && ds.class_counts().1 > 0);
        let atoms = build_atoms(&ds).unwrap();
        let dist = distance_matrix(&atoms);
        let h = atom_hinges(&w, &atoms).unwrap();
        let primal = solve_lp(&inner_primal_lp(&h, &dist, eps)).unwrap();
        let dual = solve_lp(&inner_dual_lp(&h, &dist, eps)).unwrap();
        prop_assert_eq!(primal.status, LpStatus::Optimal);
        prop_assert_eq!(dual.status, LpStatus::Optimal);
        prop_assert!(primal.objective_value <= dual.objective_value + 1e-8);

        let (plan, value) = worst_case_distribution(&w, &atoms, &dist, eps).unwrap();
        let m = atoms.m();
        for i in 0..m {
            let row: f64 = (0..m).map(|j| plan.get(i, j)).sum();
            prop_assert!((row - 1.0 / m as f64).abs() <= 1e-8);
        }
        prop_assert!(plan.k.iter().all(|&v| v >= 0.0));
        prop_assert!((plan.p.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
        prop_assert!(plan.cost(&dist) <= eps + 1e-8);
        let expected: f64 = plan.p.iter().zip(&h).map(|(p, h)| p * h).sum();
        prop_assert!((expected - value).abs() <= 1e-8 * (1.0 + value.abs()));
    }

    #[test]
    fn robust_values_dominate_empirical_risk(ds in dataset(3, 2), w in weights(2), eps in 0.0..3.0f64, lambda in 0.0..4.0f64) {
        prop_assume!(ds.class_counts().0 > 0 && ds.class_counts().1 > 0);
        let atoms = build_atoms(&ds).unwrap();
        let dist = distance_matrix(&atoms);
        let risk = drauc::metrics::empirical_pair_risk(&w, &atoms).unwrap();
        let (_, worst) = worst_case_distribution(&w, &atoms, &dist, eps).unwrap();
        let hyper = HyperParams::new(1.0, eps);
        let (_, cert) = dr_auc_f_objective(&w, lambda, &atoms, &dist, &hyper).unwrap();
        prop_assert!(risk <= worst + 1e-9);
        prop_assert!(worst <= cert.value(eps) + 1e-9);
        let reg: f64 = w.iter().map(|v| v * v).sum::<f64>() / 2.0;
        let v = dr_auc_v_objective(&w, &atoms, &hyper).unwrap();
        prop_assert!(v - reg >= risk - 1e-12);
    }

    #[test]
    fn pairwise_objectives_ignore_a_common_shift(ds in dataset(3, 2), w in weights(2), shift in weights(2), lambda in 0.0..3.0f64) {
        prop_assume!(ds.class_counts().0 > 0 && ds.class_counts().1 > 0);
        // moving every point by `shift` adds the same constant w . shift to every score
        let moved = LabeledDataset::new(
            ds.rows().map(|r| r.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect(),
            ds.labels().to_vec(),
        )
        .unwrap();
        let (a, b) = (build_atoms(&ds).unwrap(), build_atoms(&moved).unwrap());
        let (da, db) = (distance_matrix(&a), distance_matrix(&b));
        let hyper = HyperParams::new(0.8, 0.3);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs());
        prop_assert!(close(d_auc_objective(&w, &a, 0.8).unwrap(), d_auc_objective(&w, &b, 0.8).unwrap()));
        prop_assert!(close(dr_auc_v_objective(&w, &a, &hyper).unwrap(), dr_auc_v_objective(&w, &b, &hyper).unwrap()));
        prop_assert!(close(
            dr_auc_f_objective(&w, lambda, &a, &da, &hyper).unwrap().0,
            dr_auc_f_objective(&w, lambda, &b, &db, &hyper).unwrap().0
        ));
        for (x, y) in a.atoms().iter().zip(b.atoms()) {
            prop_assert!(close(hinge_pair_loss(&w, x).unwrap(), hinge_pair_loss(&w, y).unwrap()));
        }
    }

    #[test]
    fn worst_k_mean_is_monotone(aucs in prop::collection::vec(0.0..1.0f64, 1..40)) {
        let mut prev = f64::INFINITY;
        for k in (1..=aucs.len()).rev() {
            let v = worst_k_mean(&aucs, k).unwrap();
            prop_assert!(v <= prev + 1e-12);
            prop_assert!(v <= mean(&aucs) + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn best_values_never_increase(a in weights(3), c in 0.1..5.0f64) {
        let cfg = SubgradientConfig { max_iterations: 300, ..SubgradientConfig::default() };
        let res = minimize_subgradient(
            |x, g| {
                let mut v = 0.0;
                for k in 0..x.len() {
                    let d = x[k] - a[k];
                    v += c * d.abs() + 0.5 * x[k] * x[k];
                    g[k] = c * d.signum() + x[k];
                }
                v
            },
            &[0.0; 3],
            None,
            &cfg,
        )
        .unwrap();
        prop_assert!(res.best_history.windows(2).all(|p| p[1] <= p[0]));
        prop_assert_eq!(*res.best_history.last().unwrap(), res.value);
    }

    #[test]
    fn model_json_round_trip_is_exact(w in weights(4), b in -3.0..3.0f64, c in 1e-4..1e3f64, eps in 0.0..2.0f64) {
        let model = LinearModel {
            kind: ModelKind::DrAucF,
            weights: w,
            intercept: b,
            hyper: HyperParams::new(c, eps),
            training_meta: TrainingMeta {
                iterations: 17,
                restarts: 2,
                stop: StopReason::Stalled,
                final_objective: c.sqrt(),
                relative_tolerance: 1e-6,
                patience: 200,
                max_iterations: 20_000,
                lambda: Some(eps / 3.0),
                certificate_value: Some(1.0 / 3.0),
            },
        };
        let doc = ModelDocument::new(model, Some(Scaler { shift: vec![0.1; 4], scale: vec![1.0 / 7.0; 4] }));
        let back = ModelDocument::from_json(&doc.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, doc);
    }
}

#[test]
fn from_atoms_rejects_mixed_dimensions() {
    let a = Atom { x_plus: vec![1.0], x_minus: vec![0.0], i_index: 0, j_index: 0 };
    let b = Atom { x_plus: vec![1.0, 2.0], x_minus: vec![0.0, 0.0], i_index: 1, j_index: 0 };
    assert!(AtomSet::from_atoms(vec![a, b]).is_err());
}

#[test]
fn benchmark_reports_are_consistent() {
    let ds = LabeledDataset::new(
        (0..24).map(|i| vec![(i as f64 * 0.37).sin() + if i % 2 == 0 { 0.8 } else { 0.0 }, (i as f64).cos()]).collect(),
        (0..24).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect(),
    )
    .unwrap();
    let mut config = BenchmarkConfig {
        runs: 7,
        train_size: 10,
        worst_k: 3,
        cv_folds: 2,
        ..BenchmarkConfig::default()
    };
    config.grids.insert(ModelKind::Svm, GridSpec::new(vec![0.1, 1.0], vec![0.0]));
    config.grids.insert(ModelKind::DrAucF, GridSpec::new(vec![1.0], vec![0.0, 0.1]));
    let report = run_benchmark(&ds, &config, 2).unwrap();
    let seeds = &report.reports[0].seeds;
    for r in &report.reports {
        // every model sees the same splits
        assert_eq!(&r.seeds, seeds);
        assert_eq!(r.run_aucs.len(), 7);
        assert!((r.mean - mean(&r.run_aucs)).abs() <= 1e-12);
        assert!((r.std - sample_std(&r.run_aucs)).abs() <= 1e-12);
        assert!((r.worst_k_mean - worst_k_mean(&r.run_aucs, 3).unwrap()).abs() <= 1e-12);
        let picked: Vec<f64> = r.worst_k_runs.iter().map(|&run| r.run_aucs[run - 1]).collect();
        assert!((mean(&picked) - r.worst_k_mean).abs() <= 1e-12);
        assert!((sample_std(&picked) - r.worst_k_std).abs() <= 1e-12);
    }
}
