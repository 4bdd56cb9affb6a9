//! Explicit LP/QP formulations of the training problems and of the inner
//! worst-case problem. They grow quadratically (or worse) in the atom count
//! and are meant for small instances and for checking the first-order
//! trainers.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::pairing::{build_atoms, AtomSet, DistanceMatrix};
use crate::solvers::lp::{LpProblem, Objective, RowSense};
use crate::solvers::qp::{solve_qp, QpProblem};

use super::{HyperParams, ModelKind};

/// Variable count above which [`solve_exact`] refuses to build a QP.
pub const EXACT_VARIABLE_CAP: usize = 400;

/// `1/2 |w|^2` over the first `d` of `n` variables.
fn ridge_q(n: usize, d: usize) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for k in 0..d {
        q[k * n + k] = 1.0;
    }
    q
}

/// Variables `[w (d), b, xi (N)]`:
/// `min 1/2 |w|^2 + C/N sum xi`, `xi_j >= 1 - y_j (w.x_j + b)`, `xi >= 0`.
pub fn svm_qp(ds: &LabeledDataset, c: f64) -> QpProblem {
    let (d, n_pts) = (ds.dim(), ds.len());
    let n = d + 1 + n_pts;
    let mut cost = vec![0.0; n];
    cost[d + 1..].iter_mut().for_each(|v| *v = c / n_pts as f64);
    let mut qp = QpProblem::new(ridge_q(n, d), cost);
    for (j, (x, y)) in ds.rows().zip(ds.labels()).enumerate() {
        let y = y.sign();
        let mut row = vec![0.0; n];
        for k in 0..d {
            row[k] = -y * x[k];
        }
        row[d] = -y;
        row[d + 1 + j] = -1.0;
        qp.add_le(&row, -1.0);
        let mut nonneg = vec![0.0; n];
        nonneg[d + 1 + j] = -1.0;
        qp.add_le(&nonneg, 0.0);
    }
    qp
}

/// Hinge epigraph rows `t_j >= 1 - w.u_j`, `t_j >= 0` with `t` starting at
/// column `t0`.
fn add_hinge_rows(qp: &mut QpProblem, atoms: &AtomSet, t0: usize) {
    let (d, n) = (atoms.dim(), qp.n);
    for (j, atom) in atoms.atoms().iter().enumerate() {
        let u = atom.diff();
        let mut row = vec![0.0; n];
        for k in 0..d {
            row[k] = -u[k];
        }
        row[t0 + j] = -1.0;
        qp.add_le(&row, -1.0);
        let mut nonneg = vec![0.0; n];
        nonneg[t0 + j] = -1.0;
        qp.add_le(&nonneg, 0.0);
    }
}

/// Variables `[w (d), xi (M)]`: `min 1/2 |w|^2 + C/M sum xi` over the hinge
/// epigraph.
pub fn d_auc_qp(atoms: &AtomSet, c: f64) -> QpProblem {
    let (d, m) = (atoms.dim(), atoms.m());
    let n = d + m;
    let mut cost = vec![0.0; n];
    cost[d..].iter_mut().for_each(|v| *v = c / m as f64);
    let mut qp = QpProblem::new(ridge_q(n, d), cost);
    add_hinge_rows(&mut qp, atoms, d);
    qp
}

/// Variables `[w (d), lambda, t (M)]`:
/// `min 1/2 |w|^2 + C (1/M sum t + lambda eps)` subject to, for all `i, j`,
/// `t_i + lambda d_ij >= 1 - w.u_j` and `t_i + lambda d_ij >= 0`, and
/// `lambda >= 0`.
pub fn dr_auc_f_qp(atoms: &AtomSet, dist: &DistanceMatrix, hyper: &HyperParams) -> QpProblem {
    let (d, m) = (atoms.dim(), atoms.m());
    let n = d + 1 + m;
    let mut cost = vec![0.0; n];
    cost[d] = hyper.c * hyper.epsilon;
    cost[d + 1..].iter_mut().for_each(|v| *v = hyper.c / m as f64);
    let mut qp = QpProblem::new(ridge_q(n, d), cost);
    let diffs: Vec<Vec<f64>> = atoms.atoms().iter().map(|a| a.diff()).collect();
    for i in 0..m {
        for (j, u) in diffs.iter().enumerate() {
            let mut row = vec![0.0; n];
            for k in 0..d {
                row[k] = -u[k];
            }
            row[d] = -dist.get(i, j);
            row[d + 1 + i] = -1.0;
            qp.add_le(&row, -1.0);
            let mut floor = vec![0.0; n];
            floor[d] = -dist.get(i, j);
            floor[d + 1 + i] = -1.0;
            qp.add_le(&floor, 0.0);
        }
    }
    let mut nonneg = vec![0.0; n];
    nonneg[d] = -1.0;
    qp.add_le(&nonneg, 0.0);
    qp
}

/// Variables `[w (d), lambda, t (M)]`:
/// `min 1/2 |w|^2 + C (1/M sum t + lambda eps)` over the hinge epigraph with
/// `|w_k| <= lambda`.
pub fn dr_auc_v_qp(atoms: &AtomSet, hyper: &HyperParams) -> QpProblem {
    let (d, m) = (atoms.dim(), atoms.m());
    let n = d + 1 + m;
    let mut cost = vec![0.0; n];
    cost[d] = hyper.c * hyper.epsilon;
    cost[d + 1..].iter_mut().for_each(|v| *v = hyper.c / m as f64);
    let mut qp = QpProblem::new(ridge_q(n, d), cost);
    add_hinge_rows(&mut qp, atoms, d + 1);
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut row = vec![0.0; n];
            row[k] = s;
            row[d] = -1.0;
            qp.add_le(&row, 0.0);
        }
    }
    let mut nonneg = vec![0.0; n];
    nonneg[d] = -1.0;
    qp.add_le(&nonneg, 0.0);
    qp
}

/// Transport LP over `K (M x M, row-major)`:
/// `max sum_j h_j sum_i K_ij` subject to `sum_j K_ij = 1/M`,
/// `sum_ij d_ij K_ij <= eps`, `K >= 0`.
pub fn inner_primal_lp(h: &[f64], dist: &DistanceMatrix, epsilon: f64) -> LpProblem {
    let m = h.len();
    let c: Vec<f64> = (0..m * m).map(|idx| h[idx % m]).collect();
    let mut lp = LpProblem::new(Objective::Maximize, c);
    for i in 0..m {
        let mut row = vec![0.0; m * m];
        row[i * m..(i + 1) * m].iter_mut().for_each(|v| *v = 1.0);
        lp.add_row(&row, RowSense::Eq, 1.0 / m as f64);
    }
    let budget: Vec<f64> = (0..m * m).map(|idx| dist.get(idx / m, idx % m)).collect();
    lp.add_row(&budget, RowSense::Le, epsilon);
    lp
}

/// Dual of [`inner_primal_lp`] over `[lambda, t (M)]`:
/// `min 1/M sum t + lambda eps` subject to `t_i + lambda d_ij >= h_j`,
/// `lambda >= 0`, `t` free.
pub fn inner_dual_lp(h: &[f64], dist: &DistanceMatrix, epsilon: f64) -> LpProblem {
    let m = h.len();
    let mut c = vec![1.0 / m as f64; m + 1];
    c[0] = epsilon;
    let mut lp = LpProblem::new(Objective::Minimize, c);
    for v in lp.lower.iter_mut().skip(1) {
        *v = None;
    }
    for i in 0..m {
        for (j, &hj) in h.iter().enumerate() {
            let mut row = vec![0.0; m + 1];
            row[0] = dist.get(i, j);
            row[1 + i] = 1.0;
            lp.add_row(&row, RowSense::Ge, hj);
        }
    }
    lp
}

/// Solution of an explicit formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// `lambda` for the robust models.
    pub lambda: Option<f64>,
    pub value: f64,
}

/// Solves the explicit QP of `kind` on `ds` with the interior-point solver.
pub fn solve_exact(kind: ModelKind, ds: &LabeledDataset, hyper: &HyperParams) -> Result<ExactSolution> {
    hyper.validate_for(kind)?;
    ds.require_both_classes()?;
    let d = ds.dim();
    let qp = match kind {
        ModelKind::Svm => svm_qp(ds, hyper.c),
        ModelKind::DAuc => d_auc_qp(&build_atoms(ds)?, hyper.c),
        ModelKind::DrAucF => {
            let atoms = build_atoms(ds)?;
            let dist = DistanceMatrix::build(&atoms, EXACT_VARIABLE_CAP)?;
            dr_auc_f_qp(&atoms, &dist, hyper)
        }
        ModelKind::DrAucV => dr_auc_v_qp(&build_atoms(ds)?, hyper),
    };
    if qp.n > EXACT_VARIABLE_CAP {
        return Err(Error::AtomCapExceeded {
            count: qp.n,
            cap: EXACT_VARIABLE_CAP,
        });
    }
    let sol = solve_qp(&qp)?;
    let weights = sol.x[..d].to_vec();
    let (intercept, lambda) = match kind {
        ModelKind::Svm => (sol.x[d], None),
        ModelKind::DAuc => (0.0, None),
        ModelKind::DrAucF | ModelKind::DrAucV => (0.0, Some(sol.x[d])),
    };
    Ok(ExactSolution {
        weights,
        intercept,
        lambda,
        value: sol.value,
    })
}
