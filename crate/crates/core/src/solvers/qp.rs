//! Dense convex quadratic programs `min 1/2 x'Qx + c'x  s.t.  Ax <= b`,
//! solved with a Mehrotra predictor-corrector interior-point method.
//!
//! Meant for reference solutions at test scale (a few hundred variables and
//! a few thousand constraints). `Q` only has to be positive semidefinite; the
//! Newton system `Q + A' D A` is positive definite whenever `A` has full
//! column rank, which holds for every formulation built in this crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solvers::lp::{solve_lp, LpProblem, LpStatus, Objective, RowSense};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub n: usize,
    /// Row-major `n x n`, symmetric PSD.
    pub q: Vec<f64>,
    pub c: Vec<f64>,
    /// Row-major `rows x n`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl QpProblem {
    pub fn new(q: Vec<f64>, c: Vec<f64>) -> Self {
        let n = c.len();
        QpProblem {
            n,
            q,
            c,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    /// Appends `coeffs . x <= rhs`.
    pub fn add_le(&mut self, coeffs: &[f64], rhs: f64) {
        assert_eq!(coeffs.len(), self.n, "row length must match variable count");
        self.a.extend_from_slice(coeffs);
        self.b.push(rhs);
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut quad = 0.0;
        for i in 0..n {
            let qi: f64 = (0..n).map(|j| self.q[i * n + j] * x[j]).sum();
            quad += x[i] * qi;
        }
        0.5 * quad + self.c.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QpResiduals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    /// Largest negative multiplier, in magnitude.
    pub dual_feasibility: f64,
}

impl QpResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.feasibility)
            .max(self.complementarity)
            .max(self.dual_feasibility)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Constraint multipliers, all non-negative.
    pub multipliers: Vec<f64>,
    pub residuals: QpResiduals,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 200;

fn check_psd(problem: &QpProblem) -> Result<()> {
    let n = problem.n;
    let qmax = problem.q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (problem.q[i * n + j], problem.q[j * n + i]);
            if (a - b).abs() > 1e-12 * (1.0 + qmax) {
                return Err(Error::InvalidArgument("Q is not symmetric".into()));
            }
        }
    }
    let shift = 1e-10 * (1.0 + qmax);
    let m = DMatrix::from_fn(n, n, |i, j| problem.q[i * n + j] + if i == j { shift } else { 0.0 });
    if m.cholesky().is_none() {
        return Err(Error::InvalidArgument("Q is not positive semidefinite".into()));
    }
    Ok(())
}

/// KKT residuals of `(x, z)`.
pub fn qp_residuals(problem: &QpProblem, x: &[f64], z: &[f64]) -> QpResiduals {
    let n = problem.n;
    let mut grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| problem.q[i * n + j] * x[j]).sum::<f64>() + problem.c[i])
        .collect();
    let mut res = QpResiduals::default();
    for (i, zi) in z.iter().enumerate() {
        let row = &problem.a[i * n..(i + 1) * n];
        let ax: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        let slack = problem.b[i] - ax;
        res.feasibility = res.feasibility.max((-slack).max(0.0));
        res.complementarity = res.complementarity.max((zi * slack).abs());
        res.dual_feasibility = res.dual_feasibility.max((-zi).max(0.0));
        for (g, a) in grad.iter_mut().zip(row) {
            *g += a * zi;
        }
    }
    res.stationarity = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    res
}

/// Re-solves the KKT system with the constraints guessed active (`z > s`)
/// held as equalities. Interior iterates approach a degenerate optimum only
/// at the rate `sqrt(mu)`; the exact solve recovers it when the guess is
/// right.
fn polish(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    slack: &DVector<f64>,
    z: &DVector<f64>,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    let active: Vec<usize> = (0..m).filter(|&i| z[i] > slack[i].max(0.0)).collect();
    let k = active.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(q);
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&(-c));
    for (r, &i) in active.iter().enumerate() {
        for p in 0..n {
            kkt[(p, n + r)] = a[(i, p)];
            kkt[(n + r, p)] = a[(i, p)];
        }
        rhs[n + r] = b[i];
    }
    let sol = kkt.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let x: Vec<f64> = sol.rows(0, n).iter().copied().collect();
    let mut zs = vec![0.0; m];
    for (r, &i) in active.iter().enumerate() {
        zs[i] = sol[n + r];
    }
    if x.iter().chain(&zs).any(|v| !v.is_finite()) {
        return None;
    }
    Some((x, zs))
}

/// Solves the QP to KKT residuals below `1e-7` relative to the data scale.
///
/// Fails when `Q` is not PSD, when the constraints are infeasible (confirmed
/// by a phase-one LP), or when the iteration does not converge.
pub fn solve_qp(problem: &QpProblem) -> Result<QpSolution> {
    let n = problem.n;
    let m = problem.n_rows();
    if problem.q.len() != n * n || problem.a.len() != m * n {
        return Err(Error::InvalidArgument("inconsistent QP dimensions".into()));
    }
    if problem.q.iter().chain(&problem.c).chain(&problem.a).chain(&problem.b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("QP data must be finite".into()));
    }
    check_psd(problem)?;

    let q = DMatrix::from_row_slice(n, n, &problem.q);
    let c = DVector::from_column_slice(&problem.c);
    let a = DMatrix::from_row_slice(m, n, &problem.a);
    let b = DVector::from_column_slice(&problem.b);
    let at = a.transpose();
    let scale_b = 1.0 + b.amax();
    let scale_c = 1.0 + c.amax();

    let mut x = DVector::zeros(n);
    let mut s = (&b - &a * &x).map(|v| v.max(1.0));
    let mut z = DVector::from_element(m, 1.0);
    let mut best: Option<(f64, DVector<f64>, DVector<f64>, usize)> = None;

    for iter in 1..=MAX_ITERATIONS {
        let rd = &q * &x + &c + &at * &z;
        let rp = &a * &x + &s - &b;
        let mu = if m > 0 { s.dot(&z) / m as f64 } else { 0.0 };
        let merit = (rp.amax() / scale_b).max(rd.amax() / scale_c).max(mu / scale_c);
        if best.as_ref().is_none_or(|(m, ..)| merit < *m) {
            best = Some((merit, x.clone(), z.clone(), iter));
        }
        if rp.amax() <= 1e-9 * scale_b && rd.amax() <= 1e-8 * scale_c && mu <= 1e-10 * scale_c {
            break;
        }

        let d = z.component_div(&s);
        let mut h = q.clone();
        for i in 0..m {
            let di = d[i];
            let row = a.row(i);
            for p in 0..n {
                let ap = row[p] * di;
                if ap != 0.0 {
                    for r in 0..n {
                        h[(p, r)] += ap * row[r];
                    }
                }
            }
        }
        let Some(chol) = h.clone().cholesky().or_else(|| {
            let eps = 1e-12 * (1.0 + h.amax());
            (h.clone() + DMatrix::identity(n, n) * eps).cholesky()
        }) else {
            break;
        };

        let solve_dir = |rc: &DVector<f64>| {
            // rc is the complementarity target for  Z ds + S dz = rc
            let rhs_x = -&rd - &at * (d.component_mul(&rp) + rc.component_div(&s));
            let dx = chol.solve(&rhs_x);
            let dz = d.component_mul(&(&a * &dx + &rp)) + rc.component_div(&s);
            let ds = (rc - s.component_mul(&dz)).component_div(&z);
            (dx, ds, dz)
        };
        let step_to_boundary = |v: &DVector<f64>, dv: &DVector<f64>| {
            v.iter()
                .zip(dv.iter())
                .filter(|(_, d)| **d < 0.0)
                .map(|(v, d)| -v / d)
                .fold(1.0f64, f64::min)
        };

        let rc_aff = -s.component_mul(&z);
        let (_, ds_aff, dz_aff) = solve_dir(&rc_aff);
        let alpha_aff = step_to_boundary(&s, &ds_aff).min(step_to_boundary(&z, &dz_aff));
        let mu_aff = if m > 0 {
            (&s + &ds_aff * alpha_aff).dot(&(&z + &dz_aff * alpha_aff)) / m as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).min(1.0) } else { 0.0 };
        let rc = &rc_aff - ds_aff.component_mul(&dz_aff) + DVector::from_element(m, sigma * mu);
        let (dx, ds, dz) = solve_dir(&rc);
        let alpha = (0.995 * step_to_boundary(&s, &ds).min(step_to_boundary(&z, &dz))).min(1.0);
        x += &dx * alpha;
        s += &ds * alpha;
        z += &dz * alpha;
        if x.iter().any(|v| !v.is_finite()) || x.amax() > 1e12 * scale_b * scale_c {
            break;
        }
    }

    // the reduced Newton system loses accuracy as the barrier vanishes, so
    // the best iterate is accepted once its KKT residuals are small enough
    if let Some((_, x, z, iterations)) = best {
        let mut xs: Vec<f64> = x.iter().copied().collect();
        let mut zs: Vec<f64> = z.iter().copied().collect();
        let mut residuals = qp_residuals(problem, &xs, &zs);
        let slack = &b - &a * &x;
        if let Some((px, pz)) = polish(&q, &c, &a, &b, &slack, &z) {
            let pr = qp_residuals(problem, &px, &pz);
            if pr.max() <= residuals.max() {
                (xs, zs, residuals) = (px, pz, pr);
            }
        }
        if residuals.max() <= 1e-7 * scale_b.max(scale_c) {
            return Ok(QpSolution {
                value: problem.objective(&xs),
                residuals,
                x: xs,
                multipliers: zs,
                iterations,
            });
        }
    }
    if !constraints_feasible(problem)? {
        return Err(Error::Solver("QP constraints are infeasible".into()));
    }
    Err(Error::Solver(
        "interior-point iteration did not converge (problem may be unbounded)".into(),
    ))
}

fn constraints_feasible(problem: &QpProblem) -> Result<bool> {
    let mut lp = LpProblem::new(Objective::Minimize, vec![0.0; problem.n]);
    lp.lower = vec![None; problem.n];
    for i in 0..problem.n_rows() {
        lp.add_row(&problem.a[i * problem.n..(i + 1) * problem.n], RowSense::Le, problem.b[i]);
    }
    Ok(solve_lp(&lp)?.status != LpStatus::Infeasible)
}
