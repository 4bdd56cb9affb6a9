//! Dense two-phase tableau simplex for small linear programs.
//!
//! Pricing starts with Dantzig's most-negative rule and switches permanently
//! to Bland's smallest-index rule after a run of degenerate pivots, which
//! rules out cycling. The final basis is re-solved with an LU factorization
//! to recover an accurate primal point and row duals, and KKT residuals are
//! measured on the original problem.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// `opt c.x  s.t.  a_i . x (sense_i) b_i,  x_j >= lower_j` where a `None`
/// lower bound leaves the variable free.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Objective,
    pub c: Vec<f64>,
    /// Row-major `rows x c.len()`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub senses: Vec<RowSense>,
    pub lower: Vec<Option<f64>>,
}

impl LpProblem {
    /// Problem with every variable bounded below by zero.
    pub fn new(objective: Objective, c: Vec<f64>) -> Self {
        let n = c.len();
        LpProblem {
            objective,
            c,
            a: Vec::new(),
            b: Vec::new(),
            senses: Vec::new(),
            lower: vec![Some(0.0); n],
        }
    }

    pub fn add_row(&mut self, coeffs: &[f64], sense: RowSense, rhs: f64) {
        assert_eq!(coeffs.len(), self.c.len(), "row length must match variable count");
        self.a.extend_from_slice(coeffs);
        self.senses.push(sense);
        self.b.push(rhs);
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        let n = self.n_vars();
        &self.a[i * n..(i + 1) * n]
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_vars(), self.n_rows());
        if self.a.len() != n * m || self.senses.len() != m || self.lower.len() != n {
            return Err(Error::InvalidArgument(format!(
                "inconsistent LP dimensions: {n} variables, {m} rows, {} matrix entries, {} senses, {} bounds",
                self.a.len(),
                self.senses.len(),
                self.lower.len()
            )));
        }
        let finite = self.c.iter().chain(&self.a).chain(&self.b).all(|v| v.is_finite())
            && self.lower.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("LP data must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Shadow price of each row: the rate of change of the optimal value
    /// as the right-hand side grows.
    pub duals: Vec<f64>,
    pub objective_value: f64,
    /// `b . y + sum_j lower_j r_j` with reduced costs `r = c - A^T y`.
    pub dual_value: f64,
    pub residuals: KktResiduals,
    pub pivots: usize,
}

impl LpSolution {
    fn failed(status: LpStatus, pivots: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            duals: Vec::new(),
            objective_value: f64::NAN,
            dual_value: f64::NAN,
            residuals: KktResiduals::default(),
            pivots,
        }
    }
}

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;

enum ColumnOrigin {
    /// Original variable `j`, shifted by its lower bound.
    Shifted(usize),
    Positive(usize),
    Negative(usize),
    Slack,
    Artificial,
}

struct Tableau {
    width: usize,
    rows: usize,
    /// `rows x (width + 1)`, last column is the right-hand side.
    t: Vec<f64>,
    /// Reduced costs, last entry is minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    bland: bool,
    degenerate_run: usize,
    pivots: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.width + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width + 1;
        let p = self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                for (v, pv) in self.t[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.t[r * w + pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    fn run(&mut self, allowed: &[bool], active: &[bool], max_pivots: usize) -> PhaseEnd {
        loop {
            if self.pivots >= max_pivots {
                return PhaseEnd::IterationLimit;
            }
            let entering = if self.bland {
                (0..self.width).find(|&c| allowed[c] && self.obj[c] < -1e-10)
            } else {
                (0..self.width)
                    .filter(|&c| allowed[c] && self.obj[c] < -1e-10)
                    .min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(pc) = entering else {
                return PhaseEnd::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in (0..self.rows).filter(|&r| active[r]) {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return PhaseEnd::Unbounded;
            };
            if ratio <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run >= DEGENERATE_RUN {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

/// Solves a dense LP. Infeasible and unbounded problems, as well as a final
/// basis that fails its residual check, are reported through
/// [`LpSolution::status`].
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let m = problem.n_rows();
    let sign = match problem.objective {
        Objective::Minimize => 1.0,
        Objective::Maximize => -1.0,
    };

    // standard-form columns
    let mut origins = Vec::new();
    for (j, lb) in problem.lower.iter().enumerate() {
        match lb {
            Some(_) => origins.push(ColumnOrigin::Shifted(j)),
            None => {
                origins.push(ColumnOrigin::Positive(j));
                origins.push(ColumnOrigin::Negative(j));
            }
        }
    }
    let n_struct = origins.len();
    let shift: Vec<f64> = problem.lower.iter().map(|l| l.unwrap_or(0.0)).collect();

    // rows after shifting bounds and making the rhs non-negative
    let mut flipped = vec![false; m];
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let a = problem.row(i);
        let mut bi = problem.b[i] - a.iter().zip(&shift).map(|(x, y)| x * y).sum::<f64>();
        let mut coeffs: Vec<f64> = origins
            .iter()
            .map(|o| match *o {
                ColumnOrigin::Shifted(j) | ColumnOrigin::Positive(j) => a[j],
                ColumnOrigin::Negative(j) => -a[j],
                _ => unreachable!(),
            })
            .collect();
        if bi < 0.0 {
            flipped[i] = true;
            bi = -bi;
            coeffs.iter_mut().for_each(|v| *v = -*v);
        }
        rows.push(coeffs);
        rhs.push(bi);
    }
    // slack, surplus and artificial columns
    let mut slack_col: Vec<Option<(usize, f64)>> = vec![None; m];
    let mut art_col: Vec<Option<usize>> = vec![None; m];
    let mut width = n_struct;
    for i in 0..m {
        let s = match problem.senses[i] {
            RowSense::Le => Some(1.0),
            RowSense::Ge => Some(-1.0),
            RowSense::Eq => None,
        };
        if let Some(s) = s {
            let s = if flipped[i] { -s } else { s };
            slack_col[i] = Some((width, s));
            origins.push(ColumnOrigin::Slack);
            width += 1;
        }
    }
    for i in 0..m {
        if !matches!(slack_col[i], Some((_, s)) if s > 0.0) {
            art_col[i] = Some(width);
            origins.push(ColumnOrigin::Artificial);
            width += 1;
        }
    }

    let w1 = width + 1;
    let mut t = vec![0.0; m * w1];
    let mut basis = vec![0; m];
    for i in 0..m {
        t[i * w1..i * w1 + n_struct].copy_from_slice(&rows[i]);
        if let Some((c, s)) = slack_col[i] {
            t[i * w1 + c] = s;
        }
        if let Some(c) = art_col[i] {
            t[i * w1 + c] = 1.0;
            basis[i] = c;
        } else {
            basis[i] = slack_col[i].unwrap().0;
        }
        t[i * w1 + width] = rhs[i];
    }
    let is_art: Vec<bool> = origins
        .iter()
        .map(|o| matches!(o, ColumnOrigin::Artificial))
        .collect();

    // phase 1: minimize the sum of artificials
    let mut obj = vec![0.0; w1];
    for i in 0..m {
        if art_col[i].is_some() {
            for c in (0..width).filter(|&c| !is_art[c]).chain([width]) {
                obj[c] -= t[i * w1 + c];
            }
        }
    }
    let mut tab = Tableau {
        width,
        rows: m,
        t,
        obj,
        basis,
        bland: false,
        degenerate_run: 0,
        pivots: 0,
    };
    let max_pivots = 50_000 + 20 * (m + width);
    let mut active = vec![true; m];
    let all_allowed = vec![true; width];
    let scale = 1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    if art_col.iter().any(Option::is_some) {
        match tab.run(&all_allowed, &active, max_pivots) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded | PhaseEnd::IterationLimit => {
                return Ok(LpSolution::failed(LpStatus::NumericalFailure, tab.pivots));
            }
        }
        if -tab.obj[width] > 1e-9 * scale {
            return Ok(LpSolution::failed(LpStatus::Infeasible, tab.pivots));
        }
        // drive remaining artificials out of the basis or drop their rows
        for r in 0..m {
            if is_art[tab.basis[r]] {
                let replacement = (0..width)
                    .filter(|&c| !is_art[c])
                    .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()))
                    .filter(|&c| tab.at(r, c).abs() > 1e-9);
                match replacement {
                    Some(c) => tab.pivot(r, c),
                    None => active[r] = false,
                }
            }
        }
    }

    // phase 2
    let cost: Vec<f64> = origins
        .iter()
        .map(|o| match *o {
            ColumnOrigin::Shifted(j) | ColumnOrigin::Positive(j) => sign * problem.c[j],
            ColumnOrigin::Negative(j) => -sign * problem.c[j],
            _ => 0.0,
        })
        .collect();
    let mut obj = vec![0.0; w1];
    obj[..width].copy_from_slice(&cost);
    for r in (0..m).filter(|&r| active[r]) {
        let cb = cost[tab.basis[r]];
        if cb != 0.0 {
            for c in 0..w1 {
                obj[c] -= cb * tab.at(r, c);
            }
        }
    }
    tab.obj = obj;
    tab.bland = false;
    tab.degenerate_run = 0;
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    match tab.run(&allowed, &active, max_pivots) {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return Ok(LpSolution::failed(LpStatus::Unbounded, tab.pivots)),
        PhaseEnd::IterationLimit => {
            return Ok(LpSolution::failed(LpStatus::NumericalFailure, tab.pivots))
        }
    }

    // re-solve the final basis for an accurate primal/dual pair
    let live: Vec<usize> = (0..m).filter(|&r| active[r]).collect();
    let k = live.len();
    let column = |c: usize, row: usize| -> f64 {
        if c < n_struct {
            rows[row][c]
        } else if let Some((sc, s)) = slack_col[row] {
            if sc == c {
                s
            } else if art_col[row] == Some(c) {
                1.0
            } else {
                0.0
            }
        } else if art_col[row] == Some(c) {
            1.0
        } else {
            0.0
        }
    };
    let basic: Vec<usize> = live.iter().map(|&r| tab.basis[r]).collect();
    let bmat = DMatrix::from_fn(k, k, |a, b| column(basic[b], live[a]));
    let bvec = DVector::from_fn(k, |a, _| rhs[live[a]]);
    let cb = DVector::from_fn(k, |a, _| cost[basic[a]]);
    let lu = bmat.clone().lu();
    let (xb, y_live) = match (lu.solve(&bvec), bmat.transpose().lu().solve(&cb)) {
        (Some(xb), Some(y)) => (xb, y),
        _ => return Ok(LpSolution::failed(LpStatus::NumericalFailure, tab.pivots)),
    };
    let mut x_std = vec![0.0; width];
    for (a, &c) in basic.iter().enumerate() {
        x_std[c] = xb[a].max(0.0);
    }
    let mut x = shift.clone();
    for (c, o) in origins.iter().enumerate() {
        match *o {
            ColumnOrigin::Shifted(j) | ColumnOrigin::Positive(j) => x[j] += x_std[c],
            ColumnOrigin::Negative(j) => x[j] -= x_std[c],
            _ => {}
        }
    }
    let mut duals = vec![0.0; m];
    for (a, &r) in live.iter().enumerate() {
        let f = if flipped[r] { -1.0 } else { 1.0 };
        duals[r] = sign * f * y_live[a];
    }

    let objective_value: f64 = problem.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    let (residuals, dual_value) = kkt_residuals(problem, &x, &duals);
    let data_scale = 1.0
        + problem
            .c
            .iter()
            .chain(&problem.b)
            .fold(0.0f64, |a, v| a.max(v.abs()));
    let status = if residuals.max() <= 1e-8 * data_scale {
        LpStatus::Optimal
    } else {
        LpStatus::NumericalFailure
    };
    Ok(LpSolution {
        status,
        x,
        duals,
        objective_value,
        dual_value,
        residuals,
        pivots: tab.pivots,
    })
}

/// Primal feasibility, dual sign feasibility and complementary slackness of
/// `(x, y)`, plus the dual objective value.
pub fn kkt_residuals(problem: &LpProblem, x: &[f64], y: &[f64]) -> (KktResiduals, f64) {
    let n = problem.n_vars();
    let max_sense = problem.objective == Objective::Maximize;
    let mut res = KktResiduals::default();
    let mut reduced = problem.c.clone();
    let mut dual_value = 0.0;
    for i in 0..problem.n_rows() {
        let a = problem.row(i);
        let ax: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
        let slack = problem.b[i] - ax;
        let yi = y[i];
        let (viol, dual_viol) = match problem.senses[i] {
            RowSense::Le => (
                (-slack).max(0.0),
                if max_sense { (-yi).max(0.0) } else { yi.max(0.0) },
            ),
            RowSense::Ge => (
                slack.max(0.0),
                if max_sense { yi.max(0.0) } else { (-yi).max(0.0) },
            ),
            RowSense::Eq => (slack.abs(), 0.0),
        };
        res.primal = res.primal.max(viol);
        res.dual = res.dual.max(dual_viol);
        if problem.senses[i] != RowSense::Eq {
            res.complementarity = res.complementarity.max((yi * slack).abs());
        }
        for j in 0..n {
            reduced[j] -= a[j] * yi;
        }
        dual_value += problem.b[i] * yi;
    }
    for j in 0..n {
        let r = reduced[j];
        match problem.lower[j] {
            Some(l) => {
                res.primal = res.primal.max((l - x[j]).max(0.0));
                let viol = if max_sense { r.max(0.0) } else { (-r).max(0.0) };
                res.dual = res.dual.max(viol);
                res.complementarity = res.complementarity.max((r * (x[j] - l)).abs());
                dual_value += l * r;
            }
            None => res.dual = res.dual.max(r.abs()),
        }
    }
    (res, dual_value)
}
