//! The four linear classifiers and the worst-case analysis of the
//! fixed-support ambiguity set.
//!
//! Training objectives (`C` the loss weight, `M` the atom count, `h_j` the
//! pairwise hinge loss of atom `j`, `d_ij` the atom ground distance):
//!
//! ```text
//! svm       1/2 |w|^2 + C/N sum_j max(0, 1 - y_j (w.x_j + b))
//! d_auc     1/2 |w|^2 + C/M sum_j h_j
//! dr_auc_f  1/2 |w|^2 + C (1/M sum_i t_i + lambda eps),  t_i = max_j (h_j - lambda d_ij)
//! dr_auc_v  1/2 |w|^2 + C eps |w|_inf + C/M sum_j h_j
//! ```
//!
//! The robust objectives are the dual forms of the worst-case expected loss
//! over a Kantorovich ball of radius `eps` around the empirical pair
//! distribution. For the fixed-support ball the epigraph variables `t` are
//! eliminated in closed form and `(w, lambda)` is optimized jointly with
//! `lambda >= 0` enforced by projection. For the variable-support ball the
//! optimal multiplier is `lambda = |w|_inf` (the hinge loss is 1-Lipschitz),
//! which leaves an unconstrained composite objective.
//!
//! All four are minimized with [`minimize_subgradient`]; [`reference`] holds
//! the equivalent explicit LP/QP formulations used to check them.

pub mod reference;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Scaler};
use crate::error::{Error, Result};
use crate::metrics::dot;
use crate::pairing::{build_atoms, AtomSet, DistanceMatrix, DEFAULT_ATOM_CAP};
use crate::solvers::lp::{solve_lp, LpStatus};
use crate::solvers::subgradient::{minimize_subgradient, StopReason, SubgradientConfig};

/// Atom count above which the exact transport LP is refused.
pub const ORACLE_ATOM_CAP: usize = 200;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svm,
    #[serde(alias = "d-auc")]
    DAuc,
    #[serde(alias = "dr-auc-f")]
    DrAucF,
    #[serde(alias = "dr-auc-v")]
    DrAucV,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Svm,
        ModelKind::DAuc,
        ModelKind::DrAucF,
        ModelKind::DrAucV,
    ];

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::DAuc => "d-auc",
            ModelKind::DrAucF => "dr-auc-f",
            ModelKind::DrAucV => "dr-auc-v",
        }
    }

    /// Name used in reports and tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Svm => "SVM",
            ModelKind::DAuc => "D-AUC",
            ModelKind::DrAucF => "DR-AUC-F",
            ModelKind::DrAucV => "DR-AUC-V",
        }
    }

    pub fn is_robust(self) -> bool {
        matches!(self, ModelKind::DrAucF | ModelKind::DrAucV)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.cli_name() == norm)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model kind `{s}`; expected one of svm, d-auc, dr-auc-f, dr-auc-v"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub c: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl HyperParams {
    pub fn new(c: f64, epsilon: f64) -> Self {
        HyperParams { c, epsilon }
    }

    pub fn validate_for(&self, kind: ModelKind) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !kind.is_robust() && self.epsilon != 0.0 {
            return Err(Error::Config(format!(
                "epsilon has no meaning for {kind}; it must be 0"
            )));
        }
        Ok(())
    }
}

/// `(lambda, t)` feasible for the dual of the worst-case expected loss LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub lambda: f64,
    pub t: Vec<f64>,
}

impl DualCertificate {
    /// `1/M sum t_i + lambda eps`, an upper bound on the worst-case loss.
    pub fn value(&self, epsilon: f64) -> f64 {
        self.t.iter().sum::<f64>() / self.t.len() as f64 + self.lambda * epsilon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub restarts: usize,
    pub stop: StopReason,
    pub final_objective: f64,
    pub relative_tolerance: f64,
    pub patience: usize,
    pub max_iterations: usize,
    /// Optimal multiplier of the transport budget (robust models only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Dual bound `1/M sum t_i + lambda eps` on the worst-case loss.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub hyper: HyperParams,
    pub training_meta: TrainingMeta,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// `w . x + b`.
pub fn score(model: &LinearModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    Ok(dot(&model.weights, x) + model.intercept)
}

pub fn score_dataset(model: &LinearModel, ds: &LabeledDataset) -> Result<Vec<f64>> {
    ds.rows().map(|x| score(model, x)).collect()
}

/// Serialized model: the trained classifier plus the standardizer that was
/// fitted on its training data, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub hyper: HyperParams,
    pub standardizer: Option<Scaler>,
    pub training_meta: TrainingMeta,
}

impl ModelDocument {
    pub fn new(model: LinearModel, standardizer: Option<Scaler>) -> Self {
        ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: model.kind,
            weights: model.weights,
            intercept: model.intercept,
            hyper: model.hyper,
            standardizer,
            training_meta: model.training_meta,
        }
    }

    pub fn model(&self) -> LinearModel {
        LinearModel {
            kind: self.kind,
            weights: self.weights.clone(),
            intercept: self.intercept,
            hyper: self.hyper,
            training_meta: self.training_meta.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model schema version {}",
                doc.schema_version
            )));
        }
        if let Some(s) = &doc.standardizer {
            if s.dim() != doc.weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: doc.weights.len(),
                    got: s.dim(),
                });
            }
        }
        Ok(doc)
    }

    /// Scores raw (unstandardized) features.
    pub fn score_raw(&self, x: &[f64]) -> Result<f64> {
        let model = self.model();
        match &self.standardizer {
            Some(s) => score(&model, &s.transform_row(x)?),
            None => score(&model, x),
        }
    }
}

/// Difference vectors `x+ - x-` of every atom, row-major.
struct PairDiffs {
    diffs: Vec<f64>,
    m: usize,
    d: usize,
}

impl PairDiffs {
    fn new(atoms: &AtomSet) -> Self {
        PairDiffs {
            diffs: atoms.diffs(),
            m: atoms.m(),
            d: atoms.dim(),
        }
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.diffs[j * self.d..(j + 1) * self.d]
    }

    /// Hinge values `h_j`.
    fn hinges(&self, w: &[f64], out: &mut [f64]) {
        for (j, h) in out.iter_mut().enumerate() {
            *h = (1.0 - dot(w, self.row(j))).max(0.0);
        }
    }
}

fn half_norm_sq(w: &[f64]) -> f64 {
    0.5 * dot(w, w)
}

fn inf_norm(w: &[f64]) -> f64 {
    w.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Soft-margin SVM objective with the loss averaged over the `N` points.
pub fn svm_objective(w: &[f64], b: f64, ds: &LabeledDataset, c: f64) -> Result<f64> {
    check_dim(ds.dim(), w.len())?;
    let loss: f64 = ds
        .rows()
        .zip(ds.labels())
        .map(|(x, y)| (1.0 - y.sign() * (dot(w, x) + b)).max(0.0))
        .sum();
    Ok(half_norm_sq(w) + c / ds.len() as f64 * loss)
}

/// `1/2 |w|^2 + C/M sum_j h_j`.
pub fn d_auc_objective(w: &[f64], atoms: &AtomSet, c: f64) -> Result<f64> {
    check_dim(atoms.dim(), w.len())?;
    let pd = PairDiffs::new(atoms);
    let mut h = vec![0.0; pd.m];
    pd.hinges(w, &mut h);
    Ok(half_norm_sq(w) + c * h.iter().sum::<f64>() / pd.m as f64)
}

/// `1/2 |w|^2 + C eps |w|_inf + C/M sum_j h_j`.
pub fn dr_auc_v_objective(w: &[f64], atoms: &AtomSet, hyper: &HyperParams) -> Result<f64> {
    Ok(d_auc_objective(w, atoms, hyper.c)? + hyper.c * hyper.epsilon * inf_norm(w))
}

/// Scan order for the inner maximization: atoms by decreasing hinge value,
/// ties by index. For a row `i`, only atoms with `h_j > t_i` can raise `t_i`,
/// so the scan stops at the first atom whose hinge does not exceed the
/// current maximum.
fn tightest_t(h: &[f64], order: &[usize], dist: &DistanceMatrix, lambda: f64, out_t: &mut [f64], out_arg: &mut [usize]) {
    for i in 0..h.len() {
        let row = dist.row(i);
        let mut best = h[i];
        let mut arg = i;
        for &j in order {
            if h[j] <= best {
                break;
            }
            let v = h[j] - lambda * row[j];
            if v > best {
                best = v;
                arg = j;
            }
        }
        out_t[i] = best;
        out_arg[i] = arg;
    }
}

fn hinge_order(h: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&a, &b| h[b].total_cmp(&h[a]).then(a.cmp(&b)));
    order
}

/// Fixed-support robust objective at `(w, lambda)` with the epigraph
/// variables at their smallest feasible values
/// `t_i = max_j max(h_j - lambda d_ij, 0)`.
pub fn dr_auc_f_objective(
    w: &[f64],
    lambda: f64,
    atoms: &AtomSet,
    dist: &DistanceMatrix,
    hyper: &HyperParams,
) -> Result<(f64, DualCertificate)> {
    check_dim(atoms.dim(), w.len())?;
    check_dim(atoms.m(), dist.m())?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let pd = PairDiffs::new(atoms);
    let mut h = vec![0.0; pd.m];
    pd.hinges(w, &mut h);
    let order = hinge_order(&h);
    let mut t = vec![0.0; pd.m];
    let mut arg = vec![0; pd.m];
    tightest_t(&h, &order, dist, lambda, &mut t, &mut arg);
    let cert = DualCertificate { lambda, t };
    let value = half_norm_sq(w) + hyper.c * cert.value(hyper.epsilon);
    Ok((value, cert))
}

fn meta_from(result: &crate::solvers::SubgradientResult, cfg: &SubgradientConfig) -> TrainingMeta {
    TrainingMeta {
        iterations: result.iterations,
        restarts: result.restarts,
        stop: result.stop,
        final_objective: result.value,
        relative_tolerance: cfg.relative_tolerance,
        patience: cfg.patience,
        max_iterations: cfg.max_iterations,
        lambda: None,
        certificate_value: None,
    }
}

/// Value and subgradient of the SVM objective at `x = (w, b)`.
fn svm_oracle(ds: &LabeledDataset, c: f64, x: &[f64], g: &mut [f64]) -> f64 {
    let d = ds.dim();
    let n = ds.len() as f64;
    let (w, b) = (&x[..d], x[d]);
    g[..d].copy_from_slice(w);
    g[d] = 0.0;
    let mut loss = 0.0;
    for (row, y) in ds.rows().zip(ds.labels()) {
        let y = y.sign();
        let margin = 1.0 - y * (dot(w, row) + b);
        if margin > 0.0 {
            loss += margin;
            for (gk, xk) in g[..d].iter_mut().zip(row) {
                *gk -= c / n * y * xk;
            }
            g[d] -= c / n * y;
        }
    }
    half_norm_sq(w) + c / n * loss
}

pub fn train_svm(ds: &LabeledDataset, hyper: &HyperParams, cfg: &SubgradientConfig) -> Result<LinearModel> {
    hyper.validate_for(ModelKind::Svm)?;
    ds.require_both_classes()?;
    let d = ds.dim();
    let c = hyper.c;
    let result = minimize_subgradient(
        |x, g| svm_oracle(ds, c, x, g),
        &vec![0.0; d + 1],
        None,
        cfg,
    )?;
    Ok(LinearModel {
        kind: ModelKind::Svm,
        weights: result.x[..d].to_vec(),
        intercept: result.x[d],
        hyper: *hyper,
        training_meta: meta_from(&result, cfg),
    })
}

/// Value and subgradient of `1/2 |w|^2 + C eps_inf |w|_inf + C/M sum_j h_j`.
fn hinge_pairs_oracle(pd: &PairDiffs, c: f64, inf_weight: f64, w: &[f64], g: &mut [f64]) -> f64 {
    let m = pd.m as f64;
    g.copy_from_slice(w);
    let mut loss = 0.0;
    for j in 0..pd.m {
        let u = pd.row(j);
        let margin = 1.0 - dot(w, u);
        if margin > 0.0 {
            loss += margin;
            for (gk, uk) in g.iter_mut().zip(u) {
                *gk -= c / m * uk;
            }
        }
    }
    let mut value = half_norm_sq(w) + c / m * loss;
    if inf_weight > 0.0 {
        let norm = inf_norm(w);
        if norm > 0.0 {
            let k = w.iter().position(|v| v.abs() == norm).unwrap_or(0);
            g[k] += c * inf_weight * w[k].signum();
        }
        value += c * inf_weight * norm;
    }
    value
}

/// Minimizes `1/2 |w|^2 + C eps_inf |w|_inf + C/M sum_j h_j`; `eps_inf = 0`
/// gives D-AUC.
fn train_hinge_pairs(atoms: &AtomSet, c: f64, inf_weight: f64, cfg: &SubgradientConfig) -> Result<crate::solvers::SubgradientResult> {
    let pd = PairDiffs::new(atoms);
    minimize_subgradient(
        |w, g| hinge_pairs_oracle(&pd, c, inf_weight, w, g),
        &vec![0.0; pd.d],
        None,
        cfg,
    )
}

pub fn train_d_auc(ds: &LabeledDataset, hyper: &HyperParams, cfg: &SubgradientConfig) -> Result<LinearModel> {
    hyper.validate_for(ModelKind::DAuc)?;
    let atoms = build_atoms(ds)?;
    train_d_auc_atoms(&atoms, hyper, cfg)
}

pub fn train_d_auc_atoms(atoms: &AtomSet, hyper: &HyperParams, cfg: &SubgradientConfig) -> Result<LinearModel> {
    hyper.validate_for(ModelKind::DAuc)?;
    let result = train_hinge_pairs(atoms, hyper.c, 0.0, cfg)?;
    Ok(LinearModel {
        kind: ModelKind::DAuc,
        weights: result.x.clone(),
        intercept: 0.0,
        hyper: *hyper,
        training_meta: meta_from(&result, cfg),
    })
}

pub fn train_dr_auc_v(ds: &LabeledDataset, hyper: &HyperParams, cfg: &SubgradientConfig) -> Result<LinearModel> {
    hyper.validate_for(ModelKind::DrAucV)?;
    let atoms = build_atoms(ds)?;
    train_dr_auc_v_atoms(&atoms, hyper, cfg)
}

pub fn train_dr_auc_v_atoms(atoms: &AtomSet, hyper: &HyperParams, cfg: &SubgradientConfig) -> Result<LinearModel> {
    hyper.validate_for(ModelKind::DrAucV)?;
    let result = train_hinge_pairs(atoms, hyper.c, hyper.epsilon, cfg)?;
    let lambda = inf_norm(&result.x);
    let pd = PairDiffs::new(atoms);
    let mut h = vec![0.0; pd.m];
    pd.hinges(&result.x, &mut h);
    let cert = DualCertificate { lambda, t: h };
    let mut meta = meta_from(&result, cfg);
    meta.lambda = Some(lambda);
    meta.certificate_value = Some(cert.value(hyper.epsilon));
    Ok(LinearModel {
        kind: ModelKind::DrAucV,
        weights: result.x,
        intercept: 0.0,
        hyper: *hyper,
        training_meta: meta,
    })
}

pub fn train_dr_auc_f(ds: &LabeledDataset, hyper: &HyperParams, cfg: &SubgradientConfig) -> Result<LinearModel> {
    hyper.validate_for(ModelKind::DrAucF)?;
    let atoms = build_atoms(ds)?;
    train_dr_auc_f_atoms(&atoms, hyper, cfg)
}

/// Evaluates `t_i = max_j max(h_j - lambda d_ij, 0)` for every row together
/// with the pieces of a subgradient: `acc = sum_i d t_i / d w` and
/// `sum_i d_(i, j*(i))`.
enum InnerMax {
    Scan {
        pd: PairDiffs,
        dist: DistanceMatrix,
        margins: Vec<f64>,
        h: Vec<f64>,
        arg: Vec<usize>,
        picks: Vec<usize>,
    },
    Product(ProductInner),
}

/// For the full product of `P` positives and `N` negatives the ground
/// distance splits as `d((a,b),(a',b')) = Dp(a,a') + Dn(b,b')`, and with
/// `s = w.x+`, `r = w.x-`
///
/// ```text
/// t_(a,b) = max(0, 1 + max_a' (-s_a' - lambda Dp(a,a')) + max_b' (r_b' - lambda Dn(b,b')))
/// ```
///
/// which costs `O(P^2 + N^2 + P N)` instead of `O(M^2)`.
struct ProductInner {
    pos: Vec<Vec<f64>>,
    neg: Vec<Vec<f64>>,
    dp: Vec<f64>,
    dn: Vec<f64>,
    best_a: Vec<(f64, usize)>,
    best_b: Vec<(f64, usize)>,
    s: Vec<f64>,
    r: Vec<f64>,
}

fn l1_table(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).abs()).sum();
        }
    }
    out
}

/// `max_k (v_k - lambda D(i,k))` for every `i`, first maximizer kept.
fn penalized_max(v: &[f64], table: &[f64], lambda: f64, out: &mut [(f64, usize)]) {
    let n = v.len();
    for (i, slot) in out.iter_mut().enumerate() {
        let row = &table[i * n..(i + 1) * n];
        let mut best = (f64::NEG_INFINITY, 0);
        for k in 0..n {
            let val = v[k] - lambda * row[k];
            if val > best.0 {
                best = (val, k);
            }
        }
        *slot = best;
    }
}

impl ProductInner {
    fn new(pos: Vec<Vec<f64>>, neg: Vec<Vec<f64>>) -> Self {
        let (p, n) = (pos.len(), neg.len());
        ProductInner {
            dp: l1_table(&pos),
            dn: l1_table(&neg),
            pos,
            neg,
            best_a: vec![(0.0, 0); p],
            best_b: vec![(0.0, 0); n],
            s: vec![0.0; p],
            r: vec![0.0; n],
        }
    }

    fn prepare(&mut self, w: &[f64], lambda: f64) {
        for (s, x) in self.s.iter_mut().zip(&self.pos) {
            *s = -dot(w, x);
        }
        for (r, x) in self.r.iter_mut().zip(&self.neg) {
            *r = dot(w, x);
        }
        penalized_max(&self.s, &self.dp, lambda, &mut self.best_a);
        penalized_max(&self.r, &self.dn, lambda, &mut self.best_b);
    }
}

impl InnerMax {
    /// Product sets need no dense distance matrix and so are not subject to
    /// the atom cap; other sets are.
    fn new(atoms: &AtomSet) -> Result<Self> {
        if let Some((pos, neg)) = atoms.product_factors() {
            let pos = pos.into_iter().map(<[f64]>::to_vec).collect();
            let neg = neg.into_iter().map(<[f64]>::to_vec).collect();
            return Ok(InnerMax::Product(ProductInner::new(pos, neg)));
        }
        let m = atoms.m();
        Ok(InnerMax::Scan {
            pd: PairDiffs::new(atoms),
            dist: DistanceMatrix::build(atoms, DEFAULT_ATOM_CAP)?,
            margins: vec![0.0; m],
            h: vec![0.0; m],
            arg: vec![0; m],
            picks: vec![0; m],
        })
    }

    /// Writes `t` and returns `(sum_i d_(i, j*(i)), acc)` with `acc` added
    /// into `acc_out`.
    fn eval(&mut self, w: &[f64], lambda: f64, t: &mut [f64], acc_out: &mut [f64]) -> f64 {
        acc_out.iter_mut().for_each(|v| *v = 0.0);
        match self {
            InnerMax::Scan { pd, dist, margins, h, arg, picks } => {
                for j in 0..pd.m {
                    margins[j] = 1.0 - dot(w, pd.row(j));
                    h[j] = margins[j].max(0.0);
                }
                let order = hinge_order(h);
                tightest_t(h, &order, dist, lambda, t, arg);
                picks.iter_mut().for_each(|p| *p = 0);
                let mut dist_sum = 0.0;
                for (i, &j) in arg.iter().enumerate() {
                    picks[j] += 1;
                    dist_sum += dist.get(i, j);
                }
                for j in (0..pd.m).filter(|&j| picks[j] > 0 && margins[j] > 0.0) {
                    for (a, u) in acc_out.iter_mut().zip(pd.row(j)) {
                        *a -= picks[j] as f64 * u;
                    }
                }
                dist_sum
            }
            InnerMax::Product(inner) => {
                inner.prepare(w, lambda);
                let (p, n) = (inner.pos.len(), inner.neg.len());
                let mut cnt_a = vec![0usize; p];
                let mut cnt_b = vec![0usize; n];
                let mut dist_sum = 0.0;
                for a in 0..p {
                    let (va, ka) = inner.best_a[a];
                    for b in 0..n {
                        let (vb, kb) = inner.best_b[b];
                        let v = 1.0 + va + vb;
                        if v > 0.0 {
                            t[a * n + b] = v;
                            cnt_a[ka] += 1;
                            cnt_b[kb] += 1;
                            dist_sum += inner.dp[a * p + ka] + inner.dn[b * n + kb];
                        } else {
                            t[a * n + b] = 0.0;
                        }
                    }
                }
                for (k, &cnt) in cnt_a.iter().enumerate().filter(|(_, c)| **c > 0) {
                    for (acc, x) in acc_out.iter_mut().zip(&inner.pos[k]) {
                        *acc -= cnt as f64 * x;
                    }
                }
                for (k, &cnt) in cnt_b.iter().enumerate().filter(|(_, c)| **c > 0) {
                    for (acc, x) in acc_out.iter_mut().zip(&inner.neg[k]) {
                        *acc += cnt as f64 * x;
                    }
                }
                dist_sum
            }
        }
    }
}

/// Value and subgradient of the DR-AUC-F objective at `x = (w, lambda)`.
/// `t` and `acc` are scratch buffers of length `M` and `d`.
fn f_oracle(inner: &mut InnerMax, c: f64, eps: f64, x: &[f64], g: &mut [f64], t: &mut [f64], acc: &mut [f64]) -> f64 {
    let (m, d) = (t.len() as f64, acc.len());
    let (w, lambda) = (&x[..d], x[d]);
    let dist_sum = inner.eval(w, lambda, t, acc);
    for k in 0..d {
        g[k] = w[k] + c / m * acc[k];
    }
    g[d] = c * (eps - dist_sum / m);
    half_norm_sq(w) + c * (t.iter().sum::<f64>() / m + lambda * eps)
}

/// Joint projected subgradient descent over `(w, lambda)`, starting from
/// `w = 0`, `lambda = |w|_inf + 1`.
pub fn train_dr_auc_f_atoms(atoms: &AtomSet, hyper: &HyperParams, cfg: &SubgradientConfig) -> Result<LinearModel> {
    hyper.validate_for(ModelKind::DrAucF)?;
    let mut inner = InnerMax::new(atoms)?;
    let (m, d) = (atoms.m(), atoms.dim());
    let (c, eps) = (hyper.c, hyper.epsilon);
    let mut t = vec![0.0; m];
    let mut acc = vec![0.0; d];

    let mut x0 = vec![0.0; d + 1];
    x0[d] = inf_norm(&x0[..d]) + 1.0;
    let project = |x: &mut [f64]| {
        let l = x.len() - 1;
        x[l] = x[l].max(0.0);
    };
    let result = minimize_subgradient(
        |x, g| f_oracle(&mut inner, c, eps, x, g, &mut t, &mut acc),
        &x0,
        Some(&project),
        cfg,
    )?;
    let w = result.x[..d].to_vec();
    let lambda = result.x[d];
    inner.eval(&w, lambda, &mut t, &mut acc);
    let cert = DualCertificate { lambda, t };
    let mut meta = meta_from(&result, cfg);
    meta.lambda = Some(lambda);
    meta.certificate_value = Some(cert.value(eps));
    Ok(LinearModel {
        kind: ModelKind::DrAucF,
        weights: w,
        intercept: 0.0,
        hyper: *hyper,
        training_meta: meta,
    })
}

/// Trains any of the four models.
pub fn train(kind: ModelKind, ds: &LabeledDataset, hyper: &HyperParams, cfg: &SubgradientConfig) -> Result<LinearModel> {
    match kind {
        ModelKind::Svm => train_svm(ds, hyper, cfg),
        ModelKind::DAuc => train_d_auc(ds, hyper, cfg),
        ModelKind::DrAucF => train_dr_auc_f(ds, hyper, cfg),
        ModelKind::DrAucV => train_dr_auc_v(ds, hyper, cfg),
    }
}

/// Objective of `model` on its training data, recomputed from scratch. For
/// DR-AUC-F the multiplier stored in the training metadata is used.
pub fn training_objective(model: &LinearModel, ds: &LabeledDataset) -> Result<f64> {
    let w = &model.weights;
    match model.kind {
        ModelKind::Svm => svm_objective(w, model.intercept, ds, model.hyper.c),
        ModelKind::DAuc => d_auc_objective(w, &build_atoms(ds)?, model.hyper.c),
        ModelKind::DrAucV => dr_auc_v_objective(w, &build_atoms(ds)?, &model.hyper),
        ModelKind::DrAucF => {
            let atoms = build_atoms(ds)?;
            check_dim(atoms.dim(), w.len())?;
            let mut inner = InnerMax::new(&atoms)?;
            let mut x = w.clone();
            x.push(model.training_meta.lambda.unwrap_or(0.0));
            let mut g = vec![0.0; x.len()];
            let (mut t, mut acc) = (vec![0.0; atoms.m()], vec![0.0; w.len()]);
            Ok(f_oracle(&mut inner, model.hyper.c, model.hyper.epsilon, &x, &mut g, &mut t, &mut acc))
        }
    }
}

/// Mass moved between atoms by a worst-case distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub m: usize,
    /// Row-major `m x m`; entry `(i, j)` is the mass moved from reference
    /// atom `i` to atom `j`.
    pub k: Vec<f64>,
    /// Worst-case probabilities (column sums of `k`).
    pub p: Vec<f64>,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.m + j]
    }

    /// `sum_ij d_ij k_ij`.
    pub fn cost(&self, dist: &DistanceMatrix) -> f64 {
        (0..self.m)
            .flat_map(|i| (0..self.m).map(move |j| (i, j)))
            .map(|(i, j)| dist.get(i, j) * self.get(i, j))
            .sum()
    }
}

/// Pairwise hinge values of `w` on every atom.
pub fn atom_hinges(w: &[f64], atoms: &AtomSet) -> Result<Vec<f64>> {
    check_dim(atoms.dim(), w.len())?;
    let pd = PairDiffs::new(atoms);
    let mut h = vec![0.0; pd.m];
    pd.hinges(w, &mut h);
    Ok(h)
}

/// Worst-case distribution over the fixed support at `w`: the exact solution
/// of the transport LP, its column sums and the worst-case expected loss.
pub fn worst_case_distribution(
    w: &[f64],
    atoms: &AtomSet,
    dist: &DistanceMatrix,
    epsilon: f64,
) -> Result<(TransportPlan, f64)> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if atoms.m() > ORACLE_ATOM_CAP {
        return Err(Error::AtomCapExceeded {
            count: atoms.m(),
            cap: ORACLE_ATOM_CAP,
        });
    }
    check_dim(atoms.m(), dist.m())?;
    let h = atom_hinges(w, atoms)?;
    let lp = reference::inner_primal_lp(&h, dist, epsilon);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("transport LP ended with status {:?}", sol.status)));
    }
    let m = atoms.m();
    let k: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
    let p: Vec<f64> = (0..m).map(|j| (0..m).map(|i| k[i * m + j]).sum()).collect();
    Ok((TransportPlan { m, k, p }, sol.objective_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use crate::pairing::{distance_matrix, Atom};

    fn one_atom() -> LabeledDataset {
        LabeledDataset::new(vec![vec![1.0], vec![0.0]], vec![Label::Positive, Label::Negative]).unwrap()
    }

    #[test]
    fn d_auc_single_atom() {
        let m = train_d_auc(&one_atom(), &HyperParams::new(1.0, 0.0), &SubgradientConfig::default()).unwrap();
        assert!((m.weights[0] - 1.0).abs() < 1e-3);
        assert!((m.training_meta.final_objective - 0.5).abs() < 1e-3);
        assert_eq!(m.intercept, 0.0);
    }

    #[test]
    fn dr_auc_v_single_atom() {
        let m = train_dr_auc_v(&one_atom(), &HyperParams::new(1.0, 0.1), &SubgradientConfig::default()).unwrap();
        assert!((m.weights[0] - 0.9).abs() < 1e-3, "{:?}", m.weights);
        assert!((m.training_meta.final_objective - 0.595).abs() < 1e-3);
        assert!((m.training_meta.lambda.unwrap() - 0.9).abs() < 1e-3);
    }

    #[test]
    fn dr_auc_f_single_atom_equals_d_auc() {
        let cfg = SubgradientConfig::default();
        let d = train_d_auc(&one_atom(), &HyperParams::new(1.0, 0.0), &cfg).unwrap();
        for eps in [0.0, 0.5, 3.0] {
            let f = train_dr_auc_f(&one_atom(), &HyperParams::new(1.0, eps), &cfg).unwrap();
            assert!((f.training_meta.final_objective - d.training_meta.final_objective).abs() < 1e-4);
            assert!((f.weights[0] - d.weights[0]).abs() < 1e-3);
        }
    }

    #[test]
    fn svm_symmetric_pair() {
        let ds = LabeledDataset::new(vec![vec![1.0], vec![-1.0]], vec![Label::Positive, Label::Negative]).unwrap();
        let m = train_svm(&ds, &HyperParams::new(100.0, 0.0), &SubgradientConfig::default()).unwrap();
        assert!((m.weights[0] - 1.0).abs() < 1e-2, "{:?}", m.weights);
        assert!(m.intercept.abs() < 1e-2);
    }

    #[test]
    fn svm_small_c_shrinks_weights() {
        let ds = LabeledDataset::new(vec![vec![1.0], vec![-1.0]], vec![Label::Positive, Label::Negative]).unwrap();
        let m = train_svm(&ds, &HyperParams::new(1e-4, 0.0), &SubgradientConfig::default()).unwrap();
        assert!(m.weights[0].abs() < 1e-3);
    }

    #[test]
    fn epsilon_rejected_for_non_robust() {
        let cfg = SubgradientConfig::default();
        assert!(matches!(
            train_svm(&one_atom(), &HyperParams::new(1.0, 0.1), &cfg),
            Err(Error::Config(_))
        ));
        assert!(train_d_auc(&one_atom(), &HyperParams::new(1.0, 0.1), &cfg).is_err());
        assert!(train_d_auc(&one_atom(), &HyperParams::new(0.0, 0.0), &cfg).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let ds = LabeledDataset::new(vec![vec![1.0], vec![2.0]], vec![Label::Positive; 2]).unwrap();
        let cfg = SubgradientConfig::default();
        for kind in ModelKind::ALL {
            let eps = if kind.is_robust() { 0.1 } else { 0.0 };
            assert!(matches!(
                train(kind, &ds, &HyperParams::new(1.0, eps), &cfg),
                Err(Error::EmptyClass(-1))
            ));
        }
    }

    #[test]
    fn score_examples() {
        let model = LinearModel {
            kind: ModelKind::DAuc,
            weights: vec![1.0, 2.0],
            intercept: 0.0,
            hyper: HyperParams::new(1.0, 0.0),
            training_meta: TrainingMeta {
                iterations: 0,
                restarts: 0,
                stop: StopReason::Stalled,
                final_objective: 0.0,
                relative_tolerance: 1e-6,
                patience: 1,
                max_iterations: 1,
                lambda: None,
                certificate_value: None,
            },
        };
        assert_eq!(score(&model, &[3.0, 4.0]).unwrap(), 11.0);
        assert!(score(&model, &[3.0]).is_err());
        let zero = LinearModel { weights: vec![0.0, 0.0], ..model };
        assert_eq!(score(&zero, &[-5.0, 7.0]).unwrap(), 0.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.cli_name().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("dr_auc_v".parse::<ModelKind>().unwrap(), ModelKind::DrAucV);
        let err = "rf".parse::<ModelKind>().unwrap_err().to_string();
        assert!(err.contains("svm, d-auc, dr-auc-f, dr-auc-v"));
    }

    fn three_atoms() -> (AtomSet, DistanceMatrix) {
        let atoms = AtomSet::from_atoms(vec![
            Atom { x_plus: vec![0.3, 1.0], x_minus: vec![0.0, 0.2], i_index: 0, j_index: 0 },
            Atom { x_plus: vec![0.3, 1.0], x_minus: vec![1.5, -0.4], i_index: 0, j_index: 1 },
            Atom { x_plus: vec![-0.7, 0.1], x_minus: vec![0.0, 0.2], i_index: 1, j_index: 0 },
        ])
        .unwrap();
        let dist = distance_matrix(&atoms);
        (atoms, dist)
    }

    #[test]
    fn f_objective_limits() {
        let (atoms, dist) = three_atoms();
        let w = [0.4, -0.3];
        let hyper = HyperParams::new(2.0, 0.25);
        let h = atom_hinges(&w, &atoms).unwrap();

        let (v0, cert0) = dr_auc_f_objective(&w, 0.0, &atoms, &dist, &hyper).unwrap();
        let hmax = h.iter().cloned().fold(0.0, f64::max);
        assert!(cert0.t.iter().all(|&t| t == hmax));
        assert!((v0 - (0.5 * 0.25 + 2.0 * hmax)).abs() < 1e-12);

        let lambda = 1e3;
        let (v, cert) = dr_auc_f_objective(&w, lambda, &atoms, &dist, &hyper).unwrap();
        assert_eq!(cert.t, h);
        let d_auc = d_auc_objective(&w, &atoms, 2.0).unwrap();
        assert!((v - (d_auc + 2.0 * lambda * 0.25)).abs() < 1e-9);

        assert!(dr_auc_f_objective(&w, -1.0, &atoms, &dist, &hyper).is_err());
    }

    #[test]
    fn product_inner_max_matches_scan() {
        let ds = LabeledDataset::new(
            vec![vec![0.3, 1.0], vec![-0.7, 0.1], vec![1.2, -0.4], vec![0.0, 0.2], vec![1.5, -0.4]],
            vec![Label::Positive, Label::Positive, Label::Positive, Label::Negative, Label::Negative],
        )
        .unwrap();
        let atoms = build_atoms(&ds).unwrap();
        let dist = distance_matrix(&atoms);
        let hyper = HyperParams::new(1.5, 0.3);
        let mut inner = InnerMax::new(&atoms).unwrap();
        assert!(matches!(inner, InnerMax::Product(_)));
        let mut t = vec![0.0; atoms.m()];
        let mut acc = vec![0.0; 2];
        for (w, lambda) in [([0.4, -0.3], 0.0), ([0.4, -0.3], 0.7), ([2.0, 1.0], 0.2), ([0.0, 0.0], 5.0)] {
            inner.eval(&w, lambda, &mut t, &mut acc);
            let (_, cert) = dr_auc_f_objective(&w, lambda, &atoms, &dist, &hyper).unwrap();
            for (a, b) in t.iter().zip(&cert.t) {
                assert!((a - b).abs() < 1e-12, "{t:?} vs {:?}", cert.t);
            }
        }
    }

    #[test]
    fn worst_case_zero_budget_is_uniform() {
        let (atoms, dist) = three_atoms();
        let w = [0.4, -0.3];
        let (plan, value) = worst_case_distribution(&w, &atoms, &dist, 0.0).unwrap();
        assert!(plan.p.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
        let risk = crate::metrics::empirical_pair_risk(&w, &atoms).unwrap();
        assert!((value - risk).abs() < 1e-12);
    }

    #[test]
    fn worst_case_full_budget_concentrates() {
        let (atoms, dist) = three_atoms();
        let w = [0.4, -0.3];
        let h = atom_hinges(&w, &atoms).unwrap();
        let jstar = (0..3).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap();
        let eps = (0..3).map(|i| dist.get(i, jstar)).fold(0.0, f64::max);
        let (plan, value) = worst_case_distribution(&w, &atoms, &dist, eps).unwrap();
        assert!((plan.p[jstar] - 1.0).abs() < 1e-9);
        assert!((value - h[jstar]).abs() < 1e-9);
    }

    /// Compares `g . u` with one-sided difference quotients at 20 random
    /// points, skipping points whose forward and backward quotients disagree
    /// (a kink lies within the step).
    fn check_oracle(dim: usize, seed: u64, lambda_slot: bool, mut f: impl FnMut(&[f64], &mut [f64]) -> f64) {
        use rand::Rng;
        let mut rng = crate::data::seeded_rng(seed);
        let step = 1e-7;
        let mut accepted = 0;
        let mut tries = 0;
        while accepted < 20 {
            tries += 1;
            assert!(tries < 2000, "too many kinks");
            let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if lambda_slot {
                x[dim - 1] = rng.gen_range(0.1..3.0);
            }
            let mut u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            u.iter_mut().for_each(|v| *v /= norm);
            let mut g = vec![0.0; dim];
            let fx = f(&x, &mut g);
            let mut scratch = vec![0.0; dim];
            let at = |s: f64| x.iter().zip(&u).map(|(a, b)| a + s * b).collect::<Vec<_>>();
            let fwd = (f(&at(step), &mut scratch) - fx) / step;
            let bwd = (fx - f(&at(-step), &mut scratch)) / step;
            if (fwd - bwd).abs() > 1e-5 * (1.0 + fx.abs()) {
                continue;
            }
            accepted += 1;
            let gu: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!((fwd - gu).abs() <= 1e-4 * (1.0 + fx.abs()), "derivative {fwd} vs g.u {gu} at {x:?}");
        }
    }

    fn small_dataset() -> LabeledDataset {
        LabeledDataset::new(
            vec![vec![1.0, 0.5], vec![0.3, -0.2], vec![1.4, 1.1], vec![-0.5, 0.4], vec![0.2, -1.0], vec![0.9, 0.0]],
            vec![Label::Positive, Label::Positive, Label::Positive, Label::Negative, Label::Negative, Label::Negative],
        )
        .unwrap()
    }

    #[test]
    fn oracles_match_finite_differences() {
        let ds = small_dataset();
        check_oracle(3, 1, false, |x, g| svm_oracle(&ds, 0.7, x, g));

        let atoms = build_atoms(&ds).unwrap();
        let pd = PairDiffs::new(&atoms);
        check_oracle(2, 2, false, |w, g| hinge_pairs_oracle(&pd, 1.3, 0.0, w, g));
        check_oracle(2, 3, false, |w, g| hinge_pairs_oracle(&pd, 1.3, 0.4, w, g));

        // the factored and the scanning inner maximizations
        let scan_atoms = AtomSet::from_atoms(atoms.atoms()[..7].to_vec()).unwrap();
        for (set, seed) in [(&atoms, 4), (&scan_atoms, 5)] {
            let mut inner = InnerMax::new(set).unwrap();
            let mut t = vec![0.0; set.m()];
            let mut acc = vec![0.0; 2];
            check_oracle(3, seed, true, |x, g| f_oracle(&mut inner, 0.9, 0.2, x, g, &mut t, &mut acc));
        }
    }

    #[test]
    fn model_document_round_trip() {
        let m = train_dr_auc_v(&one_atom(), &HyperParams::new(1.0, 0.1), &SubgradientConfig::default()).unwrap();
        let doc = ModelDocument::new(m, Some(Scaler { shift: vec![0.1 + 0.2], scale: vec![1.0 / 3.0] }));
        let text = doc.to_json().unwrap();
        let back = ModelDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json().unwrap(), text);
        assert!(ModelDocument::from_json(&text.replace("\"schema_version\": 1", "\"schema_version\": 9")).is_err());
    }
}
