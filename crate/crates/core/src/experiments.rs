//! The evaluation protocol: grid-search cross-validation, repeated small
//! stratified training sets, worst-k statistics and relative differences.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    apply_standardizer, fit_standardizer, k_fold_split, stratified_sample, stratified_split, LabeledDataset, Scaler,
};
use crate::error::{Error, Result};
use crate::metrics::{auc_labeled, TiePolicy};
use crate::models::{score_dataset, train, HyperParams, LinearModel, ModelDocument, ModelKind};
use crate::solvers::SubgradientConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Candidate hyperparameters; every pair `(C, eps)` is tried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub c_values: Vec<f64>,
    #[serde(default = "zero_only")]
    pub epsilon_values: Vec<f64>,
}

fn zero_only() -> Vec<f64> {
    vec![0.0]
}

impl GridSpec {
    pub fn new(c_values: Vec<f64>, epsilon_values: Vec<f64>) -> Self {
        GridSpec {
            c_values,
            epsilon_values,
        }
    }

    /// The published search grid for each model.
    pub fn default_for(kind: ModelKind) -> Self {
        if kind.is_robust() {
            GridSpec::new(vec![0.1, 1.0, 2.5, 5.0, 10.0], vec![0.01, 0.1, 0.5, 1.0, 5.0, 10.0])
        } else {
            GridSpec::new(vec![0.0001, 0.001, 0.01, 0.1, 1.0, 5.0, 10.0, 50.0], zero_only())
        }
    }

    pub fn single(hyper: HyperParams) -> Self {
        GridSpec::new(vec![hyper.c], vec![hyper.epsilon])
    }

    pub fn validate_for(&self, kind: ModelKind) -> Result<()> {
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if self.c_values.is_empty() || self.epsilon_values.is_empty() {
            return Err(Error::Config(format!("the grid for {kind} is empty")));
        }
        if !ascending(&self.c_values) || !ascending(&self.epsilon_values) {
            return Err(Error::Config(format!(
                "grid values for {kind} must be strictly ascending"
            )));
        }
        if !kind.is_robust() && self.epsilon_values != [0.0] {
            return Err(Error::Config(format!(
                "epsilon has no meaning for {kind}; its grid must be [0]"
            )));
        }
        self.points().iter().try_for_each(|h| h.validate_for(kind))
    }

    /// Grid points with `C` outer and `eps` inner, both ascending. Selection
    /// keeps the first of equally scored points, which breaks ties by the
    /// smaller `C`, then the smaller `eps`.
    pub fn points(&self) -> Vec<HyperParams> {
        self.c_values
            .iter()
            .flat_map(|&c| self.epsilon_values.iter().map(move |&e| HyperParams::new(c, e)))
            .collect()
    }
}

/// Preprocessing, evaluation and solver settings shared by every fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Z-score features with statistics of the training data.
    pub standardize: bool,
    /// Ties are given half credit by default: under full credit a constant
    /// scorer (for instance `w = 0`, optimal for large `eps`) would reach
    /// AUC 1 and win every grid search.
    pub tie_policy: TiePolicy,
    pub solver: SubgradientConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            standardize: true,
            tie_policy: TiePolicy::HalfCredit,
            solver: SubgradientConfig::default(),
        }
    }
}

/// A trained model with the standardizer fitted on its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub model: LinearModel,
    pub scaler: Option<Scaler>,
}

impl FittedModel {
    pub fn scores(&self, ds: &LabeledDataset) -> Result<Vec<f64>> {
        match &self.scaler {
            Some(s) => score_dataset(&self.model, &apply_standardizer(s, ds)?),
            None => score_dataset(&self.model, ds),
        }
    }

    pub fn auc(&self, ds: &LabeledDataset, policy: TiePolicy) -> Result<f64> {
        auc_labeled(&self.scores(ds)?, ds.labels(), policy)
    }

    pub fn into_document(self) -> ModelDocument {
        ModelDocument::new(self.model, self.scaler)
    }
}

pub fn fit(kind: ModelKind, train_ds: &LabeledDataset, hyper: &HyperParams, opts: &FitOptions) -> Result<FittedModel> {
    if opts.standardize {
        let scaler = fit_standardizer(train_ds);
        let scaled = apply_standardizer(&scaler, train_ds)?;
        Ok(FittedModel {
            model: train(kind, &scaled, hyper, &opts.solver)?,
            scaler: Some(scaler),
        })
    } else {
        Ok(FittedModel {
            model: train(kind, train_ds, hyper, &opts.solver)?,
            scaler: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub hyper: HyperParams,
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: HyperParams,
    pub folds: usize,
    pub seed: u64,
    /// One entry per grid point in grid order; empty when the grid has a
    /// single point and nothing was compared.
    pub scores: Vec<GridScore>,
}

/// Grid search with stratified `k`-fold cross-validation. Returns the grid
/// point with the highest mean validation AUC.
pub fn cross_validate(
    ds: &LabeledDataset,
    kind: ModelKind,
    grid: &GridSpec,
    k: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<CvResult> {
    grid.validate_for(kind)?;
    let points = grid.points();
    if points.len() == 1 {
        return Ok(CvResult {
            best: points[0],
            folds: k,
            seed,
            scores: Vec::new(),
        });
    }
    let folds = k_fold_split(ds, k, seed)?;
    let fold_data: Vec<(LabeledDataset, LabeledDataset)> = folds
        .iter()
        .map(|f| (ds.subset(&f.train), ds.subset(&f.validation)))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..folds.len()).map(move |f| (p, f)))
        .collect();
    let aucs = tasks
        .par_iter()
        .map(|&(p, f)| {
            let (tr, va) = &fold_data[f];
            fit(kind, tr, &points[p], opts)
                .and_then(|m| m.auc(va, opts.tie_policy))
                .map_err(|e| {
                    e.context(format!(
                        "cross-validation of {kind} at C={}, epsilon={}, fold {}",
                        points[p].c,
                        points[p].epsilon,
                        f + 1
                    ))
                })
        })
        .collect::<Result<Vec<f64>>>()?;

    let scores: Vec<GridScore> = points
        .iter()
        .enumerate()
        .map(|(p, &hyper)| {
            let fold_aucs = aucs[p * k..(p + 1) * k].to_vec();
            let mean_auc = fold_aucs.iter().sum::<f64>() / k as f64;
            GridScore {
                hyper,
                fold_aucs,
                mean_auc,
            }
        })
        .collect();
    let mut best = &scores[0];
    for s in &scores[1..] {
        if s.mean_auc > best.mean_auc {
            best = s;
        }
    }
    debug!("{kind}: selected C={} epsilon={} (mean AUC {})", best.hyper.c, best.hyper.epsilon, best.mean_auc);
    Ok(CvResult {
        best: best.hyper,
        folds: k,
        seed,
        scores,
    })
}

/// Run indices of the `k` smallest values, ties kept in run order.
fn worst_k_indices(aucs: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > aucs.len() {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={}, got {k}",
            aucs.len()
        )));
    }
    let mut idx: Vec<usize> = (0..aucs.len()).collect();
    idx.sort_by(|&a, &b| aucs[a].total_cmp(&aucs[b]));
    idx.truncate(k);
    Ok(idx)
}

/// Mean of the `k` smallest entries.
pub fn worst_k_mean(aucs: &[f64], k: usize) -> Result<f64> {
    let idx = worst_k_indices(aucs, k)?;
    Ok(mean(&idx.iter().map(|&i| aucs[i]).collect::<Vec<_>>()))
}

/// `(auc_dr - auc_bench) / (1 - auc_bench)`; undefined when the benchmark
/// is already perfect.
pub fn relative_difference(auc_dr: f64, auc_bench: f64) -> Result<f64> {
    if auc_bench >= 1.0 {
        return Err(Error::UndefinedRelativeDifference);
    }
    Ok((auc_dr - auc_bench) / (1.0 - auc_bench))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor `n - 1`); 0 for a single value.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Where hyperparameters are tuned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CvScope {
    /// Once per model on a stratified sample of `train_size` points drawn
    /// with the base seed.
    TrainSize,
    /// Once per model on a stratified sample of the given size.
    Sample { size: usize },
    /// Once per model on the whole dataset.
    Full,
    /// Separately inside every run's training set.
    PerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub dataset_name: String,
    pub kinds: Vec<ModelKind>,
    pub runs: usize,
    pub train_size: usize,
    pub base_seed: u64,
    pub cv_folds: usize,
    pub cv_scope: CvScope,
    /// Number of lowest AUCs averaged for the worst-case statistic; capped at
    /// `runs`.
    pub worst_k: usize,
    pub grids: BTreeMap<ModelKind, GridSpec>,
    pub fit: FitOptions,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            dataset_name: "dataset".into(),
            kinds: ModelKind::ALL.to_vec(),
            runs: 100,
            train_size: 60,
            base_seed: 0,
            cv_folds: 5,
            cv_scope: CvScope::Full,
            worst_k: 10,
            grids: ModelKind::ALL.iter().map(|&k| (k, GridSpec::default_for(k))).collect(),
            fit: FitOptions::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        let mut seen = self.kinds.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.kinds.len() {
            return Err(Error::Config("models must not repeat".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.train_size < 2 {
            return Err(Error::Config("train_size must be at least 2".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be at least 2".into()));
        }
        if self.worst_k == 0 {
            return Err(Error::Config("worst_k must be at least 1".into()));
        }
        if let CvScope::Sample { size } = self.cv_scope {
            if size < self.cv_folds {
                return Err(Error::Config("the CV sample must hold at least one point per fold".into()));
            }
        }
        for kind in &self.kinds {
            self.grid(*kind)?.validate_for(*kind)?;
        }
        self.fit.solver.validate()
    }

    pub fn grid(&self, kind: ModelKind) -> Result<&GridSpec> {
        self.grids
            .get(&kind)
            .ok_or_else(|| Error::Config(format!("no grid given for {kind}")))
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    pub fn effective_worst_k(&self) -> usize {
        self.worst_k.min(self.runs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub base_seed: u64,
    /// Seed of the CV sample and folds; per-run tuning uses the run seeds.
    pub cv_seed: u64,
    pub run_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub dataset_name: String,
    pub model_kind: ModelKind,
    /// Hyperparameters used in every run; absent under per-run tuning.
    pub chosen_hyper: Option<HyperParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_hypers: Option<Vec<HyperParams>>,
    pub cv: Option<CvResult>,
    pub run_aucs: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over runs.
    pub std: f64,
    pub worst_k: usize,
    /// 1-based run numbers, matching the `run` column of the CSV.
    pub worst_k_runs: Vec<usize>,
    pub worst_k_mean: f64,
    /// Sample standard deviation of the `worst_k` lowest AUCs.
    pub worst_k_std: f64,
    pub seeds: SeedRecord,
    pub config_echo: BenchmarkConfig,
}

impl ExperimentReport {
    fn build(
        config: &BenchmarkConfig,
        kind: ModelKind,
        chosen_hyper: Option<HyperParams>,
        run_hypers: Option<Vec<HyperParams>>,
        cv: Option<CvResult>,
        run_aucs: Vec<f64>,
        seeds: SeedRecord,
    ) -> Result<Self> {
        let k = config.effective_worst_k();
        let worst = worst_k_indices(&run_aucs, k)?;
        let worst_vals: Vec<f64> = worst.iter().map(|&i| run_aucs[i]).collect();
        Ok(ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            dataset_name: config.dataset_name.clone(),
            model_kind: kind,
            chosen_hyper,
            run_hypers,
            cv,
            mean: mean(&run_aucs),
            std: sample_std(&run_aucs),
            worst_k: k,
            worst_k_runs: worst.iter().map(|i| i + 1).collect(),
            worst_k_mean: mean(&worst_vals),
            worst_k_std: sample_std(&worst_vals),
            run_aucs,
            seeds,
            config_echo: config.clone(),
        })
    }
}

/// Improvement of a robust model over a benchmark model; `None` where the
/// benchmark AUC is 1 and the ratio is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeDifferenceEntry {
    pub robust: ModelKind,
    pub benchmark: ModelKind,
    pub mean: Option<f64>,
    pub worst_k_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub dataset_name: String,
    pub n_points: usize,
    pub n_features: usize,
    pub class_counts: (usize, usize),
    pub std_definition: String,
    pub reports: Vec<ExperimentReport>,
    pub relative_differences: Vec<RelativeDifferenceEntry>,
    pub config_echo: BenchmarkConfig,
}

impl BenchmarkReport {
    pub fn report(&self, kind: ModelKind) -> Option<&ExperimentReport> {
        self.reports.iter().find(|r| r.model_kind == kind)
    }
}

fn cv_data(ds: &LabeledDataset, config: &BenchmarkConfig) -> Result<Option<LabeledDataset>> {
    let sample = |size: usize| -> Result<LabeledDataset> {
        if size >= ds.len() {
            Ok(ds.clone())
        } else {
            Ok(stratified_sample(ds, size, config.base_seed)?.0)
        }
    };
    match config.cv_scope {
        CvScope::TrainSize => sample(config.train_size).map(Some),
        CvScope::Sample { size } => sample(size).map(Some),
        CvScope::Full => Ok(Some(ds.clone())),
        CvScope::PerRun => Ok(None),
    }
}

/// Runs the repeated-split protocol with the given number of worker threads.
/// Output does not depend on `jobs`.
pub fn run_benchmark(ds: &LabeledDataset, config: &BenchmarkConfig, jobs: usize) -> Result<BenchmarkReport> {
    config.validate()?;
    if jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    if config.train_size >= ds.len() {
        return Err(Error::TooManyRequested {
            requested: config.train_size,
            available: ds.len() - 1,
        });
    }
    ds.require_both_classes()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| run_benchmark_inner(ds, config))
}

fn run_benchmark_inner(ds: &LabeledDataset, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    let kinds = &config.kinds;
    let opts = &config.fit;

    let tuning = cv_data(ds, config)?;
    let mut cv_results: Vec<Option<CvResult>> = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        match &tuning {
            Some(cv_ds) => {
                info!("tuning {kind} on {} points", cv_ds.len());
                cv_results.push(Some(cross_validate(
                    cv_ds,
                    kind,
                    config.grid(kind)?,
                    config.cv_folds,
                    config.base_seed,
                    opts,
                )?));
            }
            None => cv_results.push(None),
        }
    }

    let run_seeds: Vec<u64> = (1..=config.runs).map(|r| config.run_seed(r)).collect();
    info!("running {} splits of {} training points", config.runs, config.train_size);
    // results[run][kind] = (hyper, auc)
    let results: Vec<Vec<(HyperParams, f64)>> = run_seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| {
            let split = stratified_split(ds, config.train_size, seed)?;
            let (tr, te) = (ds.subset(&split.train), ds.subset(&split.rest));
            kinds
                .iter()
                .zip(&cv_results)
                .map(|(&kind, cv)| {
                    let hyper = match cv {
                        Some(cv) => cv.best,
                        None => cross_validate(&tr, kind, config.grid(kind)?, config.cv_folds, seed, opts)?.best,
                    };
                    let auc = fit(kind, &tr, &hyper, opts)?.auc(&te, opts.tie_policy)?;
                    Ok((hyper, auc))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.context(format!("run {} (seed {seed})", r + 1)))
        })
        .collect::<Result<Vec<_>>>()?;

    let seeds = SeedRecord {
        base_seed: config.base_seed,
        cv_seed: config.base_seed,
        run_seeds,
    };
    let mut reports = Vec::with_capacity(kinds.len());
    for (ki, (&kind, cv)) in kinds.iter().zip(cv_results).enumerate() {
        let aucs: Vec<f64> = results.iter().map(|row| row[ki].1).collect();
        let (chosen, per_run) = match &cv {
            Some(cv) => (Some(cv.best), None),
            None => (None, Some(results.iter().map(|row| row[ki].0).collect())),
        };
        reports.push(ExperimentReport::build(config, kind, chosen, per_run, cv, aucs, seeds.clone())?);
    }

    let mut relative_differences = Vec::new();
    for robust in reports.iter().filter(|r| r.model_kind.is_robust()) {
        for bench in reports.iter().filter(|r| !r.model_kind.is_robust()) {
            relative_differences.push(RelativeDifferenceEntry {
                robust: robust.model_kind,
                benchmark: bench.model_kind,
                mean: relative_difference(robust.mean, bench.mean).ok(),
                worst_k_mean: relative_difference(robust.worst_k_mean, bench.worst_k_mean).ok(),
            });
        }
    }

    Ok(BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset_name: config.dataset_name.clone(),
        n_points: ds.len(),
        n_features: ds.dim(),
        class_counts: ds.class_counts(),
        std_definition: "sample (divisor R - 1)".into(),
        reports,
        relative_differences,
        config_echo: config.clone(),
    })
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// One row per (model, run).
pub fn benchmark_csv(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: "<benchmark csv>".into(),
        message: e.to_string(),
    };
    w.write_record(["dataset", "model", "run", "seed", "c", "epsilon", "auc"])
        .map_err(csv_err)?;
    for r in &report.reports {
        for (i, auc) in r.run_aucs.iter().enumerate() {
            let hyper = match (&r.chosen_hyper, &r.run_hypers) {
                (Some(h), _) => *h,
                (None, Some(hs)) => hs[i],
                (None, None) => unreachable!("a report always records its hyperparameters"),
            };
            w.write_record([
                report.dataset_name.clone(),
                r.model_kind.cli_name().to_string(),
                (i + 1).to_string(),
                r.seeds.run_seeds[i].to_string(),
                hyper.c.to_string(),
                hyper.epsilon.to_string(),
                auc.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv {
        path: "<benchmark csv>".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{:.2}%", 100.0 * v))
}

/// Markdown summary: mean and worst-k rows, one column per model and one per
/// (robust, benchmark) relative difference.
pub fn benchmark_markdown(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let k = report.reports.first().map_or(0, |r| r.worst_k);
    let mut header = vec!["Dataset".to_string(), "Statistic".to_string()];
    header.extend(report.reports.iter().map(|r| r.model_kind.display_name().to_string()));
    header.extend(report.relative_differences.iter().map(|d| {
        format!("R. Diff. {} vs {}", d.robust.display_name(), d.benchmark.display_name())
    }));
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    let rows: [(String, fn(&ExperimentReport) -> (f64, f64), fn(&RelativeDifferenceEntry) -> Option<f64>); 2] = [
        ("Average".to_string(), |r| (r.mean, r.std), |d| d.mean),
        (format!("Worst {k}"), |r| (r.worst_k_mean, r.worst_k_std), |d| d.worst_k_mean),
    ];
    for (label, stat, diff) in rows {
        let mut cells = vec![report.dataset_name.clone(), label];
        cells.extend(report.reports.iter().map(|r| {
            let (m, s) = stat(r);
            format!("{m:.4} ± {s:.4}")
        }));
        cells.extend(report.relative_differences.iter().map(|d| percent(diff(d))));
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out
}
