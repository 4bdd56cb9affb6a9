//! Command-line front end. Every command merges an optional JSON config file
//! with flags (flags win), validates the result completely and only then
//! reads data.
//!
//! Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
//! configuration error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, stratified_sample, LabeledDataset};
use crate::error::{Error, Result};
use crate::experiments::{
    benchmark_csv, benchmark_markdown, cross_validate, fit, run_benchmark, to_json, write_atomic, BenchmarkConfig,
    CvScope, FitOptions, GridSpec,
};
use crate::metrics::{auc_labeled, empirical_pair_risk, roc_curve, TiePolicy};
use crate::models::{
    worst_case_distribution, HyperParams, ModelDocument, ModelKind, ORACLE_ATOM_CAP,
};
use crate::pairing::{build_atoms, distance_matrix};
use crate::solvers::SubgradientConfig;

pub const LOG_ENV: &str = "DR_AUC_LOG";

#[derive(Debug, Parser)]
#[command(name = "drauc", version, about = "Distributionally robust AUC maximization")]
pub struct Cli {
    /// Worker threads for cross-validation and benchmark runs.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model with fixed hyperparameters.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset.
    Eval(EvalArgs),
    /// Worst-case distribution over the fixed-support ambiguity set.
    WorstCase(WorstCaseArgs),
    /// Repeated small-sample benchmark of several models.
    Benchmark(BenchmarkArgs),
    /// Grid-search cross-validation for one model.
    Cv(CvArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieArg {
    CountAsSuccess,
    HalfCredit,
}

impl From<TieArg> for TiePolicy {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::CountAsSuccess => TiePolicy::CountAsSuccess,
            TieArg::HalfCredit => TiePolicy::HalfCredit,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    TrainSize,
    Full,
    PerRun,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the label column.
    #[arg(long)]
    pub label: Option<String>,
    /// Label value of the positive class.
    #[arg(long)]
    pub positive: Option<String>,
    /// Name used in reports (defaults to the data file stem).
    #[arg(long)]
    pub dataset_name: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Z-score features using training statistics.
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long, value_enum)]
    pub tie_policy: Option<TieArg>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub initial_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: DataArgs,
    /// svm, d-auc, dr-auc-f or dr-auc-v.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Train on a stratified sample of this many points (drawn with --seed).
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub positive: String,
    /// Write the ROC curve as CSV.
    #[arg(long)]
    pub roc: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorstCaseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub positive: String,
    /// Ambiguity radius; defaults to the model's own epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Use a stratified sample of this many points (drawn with --seed).
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub common: DataArgs,
    /// Comma-separated model kinds.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub worst_k: Option<usize>,
    /// Where hyperparameters are tuned.
    #[arg(long, value_enum)]
    pub cv_scope: Option<ScopeArg>,
    /// Tune on a stratified sample of this size (overrides --cv-scope).
    #[arg(long)]
    pub cv_sample: Option<usize>,
    /// Directory for benchmark.json, benchmark.csv and benchmark.md.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: DataArgs,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub c_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon_values: Option<Vec<f64>>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Contents of a `--config` file. Every key is optional; unknown keys are
/// rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub label: Option<String>,
    pub positive: Option<String>,
    pub dataset_name: Option<String>,
    pub model: Option<ModelKind>,
    pub models: Option<Vec<ModelKind>>,
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub grids: Option<BTreeMap<ModelKind, GridSpec>>,
    pub runs: Option<usize>,
    pub train_size: Option<usize>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub worst_k: Option<usize>,
    pub cv_scope: Option<CvScope>,
    pub standardize: Option<bool>,
    pub tie_policy: Option<TiePolicy>,
    pub solver: Option<SubgradientConfig>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    fn merge_common(&mut self, a: &DataArgs) {
        fn set<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                slot.clone_from(v);
            }
        }
        set(&mut self.data, &a.data);
        set(&mut self.label, &a.label);
        set(&mut self.positive, &a.positive);
        set(&mut self.dataset_name, &a.dataset_name);
        set(&mut self.seed, &a.seed);
        set(&mut self.standardize, &a.standardize);
        if let Some(t) = a.tie_policy {
            self.tie_policy = Some(t.into());
        }
        if a.max_iterations.is_some() || a.patience.is_some() || a.tolerance.is_some() || a.initial_step.is_some() {
            let mut s = self.solver.clone().unwrap_or_default();
            if let Some(v) = a.max_iterations {
                s.max_iterations = v;
            }
            if let Some(v) = a.patience {
                s.patience = v;
            }
            if let Some(v) = a.tolerance {
                s.relative_tolerance = v;
            }
            if let Some(v) = a.initial_step {
                s.initial_step = v;
            }
            self.solver = Some(s);
        }
    }

    fn fit_options(&self) -> Result<FitOptions> {
        let defaults = FitOptions::default();
        let opts = FitOptions {
            standardize: self.standardize.unwrap_or(defaults.standardize),
            tie_policy: self.tie_policy.unwrap_or(defaults.tie_policy),
            solver: self.solver.clone().unwrap_or(defaults.solver),
        };
        opts.solver.validate()?;
        Ok(opts)
    }

    fn data_source(&self) -> Result<DataSource> {
        let path = self
            .data
            .clone()
            .ok_or_else(|| Error::Config("a data file is required (--data)".into()))?;
        let label = self
            .label
            .clone()
            .ok_or_else(|| Error::Config("the label column is required (--label)".into()))?;
        let positive = self
            .positive
            .clone()
            .ok_or_else(|| Error::Config("the positive label is required (--positive)".into()))?;
        DataSource::new(path, label, positive, self.dataset_name.clone())
    }
}

/// A validated reference to a labeled CSV file.
#[derive(Debug, Clone)]
struct DataSource {
    path: PathBuf,
    label: String,
    positive: String,
    name: String,
}

impl DataSource {
    fn new(path: PathBuf, label: String, positive: String, name: Option<String>) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::Config(format!("data file {} does not exist", path.display())));
        }
        let name = name.unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        });
        Ok(DataSource {
            path,
            label,
            positive,
            name,
        })
    }

    fn load(&self) -> Result<LabeledDataset> {
        load_csv(&self.path, &self.label, &self.positive)
    }
}

fn parse_kind(s: &str) -> Result<ModelKind> {
    s.parse()
}

fn require_out(out: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let out = out.ok_or_else(|| Error::Config(format!("an output path is required for {what} (--out)")))?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !dir.is_dir() {
            return Err(Error::Config(format!("output directory {} does not exist", dir.display())));
        }
    }
    Ok(out)
}

fn load_model(path: &Path) -> Result<ModelDocument> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read model {}: {e}", path.display())))?;
    ModelDocument::from_json(&text).map_err(|e| Error::Config(format!("invalid model {}: {e}", path.display())))
}

/// Sets up logging from `DR_AUC_LOG` (error, info or debug; default error).
pub fn init_logging() -> Result<()> {
    let level = match std::env::var(LOG_ENV) {
        Ok(v) if v.is_empty() => "error".to_string(),
        Ok(v) => v,
        Err(_) => "error".to_string(),
    };
    if !matches!(level.as_str(), "error" | "info" | "debug") {
        return Err(Error::Config(format!(
            "{LOG_ENV} must be one of error, info, debug; got `{level}`"
        )));
    }
    let _ = env_logger::Builder::new()
        .parse_filters(&format!("drauc={level}"))
        .format_timestamp(None)
        .try_init();
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match init_logging().and_then(|_| run(cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if cli.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::WorstCase(a) => cmd_worst_case(a),
        Command::Benchmark(a) => cmd_benchmark(a, cli.jobs),
        Command::Cv(a) => cmd_cv(a, cli.jobs),
    }
}

fn base_config(common: &DataArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.merge_common(common);
    Ok(cfg)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    if let Some(m) = &a.model {
        cfg.model = Some(parse_kind(m)?);
    }
    cfg.c = a.c.or(cfg.c);
    cfg.epsilon = a.epsilon.or(cfg.epsilon);
    cfg.train_size = a.train_size.or(cfg.train_size);
    cfg.out = a.out.or(cfg.out);

    let kind = cfg.model.ok_or_else(|| Error::Config("a model kind is required (--model)".into()))?;
    let c = cfg.c.ok_or_else(|| Error::Config("C is required (--c)".into()))?;
    let epsilon = match (kind.is_robust(), cfg.epsilon) {
        (true, None) => return Err(Error::Config(format!("{kind} needs --epsilon"))),
        (_, e) => e.unwrap_or(0.0),
    };
    let hyper = HyperParams::new(c, epsilon);
    hyper.validate_for(kind)?;
    let opts = cfg.fit_options()?;
    let source = cfg.data_source()?;
    let out = require_out(cfg.out.clone(), "train")?;
    if cfg.train_size == Some(0) {
        return Err(Error::Config("train_size must be positive".into()));
    }

    let ds = source.load()?;
    let train_ds = match cfg.train_size {
        Some(n) if n < ds.len() => stratified_sample(&ds, n, cfg.seed.unwrap_or(0))?.0,
        _ => ds,
    };
    info!("training {kind} on {} points", train_ds.len());
    let fitted = fit(kind, &train_ds, &hyper, &opts)?;
    let auc = fitted.auc(&train_ds, opts.tie_policy)?;
    let objective = fitted.model.training_meta.final_objective;
    write_atomic(&out, fitted.into_document().to_json()?.as_bytes())?;
    println!("model: {kind}");
    println!("final objective: {objective}");
    println!("training AUC: {auc}");
    println!("written: {}", out.display());
    Ok(())
}

fn check_roc_path(roc: &Option<PathBuf>) -> Result<()> {
    if let Some(p) = roc {
        require_out(Some(p.clone()), "the ROC curve")?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let doc = load_model(&a.model)?;
    let source = DataSource::new(a.data, a.label, a.positive, None)?;
    check_roc_path(&a.roc)?;

    let ds = source.load()?;
    let scores: Vec<f64> = ds.rows().map(|x| doc.score_raw(x)).collect::<Result<_>>()?;
    let full = auc_labeled(&scores, ds.labels(), TiePolicy::CountAsSuccess)?;
    let half = auc_labeled(&scores, ds.labels(), TiePolicy::HalfCredit)?;
    println!("AUC (count_as_success): {full}");
    println!("AUC (half_credit): {half}");
    if let Some(path) = a.roc {
        let curve = roc_curve(&scores, ds.labels())?;
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        write_atomic(&path, &buf)?;
        println!("written: {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct AtomMass {
    atom: usize,
    positive_index: usize,
    negative_index: usize,
    hinge: f64,
    probability: f64,
}

#[derive(Debug, Serialize)]
struct WorstCaseReport {
    schema_version: u32,
    model_kind: ModelKind,
    epsilon: f64,
    atoms: usize,
    /// Mean pairwise hinge loss under the empirical distribution.
    empirical_loss: f64,
    worst_case_loss: f64,
    /// `sum d_ij k_ij` of the optimal plan.
    transport_cost: f64,
    /// Mass moved away from its own atom.
    moved_mass: f64,
    /// Atoms carrying more than their empirical share, largest first.
    heaviest_atoms: Vec<AtomMass>,
    p: Vec<f64>,
}

fn cmd_worst_case(a: WorstCaseArgs) -> Result<()> {
    let doc = load_model(&a.model)?;
    let source = DataSource::new(a.data, a.label, a.positive, None)?;
    let out = require_out(Some(a.out), "worst-case")?;
    let epsilon = a.epsilon.unwrap_or(doc.hyper.epsilon);
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if a.sample.is_some_and(|n| n < 2) {
        return Err(Error::Config("--sample must be at least 2".into()));
    }

    let ds = source.load()?;
    let ds = match a.sample {
        Some(n) if n < ds.len() => stratified_sample(&ds, n, a.seed)?.0,
        _ => ds,
    };
    let ds = match &doc.standardizer {
        Some(s) => crate::data::apply_standardizer(s, &ds)?,
        None => ds,
    };
    let (n_pos, n_neg) = ds.class_counts();
    if n_pos * n_neg > ORACLE_ATOM_CAP {
        return Err(Error::AtomCapExceeded {
            count: n_pos * n_neg,
            cap: ORACLE_ATOM_CAP,
        }
        .context("use --sample to reduce the number of points"));
    }
    let atoms = build_atoms(&ds)?;
    let dist = distance_matrix(&atoms);
    let model = doc.model();
    let (plan, value) = worst_case_distribution(&model.weights, &atoms, &dist, epsilon)?;
    let h = crate::models::atom_hinges(&model.weights, &atoms)?;
    let m = atoms.m();
    let share = 1.0 / m as f64;
    let mut heavy: Vec<AtomMass> = (0..m)
        .filter(|&j| plan.p[j] > share * (1.0 + 1e-9))
        .map(|j| AtomMass {
            atom: j,
            positive_index: atoms.get(j).i_index,
            negative_index: atoms.get(j).j_index,
            hinge: h[j],
            probability: plan.p[j],
        })
        .collect();
    heavy.sort_by(|x, y| y.probability.total_cmp(&x.probability).then(x.atom.cmp(&y.atom)));
    let report = WorstCaseReport {
        schema_version: crate::experiments::REPORT_SCHEMA_VERSION,
        model_kind: model.kind,
        epsilon,
        atoms: m,
        empirical_loss: empirical_pair_risk(&model.weights, &atoms)?,
        worst_case_loss: value,
        transport_cost: plan.cost(&dist),
        moved_mass: (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| plan.get(i, j)).sum(),
        heaviest_atoms: heavy,
        p: plan.p,
    };
    write_atomic(&out, to_json(&report)?.as_bytes())?;
    println!("atoms: {m}");
    println!("empirical loss: {}", report.empirical_loss);
    println!("worst-case loss: {value}");
    println!("written: {}", out.display());
    Ok(())
}

fn cmd_benchmark(a: BenchmarkArgs, jobs: usize) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    if let Some(ms) = &a.models {
        cfg.models = Some(ms.iter().map(|m| parse_kind(m)).collect::<Result<_>>()?);
    }
    cfg.runs = a.runs.or(cfg.runs);
    cfg.train_size = a.train_size.or(cfg.train_size);
    cfg.folds = a.folds.or(cfg.folds);
    cfg.worst_k = a.worst_k.or(cfg.worst_k);
    if let Some(s) = a.cv_scope {
        cfg.cv_scope = Some(match s {
            ScopeArg::TrainSize => CvScope::TrainSize,
            ScopeArg::Full => CvScope::Full,
            ScopeArg::PerRun => CvScope::PerRun,
        });
    }
    if let Some(size) = a.cv_sample {
        cfg.cv_scope = Some(CvScope::Sample { size });
    }
    cfg.out_dir = a.out_dir.or(cfg.out_dir);

    let source = cfg.data_source()?;
    let defaults = BenchmarkConfig::default();
    let mut grids = defaults.grids.clone();
    if let Some(g) = &cfg.grids {
        grids.extend(g.iter().map(|(k, v)| (*k, v.clone())));
    }
    let bench = BenchmarkConfig {
        dataset_name: source.name.clone(),
        kinds: cfg.models.clone().unwrap_or(defaults.kinds),
        runs: cfg.runs.unwrap_or(defaults.runs),
        train_size: cfg.train_size.unwrap_or(defaults.train_size),
        base_seed: cfg.seed.unwrap_or(defaults.base_seed),
        cv_folds: cfg.folds.unwrap_or(defaults.cv_folds),
        cv_scope: cfg.cv_scope.unwrap_or(defaults.cv_scope),
        worst_k: cfg.worst_k.unwrap_or(defaults.worst_k),
        grids: grids.into_iter().filter(|(k, _)| cfg.models.as_ref().is_none_or(|ms| ms.contains(k))).collect(),
        fit: cfg.fit_options()?,
    };
    bench.validate()?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    if !out_dir.is_dir() {
        return Err(Error::Config(format!("output directory {} does not exist", out_dir.display())));
    }

    let ds = source.load()?;
    let report = run_benchmark(&ds, &bench, jobs)?;
    let md = benchmark_markdown(&report);
    write_atomic(&out_dir.join("benchmark.json"), to_json(&report)?.as_bytes())?;
    write_atomic(&out_dir.join("benchmark.csv"), benchmark_csv(&report)?.as_bytes())?;
    write_atomic(&out_dir.join("benchmark.md"), md.as_bytes())?;
    print!("{md}");
    for r in &report.reports {
        if let Some(h) = r.chosen_hyper {
            println!("{}: C={} epsilon={}", r.model_kind, h.c, h.epsilon);
        }
    }
    println!("written: {}", out_dir.join("benchmark.{json,csv,md}").display());
    Ok(())
}

fn cmd_cv(a: CvArgs, jobs: usize) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    if let Some(m) = &a.model {
        cfg.model = Some(parse_kind(m)?);
    }
    cfg.folds = a.folds.or(cfg.folds);
    cfg.out = a.out.or(cfg.out);
    let kind = cfg.model.ok_or_else(|| Error::Config("a model kind is required (--model)".into()))?;
    let mut grid = cfg
        .grids
        .as_ref()
        .and_then(|g| g.get(&kind).cloned())
        .unwrap_or_else(|| GridSpec::default_for(kind));
    if let Some(cs) = a.c_values {
        grid.c_values = cs;
    }
    if let Some(es) = a.epsilon_values {
        grid.epsilon_values = es;
    }
    grid.validate_for(kind)?;
    let folds = cfg.folds.unwrap_or(5);
    if folds < 2 {
        return Err(Error::Config("--folds must be at least 2".into()));
    }
    let opts = cfg.fit_options()?;
    let source = cfg.data_source()?;
    let out = match cfg.out.clone() {
        Some(p) => Some(require_out(Some(p), "cv")?),
        None => None,
    };

    let ds = source.load()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    let result = pool.install(|| cross_validate(&ds, kind, &grid, folds, cfg.seed.unwrap_or(0), &opts))?;
    for s in &result.scores {
        println!("C={} epsilon={} mean AUC {:.6}", s.hyper.c, s.hyper.epsilon, s.mean_auc);
    }
    println!("selected: C={} epsilon={}", result.best.c, result.best.epsilon);
    if let Some(out) = out {
        write_atomic(&out, to_json(&result)?.as_bytes())?;
        println!("written: {}", out.display());
    }
    Ok(())
}
