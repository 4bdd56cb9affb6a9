//! Labeled datasets: CSV loading, z-score standardization and seeded,
//! stratified partitioning.
//!
//! All randomness flows through [`seeded_rng`], a ChaCha8 stream cipher
//! generator seeded from a `u64`. Its output is specified independently of
//! platform and word size, so a split made with a given seed is identical
//! everywhere.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label, stored as `+1` / `-1` on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Label> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::InvalidDataset(format!(
                "label must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// The generator behind every split and shuffle.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Feature matrix (row-major, `n x d`) with one label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<Label>,
    dim: usize,
    feature_names: Option<Vec<String>>,
}

impl LabeledDataset {
    /// Builds a dataset from row vectors, validating shape and finiteness.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} features, expected {dim}",
                r.len()
            )));
        }
        let features = rows.into_iter().flatten().collect();
        Self::from_flat(features, dim, labels)
    }

    pub fn from_flat(features: Vec<f64>, dim: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if dim == 0 {
            return Err(Error::InvalidDataset("at least one feature is required".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values do not form {} rows of {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, feature {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(LabeledDataset {
            features,
            labels,
            dim,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|l| l.is_positive()).count();
        (pos, self.labels.len() - pos)
    }

    /// Row indices of each class, ascending.
    pub fn class_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            if l.is_positive() {
                pos.push(i);
            } else {
                neg.push(i);
            }
        }
        (pos, neg)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        match self.class_counts() {
            (0, _) => Err(Error::EmptyClass(1)),
            (_, 0) => Err(Error::EmptyClass(-1)),
            _ => Ok(()),
        }
    }

    /// New dataset made of the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        LabeledDataset {
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Reads a headered CSV file. Every column other than `label_column` is a
/// feature; rows whose label equals `positive_label` become positives.
pub fn load_csv(path: &Path, label_column: &str, positive_label: &str) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader.headers().map_err(csv_err)?.clone();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if names.is_empty() {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = r + 1;
        if record.len() != header.len() {
            return Err(Error::InvalidDataset(format!(
                "row {row} has {} cells, header has {}",
                record.len(),
                header.len()
            )));
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::BadCell {
                    row,
                    column: header[c].to_string(),
                    value: cell.to_string(),
                })?;
            features.push(value);
        }
        labels.push(if &record[label_idx] == positive_label {
            Label::Positive
        } else {
            Label::Negative
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    LabeledDataset::from_flat(features, names.len(), labels)?.with_feature_names(names)
}

/// Per-feature affine map `x -> (x - shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn identity(dim: usize) -> Self {
        Scaler {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn inverse_row(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z.len())?;
        Ok(z.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Population mean and standard deviation per feature. A feature whose
/// spread is zero (up to rounding) gets scale 1.
pub fn fit_standardizer(train: &LabeledDataset) -> Scaler {
    let n = train.len() as f64;
    let d = train.dim();
    let mut shift = vec![0.0; d];
    for row in train.rows() {
        for (m, v) in shift.iter_mut().zip(row) {
            *m += v;
        }
    }
    shift.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for row in train.rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&shift) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .iter()
        .zip(&shift)
        .map(|(s, m)| {
            let sd = (s / n).sqrt();
            if sd <= 1e-12 * m.abs().max(1.0) {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Scaler { shift, scale }
}

pub fn apply_standardizer(scaler: &Scaler, ds: &LabeledDataset) -> Result<LabeledDataset> {
    scaler.check_dim(ds.dim())?;
    let features = ds
        .features
        .chunks_exact(ds.dim)
        .flat_map(|row| {
            row.iter()
                .zip(scaler.shift.iter().zip(&scaler.scale))
                .map(|(v, (m, s))| (v - m) / s)
        })
        .collect();
    Ok(LabeledDataset {
        features,
        labels: ds.labels.clone(),
        dim: ds.dim,
        feature_names: ds.feature_names.clone(),
    })
}

/// A train/rest partition expressed as ascending row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub rest: Vec<usize>,
}

fn round_half_away(x: f64) -> usize {
    // f64::round already rounds half away from zero
    x.round().max(0.0) as usize
}

/// Per-class training counts `(positives, negatives)` for a stratified
/// sample of `train_size` points.
pub fn stratified_counts(n_pos: usize, n_neg: usize, train_size: usize) -> Result<(usize, usize)> {
    let n = n_pos + n_neg;
    if n_pos == 0 {
        return Err(Error::EmptyClass(1));
    }
    if n_neg == 0 {
        return Err(Error::EmptyClass(-1));
    }
    if train_size > n {
        return Err(Error::TooManyRequested {
            requested: train_size,
            available: n,
        });
    }
    if train_size < 2 {
        return Err(Error::InvalidArgument(
            "a stratified sample needs at least 2 points".into(),
        ));
    }
    let mut pos = round_half_away(train_size as f64 * n_pos as f64 / n as f64);
    let mut neg = round_half_away(train_size as f64 * n_neg as f64 / n as f64);
    // fix the larger class so that the counts add up
    if n_pos > n_neg {
        pos = train_size.saturating_sub(neg);
    } else {
        neg = train_size.saturating_sub(pos);
    }
    if pos == 0 {
        pos = 1;
        neg = train_size - 1;
    } else if neg == 0 {
        neg = 1;
        pos = train_size - 1;
    }
    // respect class availability
    if pos > n_pos {
        neg += pos - n_pos;
        pos = n_pos;
    }
    if neg > n_neg {
        pos += neg - n_neg;
        neg = n_neg;
    }
    Ok((pos, neg))
}

/// Stratified train/rest split, returned as row indices.
pub fn stratified_split(ds: &LabeledDataset, train_size: usize, seed: u64) -> Result<Split> {
    let (mut pos, mut neg) = ds.class_indices();
    let (k_pos, k_neg) = stratified_counts(pos.len(), neg.len(), train_size)?;
    let mut rng = seeded_rng(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut train: Vec<usize> = pos[..k_pos].iter().chain(&neg[..k_neg]).copied().collect();
    train.sort_unstable();
    let mut in_train = vec![false; ds.len()];
    train.iter().for_each(|&i| in_train[i] = true);
    let rest = (0..ds.len()).filter(|&i| !in_train[i]).collect();
    Ok(Split { train, rest })
}

/// Stratified sample of `train_size` points and its complement.
pub fn stratified_sample(
    ds: &LabeledDataset,
    train_size: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let split = stratified_split(ds, train_size, seed)?;
    Ok((ds.subset(&split.train), ds.subset(&split.rest)))
}

/// One cross-validation fold as row indices into the source dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold partition. Each class is shuffled, the shuffled
/// positives and negatives are laid end to end, and position `p` of that
/// sequence goes to fold `p mod k`.
pub fn k_fold_split(ds: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if k > ds.len() {
        return Err(Error::TooManyRequested {
            requested: k,
            available: ds.len(),
        });
    }
    let (mut pos, mut neg) = ds.class_indices();
    if pos.len() < k {
        return Err(Error::InvalidArgument(format!(
            "positive class has {} points, fewer than k = {k}",
            pos.len()
        )));
    }
    if neg.len() < k {
        return Err(Error::InvalidArgument(format!(
            "negative class has {} points, fewer than k = {k}",
            neg.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold_of = vec![0usize; ds.len()];
    for (p, &i) in pos.iter().chain(&neg).enumerate() {
        fold_of[i] = p % k;
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train) = (0..ds.len()).partition(|&i| fold_of[i] == f);
            Fold { train, validation }
        })
        .collect())
}
