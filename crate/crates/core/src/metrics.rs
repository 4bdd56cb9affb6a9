//! AUC in its pairwise (Wilcoxon-Mann-Whitney) form, ROC curves and the
//! pairwise hinge surrogate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::pairing::{Atom, AtomSet};

/// How a tied positive/negative pair is credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// A tie counts as a correctly ranked pair (`f(x+) >= f(x-)`).
    #[default]
    CountAsSuccess,
    /// A tie counts one half.
    HalfCredit,
}

impl TiePolicy {
    /// Credit of a tie in half units.
    fn tie_halves(self) -> u64 {
        match self {
            TiePolicy::CountAsSuccess => 2,
            TiePolicy::HalfCredit => 1,
        }
    }
}

fn check_scores(scores: &[f64], class: i8) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyClass(class));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    Ok(())
}

/// Fraction of (positive, negative) pairs ranked correctly.
///
/// Runs in `O((n+ + n-) log n-)`: negatives are sorted once and each positive
/// locates its strict and tied counts by binary search. The count is kept in
/// half units so the result is the exact pair ratio.
pub fn auc_wmw(pos_scores: &[f64], neg_scores: &[f64], policy: TiePolicy) -> Result<f64> {
    check_scores(pos_scores, 1)?;
    check_scores(neg_scores, -1)?;
    let mut neg = neg_scores.to_vec();
    neg.sort_by(f64::total_cmp);
    let halves: u64 = pos_scores
        .iter()
        .map(|&p| {
            let below = neg.partition_point(|&n| n < p) as u64;
            let not_above = neg.partition_point(|&n| n <= p) as u64;
            2 * below + policy.tie_halves() * (not_above - below)
        })
        .sum();
    let pairs = (pos_scores.len() * neg_scores.len()) as f64;
    Ok((halves as f64 / 2.0) / pairs)
}

/// Splits `scores` by label and computes [`auc_wmw`].
pub fn auc_labeled(scores: &[f64], labels: &[Label], policy: TiePolicy) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let (pos, neg): (Vec<_>, Vec<_>) = scores
        .iter()
        .zip(labels)
        .partition(|(_, l)| l.is_positive());
    let pos: Vec<f64> = pos.into_iter().map(|(s, _)| *s).collect();
    let neg: Vec<f64> = neg.into_iter().map(|(s, _)| *s).collect();
    auc_wmw(&pos, &neg, policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    /// Two-column CSV with a `fpr,tpr` header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "fpr,tpr")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.fpr, p.tpr)?;
        }
        Ok(())
    }
}

/// ROC curve with one step per distinct score, scanned from the highest
/// threshold down. Equal scores move together, producing a diagonal segment.
pub fn roc_curve(scores: &[f64], labels: &[Label]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::EmptyClass(1));
    }
    if n_neg == 0 {
        return Err(Error::EmptyClass(-1));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let threshold = scores[order[k]];
        while k < order.len() && scores[order[k]] == threshold {
            if labels[order[k]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(RocCurve { points })
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `max(0, 1 - (w . x+ - w . x-))`.
pub fn hinge_pair_loss(w: &[f64], atom: &Atom) -> Result<f64> {
    if w.len() != atom.dim() {
        return Err(Error::DimensionMismatch {
            expected: atom.dim(),
            got: w.len(),
        });
    }
    Ok((1.0 - (dot(w, &atom.x_plus) - dot(w, &atom.x_minus))).max(0.0))
}

/// Mean pairwise hinge loss over all atoms.
pub fn empirical_pair_risk(w: &[f64], atoms: &AtomSet) -> Result<f64> {
    let total = atoms
        .atoms()
        .iter()
        .map(|a| hinge_pair_loss(w, a))
        .sum::<Result<f64>>()?;
    Ok(total / atoms.m() as f64)
}
