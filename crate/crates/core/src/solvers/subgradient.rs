//! Projected subgradient descent with best-iterate tracking.
//!
//! Iterates follow `x <- P(x - eta_k g)` with `eta_k = eta / sqrt(k)`. The
//! restarted rule runs that schedule in stages: when the best value has not
//! improved by `relative_tolerance` for `patience` iterations, the next stage
//! starts again from the best point with `eta` divided by `shrink` and `k`
//! reset to 1. The plain rule stops at the first stall.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    InverseSqrt,
    RestartedInverseSqrt { shrink: f64, max_restarts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgradientConfig {
    pub max_iterations: usize,
    pub initial_step: f64,
    pub step_rule: StepRule,
    pub relative_tolerance: f64,
    pub patience: usize,
}

impl Default for SubgradientConfig {
    fn default() -> Self {
        SubgradientConfig {
            max_iterations: 20_000,
            initial_step: 1.0,
            step_rule: StepRule::RestartedInverseSqrt {
                shrink: 4.0,
                max_restarts: 12,
            },
            relative_tolerance: 1e-6,
            patience: 200,
        }
    }
}

impl SubgradientConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.max_iterations > 0
            && self.initial_step > 0.0
            && self.initial_step.is_finite()
            && self.relative_tolerance > 0.0
            && self.patience > 0;
        let rule_ok = match self.step_rule {
            StepRule::InverseSqrt => true,
            StepRule::RestartedInverseSqrt { shrink, .. } => shrink > 1.0 && shrink.is_finite(),
        };
        if positive && rule_ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid solver configuration: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub stop: StopReason,
    /// Best value after each iteration.
    pub best_history: Vec<f64>,
}

/// Minimizes a convex function given by an oracle that writes a subgradient
/// into its second argument and returns the function value.
///
/// `projection`, when given, maps a point onto the feasible set in place.
/// The returned point is the best iterate seen, never simply the last.
pub fn minimize_subgradient<F>(
    mut oracle: F,
    x0: &[f64],
    projection: Option<&dyn Fn(&mut [f64])>,
    config: &SubgradientConfig,
) -> Result<SubgradientResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    config.validate()?;
    let dim = x0.len();
    let mut x = x0.to_vec();
    if let Some(p) = projection {
        p(&mut x);
    }
    let mut g = vec![0.0; dim];
    let mut best_x = x.clone();
    let mut best = f64::INFINITY;
    let mut anchor = f64::INFINITY;
    let mut stall = 0usize;
    let mut step = config.initial_step;
    let mut k = 0usize;
    let mut restarts = 0usize;
    let mut history = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for it in 1..=config.max_iterations {
        k += 1;
        let f = oracle(&x, &mut g);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(it));
        }
        if f < best {
            best = f;
            best_x.copy_from_slice(&x);
        }
        history.push(best);
        if !anchor.is_finite() || best < anchor - config.relative_tolerance * anchor.abs() {
            anchor = best;
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= config.patience {
            match config.step_rule {
                StepRule::RestartedInverseSqrt {
                    shrink,
                    max_restarts,
                } if restarts < max_restarts => {
                    restarts += 1;
                    step /= shrink;
                    k = 0;
                    stall = 0;
                    anchor = best;
                    x.copy_from_slice(&best_x);
                    continue;
                }
                _ => {
                    stop = StopReason::Stalled;
                    break;
                }
            }
        }
        let eta = step / (k as f64).sqrt();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= eta * gi;
        }
        if let Some(p) = projection {
            p(&mut x);
        }
    }

    Ok(SubgradientResult {
        x: best_x,
        value: best,
        iterations: history.len(),
        restarts,
        stop,
        best_history: history,
    })
}
