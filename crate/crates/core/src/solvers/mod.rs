//! Optimization engines: the first-order method used for training and small
//! exact LP/QP solvers used as reference oracles.

pub mod lp;
pub mod qp;
pub mod subgradient;

pub use lp::{solve_lp, KktResiduals, LpProblem, LpSolution, LpStatus, Objective, RowSense};
pub use qp::{solve_qp, QpProblem, QpResiduals, QpSolution};
pub use subgradient::{minimize_subgradient, StepRule, StopReason, SubgradientConfig, SubgradientResult};
