//! Linear binary classifiers trained for AUC: a soft-margin SVM, deterministic
//! pairwise-hinge AUC maximization, and two distributionally robust variants
//! whose ambiguity sets are Kantorovich balls around the empirical pair
//! distribution (fixed support and variable support).
//!
//! The crate also carries the evaluation protocol used to compare them:
//! repeated small stratified training sets, grid-search cross-validation and
//! worst-case AUC statistics.

pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod models;
pub mod pairing;
pub mod solvers;

pub use error::{Error, Result};
