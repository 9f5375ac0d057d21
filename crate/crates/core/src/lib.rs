//! Simulation and estimation toolkit for empirical processes of extreme-value
//! cluster functionals under weak dependence.
//!
//! The pipeline runs from [`processes`] (seeded generators) through
//! [`normalize`] (threshold normalization), [`clusters`] and [`empirical`]
//! (blocks, cluster functionals and `Z_n`) to [`extremogram`] (estimator,
//! decomposition and closed forms) and [`montecarlo`] (replicated
//! experiments with bands and normality diagnostics).

pub mod cli;
pub mod clusters;
pub mod config;
pub mod diagnostics;
pub mod empirical;
pub mod error;
pub mod extremogram;
pub mod montecarlo;
pub mod normalize;
pub mod output;
pub mod processes;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
