//! Design of randomized estimators of a public discrete variable from noisy
//! sensor measurements, subject to an equivocation (conditional-entropy)
//! constraint on a correlated private variable.
//!
//! The pipeline: a Gaussian sensor model plus a bin partition produce a
//! discrete observation [`prob::Channel`]; an [`estimator::Estimator`] is a
//! column-stochastic randomization over outputs per observation symbol;
//! [`solver`] finds the minimum-error estimator meeting an equivocation floor
//! via projected gradient descent with a dual bisection and KKT certificate;
//! [`perfect`] handles the exact-independence case as a linear program over
//! the null space of the deviation matrix; [`multisensor`] lifts a channel to
//! the count-vector alphabet of several identical sensors; [`experiment`]
//! reproduces the multi-sensor study end to end.

#![forbid(unsafe_code)]
// Indexed loops over several same-shaped tables at once read better here
// than zipped iterator chains.
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod estimator;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod math;
pub mod multisensor;
pub mod perfect;
pub mod prob;
pub mod rng;
pub mod simplex;
pub mod solver;

pub use estimator::{Estimator, PrivacyReport};
pub use prob::{Channel, JointPrior, Partition, SensorModel};

use thiserror::Error;

/// Errors across the estimator-design pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("privacy floor {h0} bits exceeds H(X) = {hx} bits; problem infeasible")]
    InfeasiblePrivacyFloor { h0: f64, hx: f64 },

    #[error("linear program infeasible: {0}")]
    LpInfeasible(String),

    #[error("linear program unbounded")]
    LpUnbounded,

    #[error("iteration limit reached: {0}")]
    IterationLimit(String),

    #[error("count alphabet size {size} exceeds cap {cap}; reduce the sensor count or bins")]
    AlphabetTooLarge { size: usize, cap: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
