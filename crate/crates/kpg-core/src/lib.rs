//! Non-parametric policy gradient toolkit for continuing-task control.
//!
//! Policies are Gaussian with a mean function represented as a kernel
//! expansion over visited states. Training is fully online: stochastic
//! gradients are sampled with geometric horizons, applied with a constant
//! step size, and the dictionary is compressed after every update by
//! kernel orthogonal matching pursuit so the model order stays bounded.
//!
//! Module map:
//! - [`rkhs`]: kernel, function expansions, Gram algebra.
//! - [`komp`]: dictionary pruning under a compression budget.
//! - [`mdp`]: environment trait and the Gaussian policy.
//! - [`envs`]: bundled environments and the chain-MDP exact solver.
//! - [`pg`]: gradient estimation and the online trainer.
//! - [`bounds`]: closed-form theoretical constants and admissibility checks.
//! - [`diagnostics`]: Monte-Carlo value/gradient estimators and analytics.

pub mod bounds;
pub mod diagnostics;
pub mod envs;
pub mod komp;
pub mod mdp;
pub mod pg;
pub mod rkhs;
mod util;

pub use util::derived_rng;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("kernel specs differ: {0}")]
    SpecMismatch(&'static str),

    #[error("index {index} out of range for model order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible configuration: {0}")]
    InfeasibleConfiguration(String),

    #[error(
        "model order {order} exceeded guard {guard}; increase the compression \
         budget (larger K or eta)"
    )]
    ModelOrderExceeded { order: usize, guard: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
