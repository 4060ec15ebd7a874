use std::fmt;

use thiserror::Error;

/// A single violated invariant, with the measured magnitude and the bound it broke.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: &'static str,
    pub measured: f64,
    pub bound: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (measured {:.3e}, bound {:.3e})", self.what, self.measured, self.bound)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {}", join(.0))]
    Validation(Vec<Violation>),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    ResourceLimit { dim: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gap {delta} is not an eigenvalue difference of the observable (tolerance {tolerance:.3e})")]
    GapNotFound { delta: f64, tolerance: f64 },

    #[error(
        "spectrum too dense to resolve: a cluster spreads over {spread:.3e}, more than 10x the grouping tolerance {tolerance:.3e}"
    )]
    AmbiguousGaps { spread: f64, tolerance: f64 },

    #[error(
        "truncation too small: weight {weight:.3e} on the top Fock levels of mode {mode} exceeds {bound:.1e}; increase the Fock dimension (currently {dim})"
    )]
    Truncation { mode: usize, weight: f64, bound: f64, dim: usize },

    #[error(
        "quadrature tail estimate {tail:.3e} exceeds {tolerance:.1e}; increase the radial cutoff (currently {radius})"
    )]
    TailBound { tail: f64, tolerance: f64, radius: f64 },

    #[error("integration failed at step {step} (t = {time}): {reason}")]
    Integration { step: usize, time: f64, reason: String },

    #[error("parse error: {0}")]
    Parse(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
