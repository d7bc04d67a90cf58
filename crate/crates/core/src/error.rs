//! Error type shared by all modules, with a coarse kind used for CLI exit
//! codes and FFI status codes.

use thiserror::Error;

/// Coarse error classification: domain errors exit with 2, numerical
/// non-convergence with 3, I/O with 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Domain,
    NonConvergent,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    /// Exponent outside (1, inf) or non-finite.
    #[error("invalid exponent p = {0}: require 1 < p < inf")]
    InvalidExponent(f64),

    /// Exponent so close to 1 that the constant degenerates.
    #[error("exponent p = {0} is within 1e-9 of 1: C_p degenerates")]
    DegenerateExponent(f64),

    /// Generic precondition violation with context.
    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature, bisection, or iteration budget exhausted without
    /// reaching the requested accuracy.
    #[error("did not converge: {0}")]
    NonConvergent(String),

    /// Orbit closure not found within the search horizon.
    #[error("no period found within T_max = {t_max}")]
    NoPeriodFound { t_max: f64 },

    /// Integration produced a non-finite state.
    #[error("non-finite state at integration step {step}")]
    NonFiniteState { step: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidExponent(_)
            | Error::DegenerateExponent(_)
            | Error::Domain(_)
            | Error::Parse(_) => ErrorKind::Domain,
            Error::NonConvergent(_) | Error::NoPeriodFound { .. } | Error::NonFiniteState { .. } => {
                ErrorKind::NonConvergent
            }
            Error::Io(_) => ErrorKind::Io,
        }
    }

    /// Process exit code documented for the CLI: 2 domain, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Domain => 2,
            ErrorKind::NonConvergent => 3,
            ErrorKind::Io => 4,
        }
    }
}
