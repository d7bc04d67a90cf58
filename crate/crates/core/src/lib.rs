//! Numerical toolkit for minimal-period lower bounds of Lipschitz ODEs in
//! `l^p(R^n)` and finite-atom `L^p(M, mu)` spaces.
//!
//! The crate computes the sharp generalized Wirtinger constant `C_p`, checks
//! the associated inequalities on discretized periodic functions and simulated
//! orbits, and searches Fourier-parameterized closed curves for small
//! `T * L` products that bracket the theoretical lower bounds from above.
//!
//! Modules map onto the main functional areas:
//!
//! * [`constants`] — `C_p`, its reciprocal, the supercritical `p`-range where
//!   `C_p^{-1} > 6`, conjugate symmetry, and the equivalent-norm bound.
//! * [`pfunc`] — uniformly sampled periodic grid functions, Wirtinger and
//!   double-integral inequality checks, discrete extremal search.
//! * [`orbits`] — built-in Lipschitz fields, fixed-step integration, period
//!   detection, empirical Lipschitz estimation, orbit certificates.
//! * [`optimizer`] — Fourier curve search minimizing the restricted `T * L`
//!   product.

pub mod constants;
pub mod error;
pub mod optimizer;
pub mod orbits;
pub mod pfunc;
pub(crate) mod util;

pub use error::Error;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Tool version string embedded in every output artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Effective worker count for internal fan-out.
///
/// `PERIODBOUNDS_THREADS` caps the count; the default is the machine's
/// available parallelism. Results never depend on the worker count.
pub fn effective_workers() -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("PERIODBOUNDS_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n.min(available),
            _ => available,
        },
        Err(_) => available,
    }
}
