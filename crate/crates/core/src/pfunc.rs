//! Discrete T-periodic vector-valued functions on a uniform grid, with
//! lp-in-time norms, the Wirtinger inequality check, the double-integral
//! inequality functional, the shift-difference chain, and a variational
//! search for the discrete Wirtinger extremal.
//!
//! Periodicity is structural: index arithmetic wraps mod N and the endpoint
//! sample is never duplicated. Derivatives are periodic central differences
//! and time quadrature is the uniform trapezoid rule, which on a periodic
//! grid has equal weights. Both choices are second order, which is where
//! the declared discretization tolerance 10/N^2 comes from.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::{compute_cp, PExponent};
use crate::error::Error;
use crate::util::{comp_sum, lp_pow_sum, pow_abs};
use crate::Result;

/// Minimum grid size for a meaningful periodic discretization.
pub const MIN_GRID: usize = 8;
/// Minimum grid size for the extremal search.
pub const MIN_SEARCH_GRID: usize = 64;

/// Discretization tolerance used by every `holds` flag: 10/N^2.
pub fn tol_report(grid_size: usize) -> f64 {
    10.0 / (grid_size as f64 * grid_size as f64)
}

/// A T-periodic function sampled at N uniform points, with values in R^n.
/// Sample k lives at t = k T / N.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGridFunction {
    samples: Vec<f64>, // row-major N x n
    grid_size: usize,
    components: usize,
    period: f64,
}

impl PeriodicGridFunction {
    pub fn new(
        samples: Vec<f64>,
        grid_size: usize,
        components: usize,
        period: f64,
    ) -> Result<Self> {
        if grid_size < MIN_GRID {
            return Err(Error::domain(format!(
                "grid size {grid_size} below minimum {MIN_GRID}"
            )));
        }
        if components == 0 {
            return Err(Error::domain("component count must be at least 1"));
        }
        if samples.len() != grid_size * components {
            return Err(Error::domain(format!(
                "sample buffer has {} entries, expected {} x {}",
                samples.len(),
                grid_size,
                components
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::domain(format!("period {period} must be positive")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("samples contain non-finite values"));
        }
        Ok(Self {
            samples,
            grid_size,
            components,
            period,
        })
    }

    /// Scalar function sampled from a closure of t.
    pub fn from_scalar_fn(
        grid_size: usize,
        period: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let dt = period / grid_size as f64;
        let samples: Vec<f64> = (0..grid_size).map(|k| f(k as f64 * dt)).collect();
        Self::new(samples, grid_size, 1, period)
    }

    /// Vector function sampled from a closure writing one row per call.
    pub fn from_vector_fn(
        grid_size: usize,
        components: usize,
        period: f64,
        f: impl Fn(f64, &mut [f64]),
    ) -> Result<Self> {
        let dt = period / grid_size as f64;
        let mut samples = vec![0.0; grid_size * components];
        for k in 0..grid_size {
            f(k as f64 * dt, &mut samples[k * components..(k + 1) * components]);
        }
        Self::new(samples, grid_size, components, period)
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dt(&self) -> f64 {
        self.period / self.grid_size as f64
    }

    /// Row view of sample k (no wrapping; k < N).
    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k * self.components..(k + 1) * self.components]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Componentwise discrete mean with compensated summation.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.components;
        (0..n)
            .map(|c| {
                comp_sum((0..self.grid_size).map(|k| self.samples[k * n + c]))
                    / self.grid_size as f64
            })
            .collect()
    }

    /// Periodic central difference (u_{k+1} - u_{k-1}) / (2 dt).
    pub fn central_difference(&self) -> PeriodicGridFunction {
        let nn = self.grid_size;
        let n = self.components;
        let inv = 1.0 / (2.0 * self.dt());
        let mut out = vec![0.0; nn * n];
        for k in 0..nn {
            let up = (k + 1) % nn;
            let dn = (k + nn - 1) % nn;
            for c in 0..n {
                out[k * n + c] = (self.samples[up * n + c] - self.samples[dn * n + c]) * inv;
            }
        }
        PeriodicGridFunction {
            samples: out,
            grid_size: nn,
            components: n,
            period: self.period,
        }
    }

    /// sum_k |u_k|_p^p * dt, the p-th power of the time-lp norm.
    pub fn time_lp_pow_sum(&self, p: f64) -> f64 {
        lp_pow_sum(&self.samples, p) * self.dt()
    }

    /// Time-lp norm (sum_k |u_k|_p^p dt)^{1/p} with the spatial lp norm.
    pub fn time_lp_norm(&self, p: f64) -> f64 {
        self.time_lp_pow_sum(p).powf(1.0 / p)
    }

    /// Rotation of the sample array by `shift` grid points.
    pub fn rotate(&self, shift: usize) -> PeriodicGridFunction {
        let nn = self.grid_size;
        let n = self.components;
        let s = shift % nn;
        let mut out = vec![0.0; nn * n];
        for k in 0..nn {
            let src = (k + s) % nn;
            out[k * n..(k + 1) * n].copy_from_slice(self.sample(src));
        }
        PeriodicGridFunction {
            samples: out,
            grid_size: nn,
            components: n,
            period: self.period,
        }
    }

    /// Scalar multiple of the function.
    pub fn scaled(&self, factor: f64) -> PeriodicGridFunction {
        PeriodicGridFunction {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// CSV serialization: a `# T=.. N=.. n=..` metadata line, a header with
    /// the time column first, then one row per sample in round-trip float
    /// notation.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# T={} N={} n={}\n",
            self.period, self.grid_size, self.components
        ));
        out.push('t');
        for c in 0..self.components {
            out.push_str(&format!(",y{c}"));
        }
        out.push('\n');
        let dt = self.dt();
        for k in 0..self.grid_size {
            out.push_str(&format!("{}", k as f64 * dt));
            for c in 0..self.components {
                out.push_str(&format!(",{}", self.samples[k * self.components + c]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`Self::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let meta = lines
            .next()
            .ok_or_else(|| Error::Parse("empty curve file".into()))?;
        if !meta.starts_with('#') {
            return Err(Error::Parse(
                "curve file must start with a `# T=.. N=.. n=..` metadata line".into(),
            ));
        }
        let mut period = None;
        let mut grid = None;
        let mut comps = None;
        for token in meta.trim_start_matches('#').split_whitespace() {
            if let Some(v) = token.strip_prefix("T=") {
                period = Some(v.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
            } else if let Some(v) = token.strip_prefix("N=") {
                grid = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
            } else if let Some(v) = token.strip_prefix("n=") {
                comps = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
            }
        }
        let (period, grid, comps) = match (period, grid, comps) {
            (Some(t), Some(nn), Some(n)) => (t, nn, n),
            _ => return Err(Error::Parse("metadata line missing T=, N= or n=".into())),
        };
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))?;
        if !header.starts_with('t') {
            return Err(Error::Parse("header must start with the time column".into()));
        }
        let mut samples = Vec::with_capacity(grid * comps);
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != comps + 1 {
                return Err(Error::Parse(format!(
                    "row has {} fields, expected {}",
                    fields.len(),
                    comps + 1
                )));
            }
            for field in &fields[1..] {
                samples.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(e.to_string()))?,
                );
            }
        }
        if samples.len() != grid * comps {
            return Err(Error::Parse(format!(
                "expected {} data rows, found {}",
                grid,
                samples.len() / comps.max(1)
            )));
        }
        Self::new(samples, grid, comps, period)
    }
}

/// Outcome of the Wirtinger inequality check on one grid function.
///
/// `holds` uses the scale-free form of the inequality: the discrete
/// Rayleigh quotient may exceed C_p T by at most the factor
/// (1 + tol_report), i.e. lhs <= rhs (1 + tol_report)^p. An absolute
/// slack threshold would depend on the amplitude and period of u, which
/// the inequality itself does not.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WirtingerReport {
    /// Time integral of |u|_X^p.
    pub lhs: f64,
    /// C_p^p T^p times the time integral of |Du|_X^p.
    pub rhs: f64,
    /// rhs - lhs; nonnegative up to discretization error when the
    /// inequality holds.
    pub slack: f64,
    pub holds: bool,
    pub tol_report: f64,
}

/// Subtracts the componentwise mean; idempotent, annihilates constants.
pub fn project_mean_zero(u: &PeriodicGridFunction) -> PeriodicGridFunction {
    let mean = u.mean();
    let n = u.components();
    let mut samples = u.samples().to_vec();
    for row in samples.chunks_exact_mut(n) {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    PeriodicGridFunction {
        samples,
        grid_size: u.grid_size(),
        components: n,
        period: u.period(),
    }
}

/// Ratio of the time-lp norm of u to that of its central difference.
/// The supremum of this quotient over mean-zero u is C_p T.
pub fn rayleigh_quotient(u: &PeriodicGridFunction, p: PExponent) -> Result<f64> {
    let pv = p.get();
    let num = u.time_lp_pow_sum(pv);
    if num == 0.0 {
        return Err(Error::domain("rayleigh quotient of the zero function"));
    }
    let den = u.central_difference().time_lp_pow_sum(pv);
    if den == 0.0 {
        return Err(Error::domain(
            "rayleigh quotient undefined: derivative vanishes (constant function)",
        ));
    }
    Ok((num / den).powf(1.0 / pv))
}

/// Checks `int |u|^p dt <= C_p^p T^p int |Du|^p dt` for a mean-zero u.
/// A violation beyond the discretization tolerance is reported, not raised.
pub fn wirtinger_check(u: &PeriodicGridFunction, p: PExponent) -> Result<WirtingerReport> {
    let c = compute_cp(p)?;
    let pv = p.get();
    let lhs = u.time_lp_pow_sum(pv);
    let factor = (c.c_p * u.period()).powf(pv);
    let rhs = factor * u.central_difference().time_lp_pow_sum(pv);
    let slack = rhs - lhs;
    let tol = tol_report(u.grid_size());
    Ok(WirtingerReport {
        lhs,
        rhs,
        slack,
        holds: lhs <= rhs * (1.0 + tol).powf(pv),
        tol_report: tol,
    })
}

/// Convergence status of the extremal search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    /// The ascent stalled below the per-step improvement floor.
    Converged,
    /// The iteration budget ran out while still improving.
    ConvergedLowConfidence,
}

/// Result of the discrete Wirtinger extremal search.
#[derive(Debug, Clone)]
pub struct ExtremalSearch {
    pub extremal: PeriodicGridFunction,
    pub quotient: f64,
    pub status: SearchStatus,
    /// Best quotient after each iteration; nondecreasing.
    pub trace: Vec<f64>,
}

const ASCENT_STEP0: f64 = 0.1;
const ASCENT_MIN_STEP: f64 = 1e-12;
const IMPROVEMENT_FLOOR: f64 = 1e-13;
const RESTARTS: u64 = 3;

/// Mean-zero trigonometric polynomials of degree at most N/4 on the N-point
/// grid: the admissible space of the extremal search.
///
/// The central-difference symbol sin(2 pi m / N) aliases mode N/2 - m onto
/// mode m, so the unrestricted discrete quotient has spurious near-Nyquist
/// maximizers with the same value as the genuine low-mode extremal. Working
/// band-limited keeps the discrete problem consistent with the continuum
/// one. The basis also carries the 1/m^2 diagonal preconditioner that evens
/// out the mode-m curvature of the quotient.
struct ModeBasis {
    grid: usize,
    modes: usize,
    cos_tab: Vec<f64>, // modes x grid
    sin_tab: Vec<f64>,
}

impl ModeBasis {
    fn new(grid: usize) -> Self {
        let modes = (grid / 4).max(1);
        let mut cos_tab = vec![0.0; modes * grid];
        let mut sin_tab = vec![0.0; modes * grid];
        for m in 1..=modes {
            for k in 0..grid {
                let ang = 2.0 * PI * (m as f64) * (k as f64) / grid as f64;
                cos_tab[(m - 1) * grid + k] = ang.cos();
                sin_tab[(m - 1) * grid + k] = ang.sin();
            }
        }
        ModeBasis {
            grid,
            modes,
            cos_tab,
            sin_tab,
        }
    }

    /// Sample-space vector from per-mode coefficients.
    fn synthesize(&self, cos_coef: &[f64], sin_coef: &[f64]) -> Vec<f64> {
        let nn = self.grid;
        let mut out = vec![0.0; nn];
        for m in 0..self.modes {
            let cos_row = &self.cos_tab[m * nn..(m + 1) * nn];
            let sin_row = &self.sin_tab[m * nn..(m + 1) * nn];
            let (c, s) = (cos_coef[m], sin_coef[m]);
            if c == 0.0 && s == 0.0 {
                continue;
            }
            for k in 0..nn {
                out[k] += c * cos_row[k] + s * sin_row[k];
            }
        }
        out
    }

    /// Band-limited, preconditioned ascent direction from a sample-space
    /// gradient: project onto the admissible modes and divide mode m by
    /// m^2. Returns the direction and its inner product with the gradient
    /// (positive whenever the projected gradient is nonzero).
    fn preconditioned_direction(&self, grad: &[f64]) -> (Vec<f64>, f64) {
        let nn = self.grid;
        let norm = 2.0 / nn as f64;
        let mut cos_coef = vec![0.0; self.modes];
        let mut sin_coef = vec![0.0; self.modes];
        let mut gain = 0.0;
        for m in 0..self.modes {
            let cos_row = &self.cos_tab[m * nn..(m + 1) * nn];
            let sin_row = &self.sin_tab[m * nn..(m + 1) * nn];
            let mut c = 0.0;
            let mut s = 0.0;
            for k in 0..nn {
                c += grad[k] * cos_row[k];
                s += grad[k] * sin_row[k];
            }
            let weight = ((m + 1) * (m + 1)) as f64;
            cos_coef[m] = norm * c / weight;
            sin_coef[m] = norm * s / weight;
            // <grad, dir> accumulates (N/2) (c_m^2 + s_m^2) / weight scaled
            // by the analysis normalization.
            gain += (c * c + s * s) * norm / weight;
        }
        (self.synthesize(&cos_coef, &sin_coef), gain)
    }

    /// Random band-limited function with 1/m coefficient decay.
    fn random_function(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut cos_coef = vec![0.0; self.modes];
        let mut sin_coef = vec![0.0; self.modes];
        for m in 0..self.modes {
            let damp = 1.0 / (m + 1) as f64;
            cos_coef[m] = damp * rng.random_range(-1.0..1.0);
            sin_coef[m] = damp * rng.random_range(-1.0..1.0);
        }
        self.synthesize(&cos_coef, &sin_coef)
    }
}

/// |x|^{p-1} sgn(x), the derivative of |x|^p / p.
#[inline]
fn phi(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        pow_abs(x, p - 1.0) * x.signum()
    }
}

/// Projected gradient ascent on the Rayleigh quotient over mean-zero scalar
/// grid functions of period 1, renormalized each step. Three seeded random
/// restarts; the best quotient wins. The reported quotient never decreases
/// along the trace.
pub fn extremal_search(
    p: PExponent,
    grid_size: usize,
    budget: usize,
    seed: u64,
) -> Result<ExtremalSearch> {
    if grid_size < MIN_SEARCH_GRID {
        return Err(Error::domain(format!(
            "extremal search needs N >= {MIN_SEARCH_GRID}, got {grid_size}"
        )));
    }
    if budget == 0 {
        return Err(Error::domain("iteration budget must be positive"));
    }
    let pv = p.get();
    let period = 1.0;
    let dt = period / grid_size as f64;
    let per_restart = (budget / RESTARTS as usize).max(1);
    let basis = ModeBasis::new(grid_size);

    let mut best: Option<(f64, PeriodicGridFunction)> = None;
    let mut trace = Vec::with_capacity(budget);
    let mut any_converged = false;

    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart));
        let u0 = PeriodicGridFunction::new(basis.random_function(&mut rng), grid_size, 1, period)?;
        let mut u = normalize(&u0, pv);
        let mut q = quotient_of(&u, pv);
        let mut converged = false;

        for _ in 0..per_restart {
            let grad = log_quotient_gradient(&u, pv, dt);
            let (mut dir, mut gain) = basis.preconditioned_direction(&grad);
            // Scale the direction to the function's own amplitude so the
            // backtracked step is meaningful at any grid size.
            let dmax = dir.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if dmax > 0.0 {
                for g in &mut dir {
                    *g /= dmax;
                }
                gain /= dmax;
            }
            let mut step = ASCENT_STEP0;
            let mut improved = false;
            while step >= ASCENT_MIN_STEP {
                let candidate = ascend(&u, &dir, step, pv);
                let qc = quotient_of(&candidate, pv);
                // Sufficient-increase test on the log quotient.
                if qc > q * (1.0 + 1e-4 * step * gain) {
                    improved = qc - q > IMPROVEMENT_FLOOR * q.max(1.0);
                    u = candidate;
                    q = qc;
                    break;
                }
                step *= 0.5;
            }
            let global_best = best.as_ref().map(|(b, _)| *b).unwrap_or(f64::NEG_INFINITY);
            trace.push(global_best.max(q));
            if !improved {
                converged = true;
                break;
            }
        }
        any_converged |= converged;
        if best.as_ref().map(|(b, _)| q > *b).unwrap_or(true) {
            best = Some((q, u));
        }
    }

    let (quotient, extremal) = best.expect("at least one restart ran");
    Ok(ExtremalSearch {
        extremal,
        quotient,
        status: if any_converged {
            SearchStatus::Converged
        } else {
            SearchStatus::ConvergedLowConfidence
        },
        trace,
    })
}

fn quotient_of(u: &PeriodicGridFunction, p: f64) -> f64 {
    let num = u.time_lp_pow_sum(p);
    let den = u.central_difference().time_lp_pow_sum(p);
    (num / den).powf(1.0 / p)
}

fn normalize(u: &PeriodicGridFunction, p: f64) -> PeriodicGridFunction {
    let norm = u.time_lp_norm(p);
    u.scaled(1.0 / norm)
}

/// Moves along a band-limited direction and renormalizes; the iterate stays
/// in the admissible space because the direction already is.
fn ascend(
    u: &PeriodicGridFunction,
    dir: &[f64],
    step: f64,
    p: f64,
) -> PeriodicGridFunction {
    let samples: Vec<f64> = u
        .samples()
        .iter()
        .zip(dir)
        .map(|(v, g)| v + step * g)
        .collect();
    let moved = PeriodicGridFunction {
        samples,
        grid_size: u.grid_size(),
        components: 1,
        period: u.period(),
    };
    normalize(&moved, p)
}

/// Gradient of log(|u|_p / |Du|_p) for scalar u on the periodic grid.
fn log_quotient_gradient(u: &PeriodicGridFunction, p: f64, dt: f64) -> Vec<f64> {
    let nn = u.grid_size();
    let s = u.samples();
    let du = u.central_difference();
    let dus = du.samples();
    let a = u.time_lp_pow_sum(p);
    let b = du.time_lp_pow_sum(p);
    (0..nn)
        .map(|k| {
            let up = (k + 1) % nn;
            let dn = (k + nn - 1) % nn;
            dt * phi(s[k], p) / a - (phi(dus[dn], p) - phi(dus[up], p)) / (2.0 * b)
        })
        .collect()
}

/// Correlation of a scalar grid function with its best-matching shifted
/// first-harmonic sinusoid: the l2 fraction captured by the first Fourier
/// mode.
pub fn first_harmonic_correlation(u: &PeriodicGridFunction) -> Result<f64> {
    if u.components() != 1 {
        return Err(Error::domain(
            "sinusoid correlation is defined for scalar functions",
        ));
    }
    let nn = u.grid_size() as f64;
    let s = u.samples();
    let mut c = 0.0;
    let mut sn = 0.0;
    let mut total = 0.0;
    for (k, &v) in s.iter().enumerate() {
        let ang = 2.0 * PI * k as f64 / nn;
        c += v * ang.cos();
        sn += v * ang.sin();
        total += v * v;
    }
    if total == 0.0 {
        return Err(Error::domain("correlation of the zero function"));
    }
    let captured = (c * c + sn * sn) / (nn / 2.0);
    Ok((captured / total).sqrt())
}

/// Report of the double-integral inequality check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Lemma2Report {
    /// Ratio of the position double integral to the derivative double
    /// integral; bounded by T/6.
    pub q: f64,
    /// T/6.
    pub bound: f64,
    pub holds: bool,
    /// Double trapezoid value of the position integral.
    pub num_integral: f64,
    /// Double trapezoid value of the derivative integral.
    pub den_integral: f64,
    pub tol_report: f64,
}

/// Q = (sum_{j,k} |y_j - y_k|_p) / (sum_{j,k} |Dy_j - Dy_k|_p), with the
/// uniform double-trapezoid weights canceling in the ratio. Lemma-2-type
/// bound: Q <= T/6.
pub fn lemma2_ratio(y: &PeriodicGridFunction, p: PExponent) -> Result<Lemma2Report> {
    let pv = p.get();
    let dy = y.central_difference();
    let num = pair_distance_sum(y, pv);
    let den = pair_distance_sum(&dy, pv);
    if den == 0.0 {
        return Err(Error::domain(
            "double-integral ratio undefined: constant curve",
        ));
    }
    let dt = y.dt();
    let q = num / den;
    let bound = y.period() / 6.0;
    let tol = tol_report(y.grid_size());
    Ok(Lemma2Report {
        q,
        bound,
        holds: q <= bound + tol,
        num_integral: num * dt * dt,
        den_integral: den * dt * dt,
        tol_report: tol,
    })
}

/// sum over all ordered pairs (j, k) of |y_j - y_k|_p. Computed over
/// unordered pairs and doubled.
fn pair_distance_sum(y: &PeriodicGridFunction, p: f64) -> f64 {
    let nn = y.grid_size();
    let n = y.components();
    let s = y.samples();
    let inv_p = 1.0 / p;
    let mut total = 0.0;
    for j in 0..nn {
        let yj = &s[j * n..(j + 1) * n];
        for k in (j + 1)..nn {
            let yk = &s[k * n..(k + 1) * n];
            let mut acc = 0.0;
            for c in 0..n {
                acc += pow_abs(yj[c] - yk[c], p);
            }
            total += acc.powf(inv_p);
        }
    }
    2.0 * total
}

/// Forms v(t) = x(t + h) - x(t) for a grid-aligned shift h, verifies that v
/// is mean-zero without projection, and runs the Wirtinger check on it.
pub fn shift_difference_check(
    x: &PeriodicGridFunction,
    h: f64,
    p: PExponent,
) -> Result<WirtingerReport> {
    let dt = x.dt();
    let steps = h / dt;
    let rounded = steps.round();
    if (steps - rounded).abs() > 1e-9 * steps.abs().max(1.0) {
        return Err(Error::domain(format!(
            "shift h = {h} is not a multiple of the grid spacing {dt}"
        )));
    }
    let shift = (rounded as i64).rem_euclid(x.grid_size() as i64) as usize;
    let rotated = x.rotate(shift);
    let n = x.components();
    let samples: Vec<f64> = rotated
        .samples()
        .iter()
        .zip(x.samples())
        .map(|(a, b)| a - b)
        .collect();
    let v = PeriodicGridFunction::new(samples, x.grid_size(), n, x.period())?;
    let scale = x.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean_bound = 1e-14 * scale.max(1.0);
    if v.mean().iter().any(|m| m.abs() > mean_bound) {
        return Err(Error::domain(
            "shift difference failed the automatic mean-zero property",
        ));
    }
    wirtinger_check(&v, p)
}
