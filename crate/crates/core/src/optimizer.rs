//! Search over Fourier-parameterized closed curves in lp(R^n) for a small
//! product of period and curve-restricted Lipschitz constant.
//!
//! The period is pinned to 2 pi, which removes the time-rescaling gauge:
//! reparameterizing speed rescales the restricted constant inversely, so
//! the product only sees the curve's shape. The restricted constant itself
//! is the supremum over pairs of curve points of |dy(t) - dy(s)| / |y(t) - y(s)|,
//! exactly the quantity the lower-bound chains consume along an orbit.
//! Minima found here are empirical upper bounds for the restricted-constant
//! problem; no whole-space Lipschitz extension is claimed.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::constants::{compute_cp, PExponent};
use crate::error::Error;
use crate::util::pow_abs;
use crate::Result;

/// Grid used by the objective during search.
pub const DEFAULT_GRID: usize = 512;
/// Grid used for the final reported value, guarding against grid-induced
/// underestimation of the restricted constant.
pub const REPORT_GRID: usize = 2048;
/// Smallest admissible evaluation grid.
pub const MIN_GRID: usize = 128;
/// Soundness slack versus the theoretical lower bounds.
pub const SOUNDNESS_TOL: f64 = 1e-3;
/// Position differences below this are treated as self-intersections.
const COINCIDENCE_EPS: f64 = 1e-12;

/// A closed curve with period 2 pi: per dimension a constant term plus K
/// cosine and K sine coefficients. Evaluation and differentiation are exact
/// trigonometric sums.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCurve {
    coeffs: Vec<f64>, // row-major dims x (2K + 1): [a0, a1..aK, b1..bK]
    dims: usize,
    harmonics: usize,
}

impl FourierCurve {
    pub fn new(coeffs: Vec<f64>, dims: usize, harmonics: usize) -> Result<Self> {
        if dims == 0 || harmonics == 0 {
            return Err(Error::domain("curve needs at least 1 dimension and 1 harmonic"));
        }
        let stride = 2 * harmonics + 1;
        if coeffs.len() != dims * stride {
            return Err(Error::domain(format!(
                "coefficient buffer has {} entries, expected {} x {}",
                coeffs.len(),
                dims,
                stride
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        let degenerate = (0..dims).all(|d| {
            coeffs[d * stride + 1..(d + 1) * stride]
                .iter()
                .all(|c| *c == 0.0)
        });
        if degenerate {
            return Err(Error::domain(
                "degenerate curve: every non-constant coefficient is zero",
            ));
        }
        Ok(Self {
            coeffs,
            dims,
            harmonics,
        })
    }

    /// The unit circle (cos t, sin t) embedded in the first two dimensions.
    pub fn unit_circle(dims: usize, harmonics: usize) -> Result<Self> {
        let stride = 2 * harmonics + 1;
        let mut coeffs = vec![0.0; dims.max(2) * stride];
        coeffs[1] = 1.0; // x: cos t
        coeffs[stride + 1 + harmonics] = 1.0; // y: sin t
        Self::new(coeffs, dims.max(2), harmonics)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Nested per-dimension coefficient rows, for serialization.
    pub fn coeff_rows(&self) -> Vec<Vec<f64>> {
        let stride = 2 * self.harmonics + 1;
        (0..self.dims)
            .map(|d| self.coeffs[d * stride..(d + 1) * stride].to_vec())
            .collect()
    }

    pub fn position(&self, t: f64, out: &mut [f64]) {
        let k = self.harmonics;
        let stride = 2 * k + 1;
        for d in 0..self.dims {
            let row = &self.coeffs[d * stride..(d + 1) * stride];
            let mut acc = row[0];
            for m in 1..=k {
                let (s, c) = (m as f64 * t).sin_cos();
                acc += row[m] * c + row[k + m] * s;
            }
            out[d] = acc;
        }
    }

    pub fn velocity(&self, t: f64, out: &mut [f64]) {
        let k = self.harmonics;
        let stride = 2 * k + 1;
        for d in 0..self.dims {
            let row = &self.coeffs[d * stride..(d + 1) * stride];
            let mut acc = 0.0;
            for m in 1..=k {
                let mf = m as f64;
                let (s, c) = (mf * t).sin_cos();
                acc += mf * (-row[m] * s + row[k + m] * c);
            }
            out[d] = acc;
        }
    }

    pub fn acceleration(&self, t: f64, out: &mut [f64]) {
        let k = self.harmonics;
        let stride = 2 * k + 1;
        for d in 0..self.dims {
            let row = &self.coeffs[d * stride..(d + 1) * stride];
            let mut acc = 0.0;
            for m in 1..=k {
                let mf = m as f64;
                let (s, c) = (mf * t).sin_cos();
                acc -= mf * mf * (row[m] * c + row[k + m] * s);
            }
            out[d] = acc;
        }
    }

    /// Positions, velocities and accelerations at N uniform times, each as
    /// a flat N x dims array.
    fn sample(&self, grid_n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.dims;
        let mut pos = vec![0.0; grid_n * n];
        let mut vel = vec![0.0; grid_n * n];
        let mut acc = vec![0.0; grid_n * n];
        for i in 0..grid_n {
            let t = 2.0 * PI * i as f64 / grid_n as f64;
            self.position(t, &mut pos[i * n..(i + 1) * n]);
            self.velocity(t, &mut vel[i * n..(i + 1) * n]);
            self.acceleration(t, &mut acc[i * n..(i + 1) * n]);
        }
        (pos, vel, acc)
    }
}

/// Maximum over sampled pairs (t_i, t_j), i != j, of
/// |dy(t_i) - dy(t_j)|_p / |y(t_i) - y(t_j)|_p, with near-diagonal pairs
/// (|i - j| <= 1 mod N) replaced by the analytic limit |y''(t)|_p / |y'(t)|_p.
///
/// A sample pair with coincident positions but distinct derivatives makes
/// the supremum infinite; the curve is then invalid for this objective and
/// infinity is returned.
pub fn restricted_lipschitz(curve: &FourierCurve, p: PExponent, grid_n: usize) -> Result<f64> {
    if grid_n < MIN_GRID {
        return Err(Error::domain(format!(
            "objective grid {grid_n} below minimum {MIN_GRID}"
        )));
    }
    let pv = p.get();
    let n = curve.dims();
    let (pos, vel, acc) = curve.sample(grid_n);

    // Ratios are compared through their p-th powers; the root is taken once.
    let eps_pow = pow_abs(COINCIDENCE_EPS, pv);
    let mut best_num = 0.0f64;
    let mut best_den = 1.0f64;

    // Diagonal limit terms.
    for i in 0..grid_n {
        let num = pow_sum_row(&acc[i * n..(i + 1) * n], pv);
        let den = pow_sum_row(&vel[i * n..(i + 1) * n], pv);
        if den <= eps_pow {
            if num > eps_pow {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        if num * best_den > best_num * den {
            best_num = num;
            best_den = den;
        }
    }

    // Off-diagonal pairs, |i - j| >= 2 mod N.
    for i in 0..grid_n {
        let pi = &pos[i * n..(i + 1) * n];
        let vi = &vel[i * n..(i + 1) * n];
        let j_end = if i == 0 { grid_n - 1 } else { grid_n };
        for j in (i + 2)..j_end {
            let pj = &pos[j * n..(j + 1) * n];
            let vj = &vel[j * n..(j + 1) * n];
            let mut den = 0.0;
            let mut num = 0.0;
            for c in 0..n {
                den += pow_abs(pi[c] - pj[c], pv);
                num += pow_abs(vi[c] - vj[c], pv);
            }
            if den <= eps_pow {
                if num > eps_pow {
                    return Ok(f64::INFINITY);
                }
                continue;
            }
            if num * best_den > best_num * den {
                best_num = num;
                best_den = den;
            }
        }
    }

    Ok((best_num / best_den).powf(1.0 / pv))
}

#[inline(always)]
fn pow_sum_row(row: &[f64], p: f64) -> f64 {
    row.iter().map(|&x| pow_abs(x, p)).sum()
}

/// The minimized product: 2 pi times the restricted Lipschitz constant on
/// the default grid. Invariant under spatial scaling and time rotation of
/// the curve; time rescaling is gauged out by pinning the period.
pub fn objective(curve: &FourierCurve, p: PExponent) -> Result<f64> {
    Ok(2.0 * PI * restricted_lipschitz(curve, p, DEFAULT_GRID)?)
}

/// Centers the curve, scales the maximum lp norm over the period to 1, and
/// rotates time so the norm is maximal at t = 0. The objective is unchanged.
pub fn normalize_curve(curve: &FourierCurve) -> Result<FourierCurve> {
    let k = curve.harmonics();
    let stride = 2 * k + 1;
    let n = curve.dims();
    let mut coeffs = curve.coeffs().to_vec();
    for d in 0..n {
        coeffs[d * stride] = 0.0;
    }
    let centered = FourierCurve::new(coeffs, n, k)?;

    const SCAN: usize = 2048;
    let mut row = vec![0.0; n];
    let mut norms = Vec::with_capacity(SCAN);
    for i in 0..SCAN {
        let t = 2.0 * PI * i as f64 / SCAN as f64;
        centered.position(t, &mut row);
        norms.push(crate::util::lp_norm(&row, 2.0));
    }
    let peak = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::domain("cannot normalize a degenerate curve"));
    }
    // Earliest index within rounding of the peak, so curves of constant
    // norm (circles) keep their phase and the map is idempotent.
    let best_idx = norms
        .iter()
        .position(|&v| v >= peak * (1.0 - 1e-12))
        .unwrap_or(0);
    let t0 = 2.0 * PI * best_idx as f64 / SCAN as f64;
    let scale = 1.0 / norms[best_idx];

    let mut out = centered.coeffs().to_vec();
    for d in 0..n {
        let row = &mut out[d * stride..(d + 1) * stride];
        for m in 1..=k {
            let (s, c) = (m as f64 * t0).sin_cos();
            let a = row[m];
            let b = row[k + m];
            row[m] = scale * (a * c + b * s);
            row[k + m] = scale * (-a * s + b * c);
        }
    }
    FourierCurve::new(out, n, k)
}

/// One trace entry: global best after `evaluations` objective calls.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    pub evaluations: usize,
    pub best_so_far: f64,
}

/// Outcome of one curve search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub p: f64,
    pub dims: usize,
    pub harmonics: usize,
    pub budget: usize,
    pub seed: u64,
    pub best_curve: FourierCurve,
    /// Final product, re-evaluated on the fine reporting grid.
    pub best_tl: f64,
    /// max(6, C_p^{-1}) for the given exponent.
    pub lower_bound: f64,
    pub certificate_gap: f64,
    pub trace: Vec<TracePoint>,
}

impl SearchResult {
    /// JSON payload with the pinned keys.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p,
            "n": self.dims,
            "K": self.harmonics,
            "budget": self.budget,
            "seed": self.seed,
            "best_TL": self.best_tl,
            "lower_bound": self.lower_bound,
            "certificate_gap": self.certificate_gap,
            "coeffs": self.best_curve.coeff_rows(),
        })
    }

    /// Trace CSV: `iteration,best_so_far` rows.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,best_so_far\n");
        for tp in &self.trace {
            out.push_str(&format!("{},{}\n", tp.evaluations, tp.best_so_far));
        }
        out
    }
}

const POPULATION: usize = 16;
const ELITE: usize = 4;
const SIGMA_START: f64 = 0.35;
const SIGMA_END: f64 = 3e-4;
const ISLANDS: u64 = 4;

/// Population-based stochastic search minimizing [`objective`]: Gaussian
/// coefficient perturbations with geometrically decaying step temperature
/// and elitist selection, run as independent seeded islands merged by
/// minimum. Deterministic for a fixed (seed, budget).
pub fn search(
    p: PExponent,
    dims: usize,
    harmonics: usize,
    budget: usize,
    seed: u64,
) -> Result<SearchResult> {
    if dims < 2 {
        return Err(Error::domain("search needs dimension n >= 2"));
    }
    if harmonics < 1 {
        return Err(Error::domain("search needs at least one harmonic"));
    }
    if budget < 1000 {
        return Err(Error::domain("search budget must be at least 1000"));
    }

    let per_island = budget / ISLANDS as usize;
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut global_best: Option<(f64, FourierCurve)> = None;
    let mut evals_done = 0usize;

    for island in 0..ISLANDS {
        let island_budget = if island == ISLANDS - 1 {
            budget - per_island * (ISLANDS as usize - 1)
        } else {
            per_island
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(island));
        run_island(
            p,
            dims,
            harmonics,
            island_budget,
            &mut rng,
            &mut global_best,
            &mut trace,
            &mut evals_done,
        )?;
    }

    let (_, raw_best) = global_best.ok_or_else(|| {
        Error::domain("every candidate in the search was degenerate; nothing to report")
    })?;
    let best_curve = normalize_curve(&raw_best)?;
    let best_tl = 2.0 * PI * restricted_lipschitz(&best_curve, p, REPORT_GRID)?;
    let c_inv = compute_cp(p)?.c_p_inverse;
    let lower_bound = c_inv.max(6.0);
    trace.push(TracePoint {
        evaluations: evals_done,
        best_so_far: best_tl,
    });

    Ok(SearchResult {
        p: p.get(),
        dims,
        harmonics,
        budget,
        seed,
        best_curve,
        best_tl,
        lower_bound,
        certificate_gap: best_tl - lower_bound,
        trace,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_island(
    p: PExponent,
    dims: usize,
    harmonics: usize,
    island_budget: usize,
    rng: &mut ChaCha8Rng,
    global_best: &mut Option<(f64, FourierCurve)>,
    trace: &mut Vec<TracePoint>,
    evals_done: &mut usize,
) -> Result<()> {
    let stride = 2 * harmonics + 1;
    let mut evals_left = island_budget;

    // Scored population, best first.
    let mut population: Vec<(f64, FourierCurve)> = Vec::with_capacity(POPULATION + 1);
    while population.len() < POPULATION.min(evals_left.max(1)) && evals_left > 0 {
        let curve = random_curve(dims, harmonics, rng)?;
        let score = objective(&curve, p)?;
        evals_left -= 1;
        *evals_done += 1;
        insert_scored(&mut population, score, curve, POPULATION);
        update_best(global_best, trace, &population[0], *evals_done);
    }
    if population.is_empty() {
        return Ok(());
    }

    let total = island_budget.max(2) as f64;
    while evals_left > 0 {
        let progress = 1.0 - evals_left as f64 / total;
        let sigma = SIGMA_START * (SIGMA_END / SIGMA_START).powf(progress);
        let parent_idx = rng.random_range(0..ELITE.min(population.len()));
        let parent = population[parent_idx].1.clone();
        let mut coeffs = parent.coeffs().to_vec();
        for d in 0..dims {
            for idx in 1..stride {
                let z: f64 = StandardNormal.sample(rng);
                coeffs[d * stride + idx] += sigma * z;
            }
        }
        let candidate = match FourierCurve::new(coeffs, dims, harmonics)
            .and_then(|c| normalize_curve(&c))
        {
            Ok(c) => c,
            Err(_) => continue, // degenerate mutation; does not consume budget
        };
        let score = objective(&candidate, p)?;
        evals_left -= 1;
        *evals_done += 1;
        insert_scored(&mut population, score, candidate, POPULATION);
        update_best(global_best, trace, &population[0], *evals_done);
    }
    Ok(())
}

fn random_curve(dims: usize, harmonics: usize, rng: &mut ChaCha8Rng) -> Result<FourierCurve> {
    let stride = 2 * harmonics + 1;
    let mut coeffs = vec![0.0; dims * stride];
    for d in 0..dims {
        for m in 1..=harmonics {
            let damp = 1.0 / m as f64;
            let za: f64 = StandardNormal.sample(rng);
            let zb: f64 = StandardNormal.sample(rng);
            coeffs[d * stride + m] = damp * za;
            coeffs[d * stride + harmonics + m] = damp * zb;
        }
    }
    let curve = FourierCurve::new(coeffs, dims, harmonics)?;
    normalize_curve(&curve)
}

fn insert_scored(
    population: &mut Vec<(f64, FourierCurve)>,
    score: f64,
    curve: FourierCurve,
    cap: usize,
) {
    let pos = population
        .binary_search_by(|(s, _)| s.total_cmp(&score))
        .unwrap_or_else(|e| e);
    population.insert(pos, (score, curve));
    population.truncate(cap);
}

fn update_best(
    global_best: &mut Option<(f64, FourierCurve)>,
    trace: &mut Vec<TracePoint>,
    leader: &(f64, FourierCurve),
    evals_done: usize,
) {
    let improved = match global_best {
        Some((best, _)) => leader.0 < *best,
        None => true,
    };
    if improved {
        *global_best = Some((leader.0, leader.1.clone()));
        trace.push(TracePoint {
            evaluations: evals_done,
            best_so_far: leader.0,
        });
    }
}
