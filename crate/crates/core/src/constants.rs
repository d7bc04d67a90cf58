//! The sharp Wirtinger constant `C_p`, its reciprocal lower bound on `T * L`,
//! the supercritical range where that bound beats the universal Banach
//! constant 6, and the equivalent-norm bound for near-Hilbert norms.
//!
//! Two independent evaluation routes are provided: the closed form
//! `C_p = p sin(pi/p) / (4 pi (p-1)^{1/p})` obtained from the beta-integral
//! representation through the Gamma reflection identity, and direct adaptive
//! quadrature of the singular beta integral. They cross-check each other.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Error;
use crate::util::fmt_significant;
use crate::Result;

/// Exponents closer to 1 than this degenerate numerically and are rejected.
pub const P_DEGENERACY_GAP: f64 = 1e-9;
/// Root localization tolerance for the supercritical range.
pub const BISECTION_TOL: f64 = 1e-10;
/// Step of the bracket-seeding grid scan.
const SCAN_STEP: f64 = 0.01;
/// Evaluation budget for one adaptive quadrature call.
const QUAD_MAX_EVALS: usize = 4_000_000;
const QUAD_MAX_DEPTH: usize = 60;

/// A validated Lebesgue exponent p in (1, inf) together with its Holder
/// conjugate p' = p/(p-1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PExponent {
    p: f64,
    conjugate: f64,
}

impl PExponent {
    /// Rejects p <= 1 and non-finite p.
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self {
            p,
            conjugate: p / (p - 1.0),
        })
    }

    pub fn get(&self) -> f64 {
        self.p
    }

    pub fn conjugate(&self) -> f64 {
        self.conjugate
    }

    /// The conjugate as a validated exponent (p')' = p.
    pub fn conjugate_exponent(&self) -> PExponent {
        PExponent {
            p: self.conjugate,
            conjugate: self.p,
        }
    }

    /// True when p is the self-conjugate Hilbert exponent.
    pub fn is_two(&self) -> bool {
        self.p == 2.0
    }
}

/// How a [`WirtingerConstant`] value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CpMethod {
    ClosedForm,
    Quadrature,
}

/// The sharp constant of the generalized Wirtinger inequality and its
/// reciprocal, which lower-bounds `T * L`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WirtingerConstant {
    pub p: f64,
    pub conjugate: f64,
    pub c_p: f64,
    pub c_p_inverse: f64,
    pub method: CpMethod,
}

/// The interval of exponents whose Wirtinger bound exceeds `threshold`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupercriticalRange {
    pub p_low: f64,
    pub p_high: f64,
    pub threshold: f64,
}

/// Report of the conjugate-symmetry identity C_p = C_{p'}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymmetryReport {
    pub p: f64,
    pub conjugate: f64,
    pub c_p: f64,
    pub c_p_conjugate: f64,
    pub abs_diff: f64,
}

/// sin(pi/p) evaluated through the reflection sin(pi - x) = sin(x) when
/// p < 2, which keeps full relative precision as p -> 1.
#[inline]
fn sin_pi_over(p: f64) -> f64 {
    if p < 2.0 {
        (PI * ((p - 1.0) / p)).sin()
    } else {
        (PI / p).sin()
    }
}

/// Closed-form C_p without the degeneracy guard; internal root-finding may
/// probe arbitrarily close to p = 1.
fn cp_closed_unchecked(p: f64) -> f64 {
    p * sin_pi_over(p) / (4.0 * PI * ((p - 1.0).ln() / p).exp())
}

fn cp_inverse_closed_unchecked(p: f64) -> f64 {
    1.0 / cp_closed_unchecked(p)
}

/// Sharp Wirtinger constant by the closed form
/// `C_p = p sin(pi/p) / (4 pi (p-1)^{1/p})`.
///
/// Exponents within 1e-9 of 1 are rejected: the constant degenerates there
/// and the sharp-constant result does not cover the endpoint.
pub fn compute_cp(p: PExponent) -> Result<WirtingerConstant> {
    if p.get() - 1.0 < P_DEGENERACY_GAP {
        return Err(Error::DegenerateExponent(p.get()));
    }
    let c_p = cp_closed_unchecked(p.get());
    Ok(WirtingerConstant {
        p: p.get(),
        conjugate: p.conjugate(),
        c_p,
        c_p_inverse: 1.0 / c_p,
        method: CpMethod::ClosedForm,
    })
}

/// Adaptive Simpson with Richardson acceptance, shared evaluation budget.
fn simpson_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    evals: &mut usize,
) -> Result<f64> {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
        evals: &mut usize,
    ) -> Result<f64> {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        *evals += 2;
        if *evals > QUAD_MAX_EVALS {
            return Err(Error::NonConvergent(
                "quadrature evaluation budget exceeded".into(),
            ));
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 {
            return Err(Error::NonConvergent(
                "quadrature recursion depth exceeded".into(),
            ));
        }
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        let l = recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, evals)?;
        let r = recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, evals)?;
        Ok(l + r)
    }

    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    *evals += 3;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, QUAD_MAX_DEPTH, evals)
}

/// Sharp Wirtinger constant by direct numerical evaluation of the singular
/// beta integral `int_0^1 t^{-1/p} (1-t)^{1/p-1} dt`.
///
/// The integral splits at t = 1/2 and each endpoint singularity is removed
/// by the power substitution t = s^m (respectively 1-t = s^m) with m the
/// reciprocal of the local exponent, after which the transformed integrand
/// is bounded and adaptive Simpson applies.
///
/// A budget overrun is a reported failure, never a silent wrong value.
pub fn cp_quadrature(p: PExponent, tol: f64) -> Result<WirtingerConstant> {
    if p.get() - 1.0 < P_DEGENERACY_GAP {
        return Err(Error::DegenerateExponent(p.get()));
    }
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::domain(format!(
            "quadrature tolerance {tol} outside (0, 1e-4]"
        )));
    }
    let x = 1.0 / p.conjugate(); // exponent parameter at t = 0
    let y = 1.0 / p.get(); // exponent parameter at t = 1
    let mut evals = 0usize;

    // Left half: t = s^m with m = 1/x makes the integrand a bounded,
    // smooth function of s on [0, 2^{-x}].
    let m_left = 1.0 / x;
    let left = simpson_adaptive(
        &|s: f64| m_left * (1.0 - s.powf(m_left)).powf(y - 1.0),
        0.0,
        0.5f64.powf(x),
        0.5 * tol,
        &mut evals,
    )?;

    // Right half via u = 1 - t, then u = s^m with m = 1/y.
    let m_right = 1.0 / y;
    let right = simpson_adaptive(
        &|s: f64| m_right * (1.0 - s.powf(m_right)).powf(x - 1.0),
        0.0,
        0.5f64.powf(y),
        0.5 * tol,
        &mut evals,
    )?;

    let beta = left + right;
    let c_p = p.get() / (4.0 * ((p.get() - 1.0).ln() / p.get()).exp() * beta);
    Ok(WirtingerConstant {
        p: p.get(),
        conjugate: p.conjugate(),
        c_p,
        c_p_inverse: 1.0 / c_p,
        method: CpMethod::Quadrature,
    })
}

/// Roots of `c_p_inverse(p) = threshold` for thresholds strictly between the
/// endpoint limit 4 and the maximum 2 pi.
///
/// The bound is unimodal with maximum 2 pi at p = 2 and limit 4 at both
/// ends, so a valid threshold has exactly one root on each side of 2. Roots
/// are seeded by a 0.01-grid scan and polished by bisection to 1e-10.
pub fn supercritical_range(threshold: f64) -> Result<SupercriticalRange> {
    let two_pi = 2.0 * PI;
    if !threshold.is_finite() || threshold >= two_pi {
        return Err(Error::domain(format!(
            "threshold {threshold} >= 2*pi: no supercritical interval exists"
        )));
    }
    if threshold <= 4.0 {
        return Err(Error::domain(format!(
            "threshold {threshold} <= 4: the interval is unbounded (both endpoint limits are 4)"
        )));
    }
    let f = |p: f64| cp_inverse_closed_unchecked(p) - threshold;

    // Left root in (1, 2]: scan downward-safe bracket from 1 + SCAN_STEP.
    let left_edge = 1.0 + 1e-8;
    let p_low = if f(1.0 + SCAN_STEP) > 0.0 {
        // Root lies between the degenerate edge and the first grid point.
        bisect(&f, left_edge, 1.0 + SCAN_STEP)?
    } else {
        let mut lo = 1.0 + SCAN_STEP;
        let mut hi = lo;
        loop {
            hi = (hi + SCAN_STEP).min(2.0);
            if f(hi) > 0.0 {
                break;
            }
            lo = hi;
            if hi >= 2.0 {
                return Err(Error::NonConvergent(
                    "left bracket scan failed to cross the threshold".into(),
                ));
            }
        }
        bisect(&f, lo, hi)?
    };

    // Right root in [2, inf): grid scan to 64, then geometric extension.
    let mut lo = 2.0;
    let mut hi = lo;
    let p_high = loop {
        hi = if hi < 64.0 { hi + SCAN_STEP } else { hi * 2.0 };
        if f(hi) < 0.0 {
            break bisect(&|p: f64| -f(p), lo, hi)?;
        }
        lo = hi;
        if hi > 1e12 {
            return Err(Error::NonConvergent(
                "right bracket scan failed to cross the threshold".into(),
            ));
        }
    };

    Ok(SupercriticalRange {
        p_low,
        p_high,
        threshold,
    })
}

/// Bisection on [lo, hi] with g(lo) <= 0 < g(hi), to `BISECTION_TOL` in p.
fn bisect<F: Fn(f64) -> f64>(g: &F, mut lo: f64, mut hi: f64) -> Result<f64> {
    if g(lo) > 0.0 || g(hi) <= 0.0 {
        return Err(Error::NonConvergent("bisection bracket lost the sign change".into()));
    }
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evaluates C_p and C_{p'} independently by the closed form and reports
/// the observed deviation from the symmetry identity C_p = C_{p'}.
pub fn conjugate_symmetry_check(p: PExponent) -> Result<SymmetryReport> {
    let a = compute_cp(p)?;
    let b = compute_cp(p.conjugate_exponent())?;
    Ok(SymmetryReport {
        p: p.get(),
        conjugate: p.conjugate(),
        c_p: a.c_p,
        c_p_conjugate: b.c_p,
        abs_diff: (a.c_p - b.c_p).abs(),
    })
}

/// Lower bound `2 pi (1 - eps) / (1 + eps)^2` for a norm within a factor
/// (1 +- eps) of a Hilbert norm.
pub fn remark2_bound(eps: f64) -> Result<f64> {
    if !eps.is_finite() || eps < 0.0 || eps >= 1.0 {
        return Err(Error::domain(format!(
            "eps = {eps} outside [0, 1): the equivalent-norm bound degenerates"
        )));
    }
    Ok(2.0 * PI * (1.0 - eps) / ((1.0 + eps) * (1.0 + eps)))
}

/// Table of (p, c_p_inverse) on the uniform grid p_min, p_min + step, ...
/// with floor((p_max - p_min)/step) + 1 rows.
pub fn figure_data(p_min: f64, p_max: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    if !(p_min > 1.0) {
        return Err(Error::domain(format!("grid start p_min = {p_min} must exceed 1")));
    }
    if !(p_max > p_min) || !(step > 0.0) {
        return Err(Error::domain(format!(
            "invalid grid: p_min = {p_min}, p_max = {p_max}, step = {step}"
        )));
    }
    let count = (((p_max - p_min) / step) + 1e-9).floor() as usize + 1;
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let p = p_min + i as f64 * step;
        let c = compute_cp(PExponent::new(p)?)?;
        rows.push((p, c.c_p_inverse));
    }
    Ok(rows)
}

/// CSV serialization of a figure table: optional `#` metadata lines, the
/// pinned header `p,c_p_inverse`, then decimal rows at 12 significant
/// digits, newline-terminated.
pub fn figure_csv(rows: &[(f64, f64)], metadata: &[String]) -> String {
    let mut out = String::new();
    for line in metadata {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("p,c_p_inverse\n");
    for &(p, v) in rows {
        out.push_str(&fmt_significant(p, 12));
        out.push(',');
        out.push_str(&fmt_significant(v, 12));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PI: f64 = 2.0 * PI;

    #[test]
    fn pexponent_rejects_bad_inputs() {
        assert!(PExponent::new(1.0).is_err());
        assert!(PExponent::new(0.5).is_err());
        assert!(PExponent::new(f64::NAN).is_err());
        assert!(PExponent::new(f64::INFINITY).is_err());
        assert!(PExponent::new(1.5).is_ok());
    }

    #[test]
    fn conjugate_identity_holds() {
        for &p in &[1.1, 1.5, 2.0, 3.0, 7.0, 19.5] {
            let e = PExponent::new(p).unwrap();
            assert!((1.0 / e.get() + 1.0 / e.conjugate() - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn hilbert_case_is_two_pi() {
        let c = compute_cp(PExponent::new(2.0).unwrap()).unwrap();
        assert!((c.c_p_inverse - TWO_PI).abs() < 1e-12);
        assert!((c.c_p - 1.0 / TWO_PI).abs() < 1e-14);
        assert!((c.c_p * c.c_p_inverse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_three_matches_frozen_oracle() {
        // Frozen from 40-digit evaluation of the beta-integral form, which
        // agrees with the closed form to all digits shown.
        let c = compute_cp(PExponent::new(3.0).unwrap()).unwrap();
        assert!((c.c_p_inverse - 6.093_983_998_092_345).abs() < 1e-12);
    }

    #[test]
    fn degenerate_exponent_rejected() {
        let p = PExponent::new(1.0 + 1e-10).unwrap();
        assert!(matches!(compute_cp(p), Err(Error::DegenerateExponent(_))));
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        // p = 2: B(1/2, 1/2) = pi, so both routes give 1/(2 pi).
        let q = cp_quadrature(PExponent::new(2.0).unwrap(), 1e-10).unwrap();
        let c = compute_cp(PExponent::new(2.0).unwrap()).unwrap();
        assert!((q.c_p - c.c_p).abs() <= 1e-10);
        assert_eq!(q.method, CpMethod::Quadrature);

        let q = cp_quadrature(PExponent::new(1.5).unwrap(), 1e-8).unwrap();
        let c = compute_cp(PExponent::new(1.5).unwrap()).unwrap();
        assert!((q.c_p - c.c_p).abs() <= 1e-8);

        let q = cp_quadrature(PExponent::new(3.35).unwrap(), 1e-8).unwrap();
        assert!(q.c_p_inverse > 6.0);
    }

    #[test]
    fn quadrature_rejects_bad_tolerance() {
        let p = PExponent::new(2.0).unwrap();
        assert!(cp_quadrature(p, 0.0).is_err());
        assert!(cp_quadrature(p, 1e-3).is_err());
    }

    #[test]
    fn supercritical_range_at_six() {
        let r = supercritical_range(6.0).unwrap();
        // Frozen roots from the dense-scan + bisection oracle.
        assert!((r.p_low - 1.422_495_352_661_166).abs() < 1e-8);
        assert!((r.p_high - 3.366_889_940_211_919).abs() < 1e-8);
        // The interval contains the published conservative range.
        assert!(r.p_low < 1.43 && r.p_high > 3.35);
        assert!(r.p_low < 2.0 && r.p_high > 2.0);
    }

    #[test]
    fn supercritical_range_near_peak() {
        let r = supercritical_range(TWO_PI - 1e-9).unwrap();
        assert!((r.p_low - 2.0).abs() < 1e-3);
        assert!((r.p_high - 2.0).abs() < 1e-3);
    }

    #[test]
    fn supercritical_range_rejects_out_of_band() {
        assert!(supercritical_range(TWO_PI).is_err());
        assert!(supercritical_range(7.0).is_err());
        assert!(supercritical_range(4.0).is_err());
        assert!(supercritical_range(3.0).is_err());
    }

    #[test]
    fn symmetry_check_examples() {
        let r = conjugate_symmetry_check(PExponent::new(3.0).unwrap()).unwrap();
        assert!((r.conjugate - 1.5).abs() < 1e-14);
        assert!(r.abs_diff <= 1e-12);

        let r = conjugate_symmetry_check(PExponent::new(2.0).unwrap()).unwrap();
        assert_eq!(r.abs_diff, 0.0);

        let r = conjugate_symmetry_check(PExponent::new(4.0).unwrap()).unwrap();
        assert!((r.conjugate - 4.0 / 3.0).abs() < 1e-14);
        assert!(r.abs_diff <= 1e-12);
    }

    #[test]
    fn remark2_values() {
        assert!((remark2_bound(0.0).unwrap() - TWO_PI).abs() < 1e-15);
        // Frozen: 2 pi * 0.9 / 1.21 and 2 pi * 0.5 / 2.25.
        assert!((remark2_bound(0.1).unwrap() - 4.673_443_616_910_436).abs() < 1e-12);
        assert!((remark2_bound(0.5).unwrap() - 1.396_263_401_595_464).abs() < 1e-12);
        assert!(remark2_bound(1.0).is_err());
        assert!(remark2_bound(-0.1).is_err());
    }

    #[test]
    fn endpoint_limits_approach_four() {
        assert!((cp_inverse_closed_unchecked(1.0 + 1e-6) - 4.0).abs() < 1e-3);
        assert!((cp_inverse_closed_unchecked(1e6) - 4.0).abs() < 1e-3);
    }

    #[test]
    fn unimodality_on_millistep_grid() {
        // Strictly increasing up to p = 2, strictly decreasing after, on a
        // 1e-3 grid; the only extremum is the peak at 2.
        let mut prev = cp_inverse_closed_unchecked(1.001);
        for k in 1002..=2000u32 {
            let v = cp_inverse_closed_unchecked(k as f64 / 1000.0);
            assert!(v > prev, "not increasing at p = {}", k as f64 / 1000.0);
            prev = v;
        }
        assert!((prev - TWO_PI).abs() < 1e-12);
        for k in 2001..=10_000u32 {
            let v = cp_inverse_closed_unchecked(k as f64 / 1000.0);
            assert!(v < prev, "not decreasing at p = {}", k as f64 / 1000.0);
            prev = v;
        }
    }

    #[test]
    fn figure_table_shape_and_consistency() {
        let rows = figure_data(1.05, 4.0, 0.01).unwrap();
        assert_eq!(rows.len(), ((4.0f64 - 1.05) / 0.01 + 1e-9).floor() as usize + 1);
        // Maximum row sits at p = 2 with value 2 pi.
        let (pmax, vmax) = rows
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((pmax - 2.0).abs() < 1e-9);
        assert!((vmax - TWO_PI).abs() < 1e-10);
        // Rows agree with compute_cp.
        for &(p, v) in rows.iter().step_by(37) {
            let c = compute_cp(PExponent::new(p).unwrap()).unwrap();
            assert!((v - c.c_p_inverse).abs() <= 1e-12);
        }
        // Rows above 6 are exactly those inside the supercritical interval.
        let r = supercritical_range(6.0).unwrap();
        for &(p, v) in &rows {
            assert_eq!(v > 6.0, p > r.p_low && p < r.p_high, "p = {p}");
        }
    }

    #[test]
    fn figure_table_smooth_near_peak() {
        let rows = figure_data(1.999, 2.001, 0.001).unwrap();
        assert_eq!(rows.len(), 3);
        for &(_, v) in &rows {
            assert!((v - TWO_PI).abs() < 1e-5);
        }
    }

    #[test]
    fn figure_table_rejects_degenerate_grid() {
        assert!(figure_data(1.0, 4.0, 0.01).is_err());
        assert!(figure_data(0.9, 4.0, 0.01).is_err());
        assert!(figure_data(2.0, 1.5, 0.01).is_err());
        assert!(figure_data(1.05, 4.0, 0.0).is_err());
    }

    #[test]
    fn figure_csv_format() {
        let rows = vec![(2.0, TWO_PI)];
        let csv = figure_csv(&rows, &["demo".to_string()]);
        assert_eq!(csv, "# demo\np,c_p_inverse\n2.00000000000,6.28318530718\n");
    }
}
