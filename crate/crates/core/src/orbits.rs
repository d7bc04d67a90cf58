//! Built-in Lipschitz vector fields in lp(R^n) and finite-atom L^p(M, mu),
//! fixed-step integration, minimal-period detection, empirical Lipschitz
//! estimation, and orbit certificates against the lower bounds on T * L.
//!
//! L^p(M, mu) is realized as a finite weighted atom space: the averaging
//! field only needs two disjoint sets of positive measure, and finite atoms
//! make every norm and integral exact at desk scale.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::constants::{compute_cp, PExponent};
use crate::error::Error;
use crate::pfunc::PeriodicGridFunction;
use crate::util::pow_abs;
use crate::Result;

/// Tolerance for the satisfied flags on certificate bounds.
pub const TOL_CERT: f64 = 1e-3;
/// Minimum sampled pair count for the Lipschitz estimator.
pub const MIN_PAIRS: usize = 10_000;

/// Atoms with positive masses and two disjoint index sets A and B.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasureSpace {
    weights: Vec<f64>,
    labels: Vec<String>,
    set_a: Vec<usize>,
    set_b: Vec<usize>,
}

impl FiniteMeasureSpace {
    pub fn new(
        weights: Vec<f64>,
        labels: Vec<String>,
        set_a: Vec<usize>,
        set_b: Vec<usize>,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("measure space needs at least one atom"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::domain("all atom masses must be positive"));
        }
        if labels.len() != weights.len() {
            return Err(Error::domain("label count must match atom count"));
        }
        let n = weights.len();
        if set_a.iter().chain(&set_b).any(|&i| i >= n) {
            return Err(Error::domain("subset index out of range"));
        }
        if set_a.iter().any(|i| set_b.contains(i)) {
            return Err(Error::domain("subsets A and B must be disjoint"));
        }
        Ok(Self {
            weights,
            labels,
            set_a,
            set_b,
        })
    }

    /// Two atoms labelled "a" (in A) and "b" (in B).
    pub fn two_atoms(mass_a: f64, mass_b: f64) -> Result<Self> {
        Self::new(
            vec![mass_a, mass_b],
            vec!["a".into(), "b".into()],
            vec![0],
            vec![1],
        )
    }

    /// Atoms for A then atoms for B, with the given masses.
    pub fn from_partition(masses_a: &[f64], masses_b: &[f64]) -> Result<Self> {
        let mut weights = Vec::with_capacity(masses_a.len() + masses_b.len());
        weights.extend_from_slice(masses_a);
        weights.extend_from_slice(masses_b);
        let labels = (0..weights.len()).map(|i| format!("atom{i}")).collect();
        let set_a = (0..masses_a.len()).collect();
        let set_b = (masses_a.len()..weights.len()).collect();
        Self::new(weights, labels, set_a, set_b)
    }

    pub fn atom_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_a(&self) -> &[usize] {
        &self.set_a
    }

    pub fn set_b(&self) -> &[usize] {
        &self.set_b
    }

    pub fn mass(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.weights[i]).sum()
    }
}

/// The built-in field families.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    /// dx = L y, dy = -L x on R^2.
    PlanarRotation { rate: f64 },
    /// f(z) = A z with a square matrix A (row-major).
    Linear { matrix: Vec<f64>, dim: usize },
    /// The two-set averaging field on a finite measure space.
    Remark1Averaging { space: FiniteMeasureSpace },
}

/// A vector field together with the lp norm it is measured in and, when
/// known analytically, its Lipschitz constant in that norm.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    kind: FieldKind,
    norm_p: PExponent,
    nominal_lipschitz: Option<f64>,
}

impl FieldSpec {
    /// The planar rotation dx = L y, dy = -L x. An lp isometry scaled by
    /// |L|, so the Lipschitz constant is |L| in every lp norm.
    pub fn planar_rotation(rate: f64, norm_p: PExponent) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::domain("rotation rate must be finite"));
        }
        Ok(Self {
            kind: FieldKind::PlanarRotation { rate },
            norm_p,
            nominal_lipschitz: Some(rate.abs()),
        })
    }

    /// A general linear field. The analytic constant is attached for
    /// diagonal matrices (max |d_ii| in every lp norm) and for p = 2
    /// (spectral norm by power iteration).
    pub fn linear(matrix: &[Vec<f64>], norm_p: PExponent) -> Result<Self> {
        let dim = matrix.len();
        if dim == 0 {
            return Err(Error::domain("empty matrix"));
        }
        let mut flat = Vec::with_capacity(dim * dim);
        for row in matrix {
            if row.len() != dim {
                return Err(Error::domain("matrix must be square"));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::domain("matrix entries must be finite"));
                }
                flat.push(v);
            }
        }
        let diagonal = (0..dim).all(|i| {
            (0..dim).all(|j| i == j || flat[i * dim + j] == 0.0)
        });
        let nominal = if diagonal {
            Some(
                (0..dim)
                    .map(|i| flat[i * dim + i].abs())
                    .fold(0.0f64, f64::max),
            )
        } else if norm_p.is_two() {
            Some(spectral_norm(&flat, dim))
        } else {
            None
        };
        Ok(Self {
            kind: FieldKind::Linear { matrix: flat, dim },
            norm_p,
            nominal_lipschitz: nominal,
        })
    }

    /// The averaging field f(z) = -(chi_B / mu(A)) int_A z + (chi_A / mu(B)) int_B z.
    ///
    /// For mu(A) = mu(B) the Holder chain gives Lipschitz constant 1 in
    /// every lp norm; for unequal masses no analytic constant is attached
    /// and the estimator measures it instead.
    pub fn remark1_averaging(space: FiniteMeasureSpace, norm_p: PExponent) -> Result<Self> {
        if space.set_a.is_empty() || space.set_b.is_empty() {
            return Err(Error::domain("averaging field needs nonempty A and B"));
        }
        let ma = space.mass(&space.set_a);
        let mb = space.mass(&space.set_b);
        let nominal = if (ma - mb).abs() <= 1e-12 * (ma + mb) {
            Some(1.0)
        } else {
            None
        };
        Ok(Self {
            kind: FieldKind::Remark1Averaging { space },
            norm_p,
            nominal_lipschitz: nominal,
        })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn norm_exponent(&self) -> PExponent {
        self.norm_p
    }

    /// Analytic Lipschitz constant in the field's norm, when known.
    pub fn nominal_lipschitz(&self) -> Option<f64> {
        self.nominal_lipschitz
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            FieldKind::PlanarRotation { .. } => 2,
            FieldKind::Linear { dim, .. } => *dim,
            FieldKind::Remark1Averaging { space } => space.atom_count(),
        }
    }

    /// Evaluates the field at x into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            FieldKind::PlanarRotation { rate } => {
                out[0] = rate * x[1];
                out[1] = -rate * x[0];
            }
            FieldKind::Linear { matrix, dim } => {
                for i in 0..*dim {
                    out[i] = matrix[i * dim..(i + 1) * dim]
                        .iter()
                        .zip(x)
                        .map(|(a, v)| a * v)
                        .sum();
                }
            }
            FieldKind::Remark1Averaging { space } => {
                let int_a: f64 = space.set_a.iter().map(|&j| space.weights[j] * x[j]).sum();
                let int_b: f64 = space.set_b.iter().map(|&j| space.weights[j] * x[j]).sum();
                let ma = space.mass(&space.set_a);
                let mb = space.mass(&space.set_b);
                out.fill(0.0);
                for &i in &space.set_b {
                    out[i] = -int_a / ma;
                }
                for &i in &space.set_a {
                    out[i] = int_b / mb;
                }
            }
        }
    }

    /// The norm the field is measured in: weighted lp over atoms for the
    /// averaging field, plain lp otherwise.
    pub fn norm(&self, v: &[f64]) -> f64 {
        let p = self.norm_p.get();
        match &self.kind {
            FieldKind::Remark1Averaging { space } => v
                .iter()
                .zip(&space.weights)
                .map(|(&x, &w)| w * pow_abs(x, p))
                .sum::<f64>()
                .powf(1.0 / p),
            _ => v.iter().map(|&x| pow_abs(x, p)).sum::<f64>().powf(1.0 / p),
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.norm(&diff)
    }

    /// Structured description for certificate payloads.
    pub fn descriptor(&self) -> serde_json::Value {
        match &self.kind {
            FieldKind::PlanarRotation { rate } => json!({
                "kind": "planar_rotation",
                "params": { "L": rate },
            }),
            FieldKind::Linear { matrix, dim } => json!({
                "kind": "linear",
                "params": {
                    "dim": dim,
                    "matrix": matrix,
                },
            }),
            FieldKind::Remark1Averaging { space } => json!({
                "kind": "remark1_averaging",
                "params": {
                    "weights": space.weights,
                    "set_a": space.set_a,
                    "set_b": space.set_b,
                },
            }),
        }
    }
}

/// Spectral norm of a dim x dim matrix by power iteration on A^T A.
fn spectral_norm(flat: &[f64], dim: usize) -> f64 {
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + (i as f64) * 1e-3).collect();
    let mut av = vec![0.0; dim];
    let mut atav = vec![0.0; dim];
    let mut lambda = 0.0;
    for _ in 0..500 {
        for i in 0..dim {
            av[i] = flat[i * dim..(i + 1) * dim]
                .iter()
                .zip(&v)
                .map(|(a, x)| a * x)
                .sum();
        }
        for i in 0..dim {
            atav[i] = (0..dim).map(|j| flat[j * dim + i] * av[j]).sum();
        }
        let norm = atav.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        for (vi, ai) in v.iter_mut().zip(&atav) {
            *vi = ai / norm;
        }
        if (next - lambda).abs() <= 1e-14 * next.max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// A fixed-step trajectory: steps + 1 states of dimension `dim`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    states: Vec<f64>,
    dim: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Periodic grid view dropping the final (duplicate) state; suitable for
    /// the grid-function CSV format when the trajectory spans one period.
    pub fn to_grid_function(&self) -> Result<PeriodicGridFunction> {
        let n = self.len() - 1;
        let period = self.times[n];
        PeriodicGridFunction::new(self.states[..n * self.dim].to_vec(), n, self.dim, period)
    }
}

/// Classical fixed-step fourth-order integration. For linear fields the
/// global error is O(dt^4) against the matrix-exponential solution.
pub fn integrate(field: &FieldSpec, x0: &[f64], dt: f64, steps: usize) -> Result<Trajectory> {
    if x0.len() != field.dim() {
        return Err(Error::domain(format!(
            "initial state has dimension {}, field needs {}",
            x0.len(),
            field.dim()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("step size {dt} must be positive")));
    }
    if steps == 0 {
        return Err(Error::domain("step count must be at least 1"));
    }
    let dim = field.dim();
    let mut states = Vec::with_capacity((steps + 1) * dim);
    let mut times = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    states.extend_from_slice(&x);
    times.push(0.0);

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for step in 1..=steps {
        field.eval(&x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        field.eval(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        field.eval(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        field.eval(&tmp, &mut k4);
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        states.extend_from_slice(&x);
        times.push(step as f64 * dt);
    }
    Ok(Trajectory { times, states, dim })
}

/// One RK4 step used by the period refinement.
fn rk4_step(field: &FieldSpec, x: &mut [f64], dt: f64) {
    let dim = x.len();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    field.eval(x, &mut k1);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    field.eval(&tmp, &mut k2);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    field.eval(&tmp, &mut k3);
    for i in 0..dim {
        tmp[i] = x[i] + dt * k3[i];
    }
    field.eval(&tmp, &mut k4);
    for i in 0..dim {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Flow map over a short span by `substeps` RK4 steps from a given state.
fn flow_from(field: &FieldSpec, start: &[f64], span: f64, substeps: usize) -> Vec<f64> {
    let mut x = start.to_vec();
    let dt = span / substeps as f64;
    if span > 0.0 {
        for _ in 0..substeps {
            rk4_step(field, &mut x, dt);
        }
    }
    x
}

const COARSE_STEPS: usize = 200_000;
const REFINE_SUBSTEPS: usize = 64;
const REFINE_TIME_TOL: f64 = 1e-9;
const MAX_DIVISOR: usize = 16;

/// Smallest T in (0, T_max] with |x(T) - x0| <= tol, by return-map closure:
/// a coarse scan locates candidate dips of the closure distance, each dip is
/// refined to 1e-9 in time, and candidate divisors T/k are tested so a
/// k-fold multiple is never reported as minimal.
pub fn detect_period(field: &FieldSpec, x0: &[f64], tol: f64, t_max: f64) -> Result<f64> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::domain("closure tolerance must be positive"));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::domain("search horizon must be positive"));
    }
    let dt = t_max / COARSE_STEPS as f64;
    let traj = integrate(field, x0, dt, COARSE_STEPS)?;
    let dist: Vec<f64> = (0..traj.len()).map(|k| field.distance(traj.state(k), x0)).collect();

    let mut speed = vec![0.0; field.dim()];
    let mut v_max = 0.0f64;
    for k in 0..traj.len() {
        field.eval(traj.state(k), &mut speed);
        v_max = v_max.max(field.norm(&speed));
    }
    if v_max == 0.0 {
        return Err(Error::NoPeriodFound { t_max });
    }
    // A dip can only register on the grid if the state got this close.
    let dip_threshold = tol.max(3.0 * v_max * dt);

    // The orbit must first leave the closure ball, otherwise x0 is an
    // equilibrium (or the horizon is too short to resolve the motion).
    let escape = match dist.iter().position(|&d| d > dip_threshold) {
        Some(k) => k,
        None => return Err(Error::NoPeriodFound { t_max }),
    };

    let mut k = escape.max(1) + 1;
    while k + 1 < traj.len() {
        if dist[k] <= dip_threshold && dist[k] <= dist[k - 1] && dist[k] <= dist[k + 1] {
            let (t_min, d_min) = refine_dip(field, &traj, x0, k, dt);
            if d_min <= tol {
                return Ok(reduce_to_minimal(field, x0, t_min, tol));
            }
            k += 2;
        } else {
            k += 1;
        }
    }
    Err(Error::NoPeriodFound { t_max })
}

/// Golden-section refinement of a closure-distance dip around grid index k.
fn refine_dip(
    field: &FieldSpec,
    traj: &Trajectory,
    x0: &[f64],
    k: usize,
    dt: f64,
) -> (f64, f64) {
    let base_state = traj.state(k - 1);
    let t_base = traj.times[k - 1];
    let eval = |offset: f64| -> f64 {
        let x = flow_from(field, base_state, offset, REFINE_SUBSTEPS);
        field.distance(&x, x0)
    };
    let mut lo = 0.0f64;
    let mut hi = 2.0 * dt;
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut m1 = hi - INV_PHI * (hi - lo);
    let mut m2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(m1);
    let mut f2 = eval(m2);
    while hi - lo > REFINE_TIME_TOL {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - INV_PHI * (hi - lo);
            f1 = eval(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + INV_PHI * (hi - lo);
            f2 = eval(m2);
        }
    }
    let offset = 0.5 * (lo + hi);
    (t_base + offset, eval(offset))
}

/// Tests divisors T/k of a detected closure time and returns the smallest
/// divisor that still closes the orbit.
fn reduce_to_minimal(field: &FieldSpec, x0: &[f64], period: f64, tol: f64) -> f64 {
    let closure_at = |t: f64| -> f64 {
        let steps = ((t / 1e-3).ceil() as usize).clamp(1_000, 200_000);
        let x = flow_from(field, x0, t, steps);
        field.distance(&x, x0)
    };
    for k in (2..=MAX_DIVISOR).rev() {
        let candidate = period / k as f64;
        if closure_at(candidate) <= tol {
            return candidate;
        }
    }
    period
}

/// A bounded sampling region: anchor points (typically orbit states) with a
/// uniform inflation radius, and the number of random pairs to draw.
#[derive(Debug, Clone)]
pub struct CloudSpec {
    pub anchors: Vec<Vec<f64>>,
    pub radius: f64,
    pub pairs: usize,
}

impl CloudSpec {
    /// Anchors subsampled from a trajectory (at most 256), inflated by
    /// `radius_factor` times the trajectory's maximum excursion from its
    /// first state.
    pub fn from_trajectory(traj: &Trajectory, field: &FieldSpec, radius_factor: f64, pairs: usize) -> Self {
        let stride = (traj.len() / 256).max(1);
        let anchors: Vec<Vec<f64>> = (0..traj.len())
            .step_by(stride)
            .map(|k| traj.state(k).to_vec())
            .collect();
        let x0 = traj.state(0);
        let extent = (0..traj.len())
            .map(|k| field.distance(traj.state(k), x0))
            .fold(0.0f64, f64::max);
        CloudSpec {
            anchors,
            radius: radius_factor * extent.max(1e-6),
            pairs,
        }
    }
}

/// Supremum over sampled pairs of |f(x) - f(y)| / |x - y| in the field's
/// norm: a deterministic, seed-reproducible LOWER bound on the true
/// Lipschitz constant. Nested in the pair count: with a fixed seed, the
/// first k pairs of a larger run are exactly the k-pair run.
pub fn estimate_lipschitz(field: &FieldSpec, cloud: &CloudSpec, seed: u64) -> Result<f64> {
    if cloud.pairs < MIN_PAIRS {
        return Err(Error::domain(format!(
            "pair count {} below the minimum {MIN_PAIRS}",
            cloud.pairs
        )));
    }
    if cloud.anchors.is_empty() {
        return Err(Error::domain("sampling cloud has no anchor points"));
    }
    let dim = field.dim();
    if cloud.anchors.iter().any(|a| a.len() != dim) {
        return Err(Error::domain("anchor dimension mismatch"));
    }
    let degenerate_anchors = cloud
        .anchors
        .iter()
        .all(|a| a.iter().zip(&cloud.anchors[0]).all(|(x, y)| x == y));
    if degenerate_anchors && cloud.radius == 0.0 {
        return Err(Error::domain(
            "degenerate sampling cloud: coincident anchors with zero radius",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut fx = vec![0.0; dim];
    let mut fy = vec![0.0; dim];
    let mut best = 0.0f64;
    let mut draw = |rng: &mut ChaCha8Rng, point: &mut [f64]| {
        let anchor = &cloud.anchors[rng.random_range(0..cloud.anchors.len())];
        for (i, slot) in point.iter_mut().enumerate() {
            *slot = anchor[i] + rng.random_range(-1.0..1.0) * cloud.radius;
        }
    };
    for _ in 0..cloud.pairs {
        draw(&mut rng, &mut x);
        draw(&mut rng, &mut y);
        let den = field.distance(&x, &y);
        if den == 0.0 {
            continue;
        }
        field.eval(&x, &mut fx);
        field.eval(&y, &mut fy);
        let num = field.distance(&fx, &fy);
        let ratio = num / den;
        if ratio > best {
            best = ratio;
        }
    }
    Ok(best)
}

/// One verified bound entry on a certificate.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub satisfied: bool,
}

/// Tolerances recorded on a certificate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertTolerances {
    pub tol_cert: f64,
    pub period_tol: f64,
}

/// Machine-checkable record: period, empirical Lipschitz constant, their
/// product, and the applicable lower bounds with satisfied flags.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitCertificate {
    pub field: serde_json::Value,
    pub p: f64,
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "L_hat")]
    pub lipschitz_hat: f64,
    #[serde(rename = "TL")]
    pub product_tl: f64,
    pub bounds: Vec<BoundCheck>,
    pub tolerances: CertTolerances,
    /// Analytic constant when the field has one; cross-checks the estimate.
    pub lipschitz_nominal: Option<f64>,
}

/// Knobs for orbit certification.
#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub t_max: f64,
    pub period_tol: f64,
    pub pairs: usize,
    pub seed: u64,
    pub radius_factor: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            t_max: 100.0,
            period_tol: 1e-7,
            pairs: 20_000,
            seed: 0,
            radius_factor: 0.5,
        }
    }
}

/// Detects the period, estimates the Lipschitz constant on an orbit tube,
/// and evaluates every applicable lower bound on T * L: the universal
/// Banach bound 6, the Hilbert bound 2 pi when p = 2, and the Wirtinger
/// bound C_p^{-1}.
pub fn certify_orbit(field: &FieldSpec, x0: &[f64], opts: CertifyOptions) -> Result<OrbitCertificate> {
    let period = detect_period(field, x0, opts.period_tol, opts.t_max)?;

    // One Richardson halving check on the period integration.
    let coarse = flow_from(field, x0, period, 10_000);
    let fine = flow_from(field, x0, period, 20_000);
    let scale = field.norm(x0).max(1.0);
    if field.distance(&coarse, &fine) > 1e-6 * scale {
        return Err(Error::NonConvergent(
            "integration failed the step-halving consistency check".into(),
        ));
    }

    let steps = 2_048;
    let traj = integrate(field, x0, period / steps as f64, steps)?;
    let cloud = CloudSpec::from_trajectory(&traj, field, opts.radius_factor, opts.pairs);
    let lipschitz_hat = estimate_lipschitz(field, &cloud, opts.seed)?;
    if let Some(nominal) = field.nominal_lipschitz() {
        if lipschitz_hat > nominal * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::NonConvergent(format!(
                "sampled Lipschitz ratio {lipschitz_hat} exceeds the analytic constant {nominal}"
            )));
        }
    }

    let product_tl = period * lipschitz_hat;
    let p = field.norm_exponent();
    let mut bounds = vec![BoundCheck {
        name: "banach".into(),
        value: 6.0,
        satisfied: product_tl >= 6.0 - TOL_CERT,
    }];
    if p.is_two() {
        bounds.push(BoundCheck {
            name: "hilbert".into(),
            value: 2.0 * PI,
            satisfied: product_tl >= 2.0 * PI - TOL_CERT,
        });
    }
    let wirtinger = compute_cp(p)?.c_p_inverse;
    bounds.push(BoundCheck {
        name: "wirtinger".into(),
        value: wirtinger,
        satisfied: product_tl >= wirtinger - TOL_CERT,
    });

    Ok(OrbitCertificate {
        field: field.descriptor(),
        p: p.get(),
        period,
        lipschitz_hat,
        product_tl,
        bounds,
        tolerances: CertTolerances {
            tol_cert: TOL_CERT,
            period_tol: opts.period_tol,
        },
        lipschitz_nominal: field.nominal_lipschitz(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PI: f64 = 2.0 * PI;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    #[test]
    fn rotation_field_values() {
        let field = FieldSpec::planar_rotation(1.0, p(2.0)).unwrap();
        let mut out = [0.0; 2];
        field.eval(&[1.0, 0.0], &mut out);
        assert_eq!(out, [0.0, -1.0]);
        assert_eq!(field.nominal_lipschitz(), Some(1.0));
    }

    #[test]
    fn remark1_two_atom_field_is_swap_with_sign() {
        let space = FiniteMeasureSpace::two_atoms(1.0, 1.0).unwrap();
        let field = FieldSpec::remark1_averaging(space, p(2.0)).unwrap();
        let mut out = [0.0; 2];
        field.eval(&[0.3, -0.7], &mut out);
        assert!((out[0] - (-0.7)).abs() < 1e-15);
        assert!((out[1] - (-0.3)).abs() < 1e-15);
        assert_eq!(field.nominal_lipschitz(), Some(1.0));
    }

    #[test]
    fn linear_zero_matrix_is_zero_field() {
        let field = FieldSpec::linear(&[vec![0.0, 0.0], vec![0.0, 0.0]], p(2.0)).unwrap();
        let mut out = [0.0; 2];
        field.eval(&[5.0, -3.0], &mut out);
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn field_construction_guards() {
        assert!(FieldSpec::linear(&[], p(2.0)).is_err());
        assert!(FieldSpec::linear(&[vec![1.0, 2.0]], p(2.0)).is_err());
        let space = FiniteMeasureSpace::new(
            vec![1.0, 1.0],
            vec!["a".into(), "b".into()],
            vec![],
            vec![1],
        )
        .unwrap();
        assert!(FieldSpec::remark1_averaging(space, p(2.0)).is_err());
        assert!(FiniteMeasureSpace::two_atoms(0.0, 1.0).is_err());
        assert!(FiniteMeasureSpace::new(
            vec![1.0, 1.0],
            vec!["a".into(), "b".into()],
            vec![0],
            vec![0]
        )
        .is_err());
    }

    #[test]
    fn integrate_quarter_turn() {
        let field = FieldSpec::planar_rotation(1.0, p(2.0)).unwrap();
        let steps = (PI / 2.0 / 1e-3).round() as usize;
        let traj = integrate(&field, &[1.0, 0.0], PI / 2.0 / steps as f64, steps).unwrap();
        let end = traj.last_state();
        assert!((end[0] - 0.0).abs() < 1e-9 && (end[1] - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn integrate_full_rotation_returns() {
        let field = FieldSpec::planar_rotation(1.0, p(2.0)).unwrap();
        let steps = 20_000;
        let traj = integrate(&field, &[1.0, 0.0], TWO_PI / steps as f64, steps).unwrap();
        assert!(field.distance(traj.last_state(), &[1.0, 0.0]) < 1e-8);
    }

    #[test]
    fn integrate_remark1_returns() {
        let space = FiniteMeasureSpace::two_atoms(1.0, 1.0).unwrap();
        let field = FieldSpec::remark1_averaging(space, p(3.0)).unwrap();
        let steps = 20_000;
        let traj = integrate(&field, &[-1.0, 0.0], TWO_PI / steps as f64, steps).unwrap();
        assert!(field.distance(traj.last_state(), &[-1.0, 0.0]) < 1e-8);
    }

    #[test]
    fn integrate_is_fourth_order_on_linear_fields() {
        let field = FieldSpec::linear(&[vec![-0.5, 0.0], vec![0.0, 0.3]], p(2.0)).unwrap();
        let x0 = [1.0, 1.0];
        let t = 2.0;
        let exact = [(-0.5f64 * t).exp(), (0.3f64 * t).exp()];
        let mut errors = Vec::new();
        for &steps in &[100usize, 200, 400] {
            let traj = integrate(&field, &x0, t / steps as f64, steps).unwrap();
            let end = traj.last_state();
            let err = ((end[0] - exact[0]).powi(2) + (end[1] - exact[1]).powi(2)).sqrt();
            errors.push(err);
        }
        // Halving dt should reduce the error by about 16.
        assert!(errors[0] / errors[1] > 12.0);
        assert!(errors[1] / errors[2] > 12.0);
    }

    #[test]
    fn integrate_aborts_on_overflow() {
        let field = FieldSpec::linear(&[vec![100.0]], p(2.0)).unwrap();
        let err = integrate(&field, &[1.0], 10.0, 500).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }));
    }

    #[test]
    fn detect_period_rotation() {
        let field = FieldSpec::planar_rotation(1.0, p(2.0)).unwrap();
        let t = detect_period(&field, &[1.0, 0.0], 1e-7, 10.0).unwrap();
        assert!((t - TWO_PI).abs() < 1e-6, "t = {t}");

        let field = FieldSpec::planar_rotation(2.0, p(2.0)).unwrap();
        let t = detect_period(&field, &[1.0, 0.0], 1e-7, 10.0).unwrap();
        assert!((t - PI).abs() < 1e-6, "t = {t}");
    }

    #[test]
    fn detect_period_remark1() {
        let space = FiniteMeasureSpace::two_atoms(1.0, 1.0).unwrap();
        let field = FieldSpec::remark1_averaging(space, p(1.5)).unwrap();
        let t = detect_period(&field, &[-1.0, 0.0], 1e-7, 10.0).unwrap();
        assert!((t - TWO_PI).abs() < 1e-6, "t = {t}");
    }

    #[test]
    fn detect_period_requires_motion() {
        let field = FieldSpec::linear(&[vec![0.0, 0.0], vec![0.0, 0.0]], p(2.0)).unwrap();
        assert!(matches!(
            detect_period(&field, &[1.0, 0.0], 1e-7, 10.0),
            Err(Error::NoPeriodFound { .. })
        ));
    }

    #[test]
    fn detect_period_unbounded_orbit() {
        let field = FieldSpec::linear(&[vec![1.0, 0.0], vec![0.0, 1.0]], p(2.0)).unwrap();
        assert!(detect_period(&field, &[1.0, 0.0], 1e-7, 10.0).is_err());
    }

    fn unit_square_cloud(pairs: usize) -> CloudSpec {
        CloudSpec {
            anchors: vec![vec![0.0, 0.0]],
            radius: 1.0,
            pairs,
        }
    }

    #[test]
    fn lipschitz_rotation_is_exactly_the_rate() {
        for pv in [1.5, 2.0, 3.0] {
            let field = FieldSpec::planar_rotation(1.0, p(pv)).unwrap();
            let l = estimate_lipschitz(&field, &unit_square_cloud(MIN_PAIRS), 1).unwrap();
            assert!((l - 1.0).abs() <= 1e-12, "p = {pv}: {l}");
        }
    }

    #[test]
    fn lipschitz_remark1_never_exceeds_one() {
        for pv in [1.2, 1.5, 2.0, 3.0, 7.0] {
            let space = FiniteMeasureSpace::from_partition(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
            let field = FieldSpec::remark1_averaging(space, p(pv)).unwrap();
            let cloud = CloudSpec {
                anchors: vec![vec![0.0; 4]],
                radius: 1.0,
                pairs: MIN_PAIRS,
            };
            let l = estimate_lipschitz(&field, &cloud, 3).unwrap();
            assert!(l <= 1.0 + 1e-12, "p = {pv}: {l}");
        }
    }

    #[test]
    fn lipschitz_diagonal_matrix() {
        let field = FieldSpec::linear(&[vec![1.0, 0.0], vec![0.0, 3.0]], p(2.0)).unwrap();
        assert!((field.nominal_lipschitz().unwrap() - 3.0).abs() < 1e-12);
        let l = estimate_lipschitz(&field, &unit_square_cloud(200_000), 5).unwrap();
        assert!((l - 3.0).abs() <= 1e-6, "sampled {l}");
    }

    #[test]
    fn spectral_norm_cross_check() {
        // Non-diagonal 2x2 with known singular values: [[3, 1], [0, 2]]
        // has A^T A eigenvalues (7 +- sqrt(13 + 36))/... computed directly.
        let field = FieldSpec::linear(&[vec![3.0, 1.0], vec![0.0, 2.0]], p(2.0)).unwrap();
        let sigma = field.nominal_lipschitz().unwrap();
        // Frozen from the characteristic polynomial of A^T A:
        // lambda^2 - 14 lambda + 36 = 0, sigma = sqrt((14 + sqrt(52))/2).
        let expected = ((14.0 + 52.0f64.sqrt()) / 2.0).sqrt();
        assert!((sigma - expected).abs() < 1e-9);
    }

    #[test]
    fn lipschitz_estimator_is_nested_monotone() {
        let field = FieldSpec::linear(&[vec![1.0, 0.5], vec![0.0, 2.0]], p(3.0)).unwrap();
        let l1 = estimate_lipschitz(&field, &unit_square_cloud(10_000), 9).unwrap();
        let l2 = estimate_lipschitz(&field, &unit_square_cloud(20_000), 9).unwrap();
        assert!(l1 <= l2 + 1e-15);
    }

    #[test]
    fn lipschitz_estimator_guards() {
        let field = FieldSpec::planar_rotation(1.0, p(2.0)).unwrap();
        assert!(estimate_lipschitz(&field, &unit_square_cloud(100), 0).is_err());
        let degenerate = CloudSpec {
            anchors: vec![vec![1.0, 2.0], vec![1.0, 2.0]],
            radius: 0.0,
            pairs: MIN_PAIRS,
        };
        assert!(estimate_lipschitz(&field, &degenerate, 0).is_err());
    }

    #[test]
    fn certify_rotation_hilbert_tight() {
        let field = FieldSpec::planar_rotation(1.0, p(2.0)).unwrap();
        let cert = certify_orbit(&field, &[1.0, 0.0], CertifyOptions::default()).unwrap();
        assert!((cert.lipschitz_hat - 1.0).abs() <= 1e-12);
        assert!((cert.product_tl - TWO_PI).abs() < 1e-4);
        assert!(cert.bounds.iter().all(|b| b.satisfied));
        let hilbert = cert.bounds.iter().find(|b| b.name == "hilbert").unwrap();
        assert!((cert.product_tl - hilbert.value).abs() <= TOL_CERT);
    }

    #[test]
    fn certify_remark1_beats_wirtinger() {
        for pv in [1.5, 2.0, 3.0] {
            let space = FiniteMeasureSpace::two_atoms(1.0, 1.0).unwrap();
            let field = FieldSpec::remark1_averaging(space, p(pv)).unwrap();
            let cert = certify_orbit(&field, &[-1.0, 0.0], CertifyOptions::default()).unwrap();
            assert!((cert.product_tl - TWO_PI).abs() < 1e-4, "p = {pv}");
            assert!(cert.bounds.iter().all(|b| b.satisfied), "p = {pv}");
            let w = cert.bounds.iter().find(|b| b.name == "wirtinger").unwrap();
            assert!(cert.product_tl >= w.value - TOL_CERT);
        }
    }

    #[test]
    fn certify_is_scale_invariant_in_the_rate() {
        let mut tls = Vec::new();
        for &rate in &[0.1, 1.0, 10.0] {
            let field = FieldSpec::planar_rotation(rate, p(1.5)).unwrap();
            let cert = certify_orbit(&field, &[1.0, 0.0], CertifyOptions::default()).unwrap();
            assert!((cert.period - TWO_PI / rate).abs() < 1e-5 / rate);
            tls.push(cert.product_tl);
        }
        for w in tls.windows(2) {
            assert!((w[0] - w[1]).abs() <= 1e-6);
        }
    }

    #[test]
    fn certificate_serializes_with_pinned_keys() {
        let field = FieldSpec::planar_rotation(1.0, p(2.0)).unwrap();
        let cert = certify_orbit(&field, &[1.0, 0.0], CertifyOptions::default()).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        for key in ["\"field\"", "\"p\"", "\"T\"", "\"L_hat\"", "\"TL\"", "\"bounds\"", "\"tolerances\""] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
    }
}
