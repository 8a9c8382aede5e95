//! Construction of a Thompson element within `epsilon` of a diffeomorphism.
//!
//! The domain is cut at `xi_i = i / n` with `n = 2^Delta`, and each image
//! `f(xi_i)` is replaced by a dyadic `eta_i` slightly above it, taken from
//!
//! ```text
//! I_i = (max{f(xi_(i-1)) + delta, f(xi_i)}, f(xi_i) + delta).
//! ```
//!
//! Consecutive points `(xi_i, eta_i)` are joined by dyadic interpolations.
//! Since `eta_i > f(xi_i)` and `eta_(i+1) < f(xi_(i+1)) + delta`, monotonicity
//! gives `|g - f| <= S / n + delta < epsilon` on every cell.

use crate::dyadic::{find_dyadic_in, Dyadic};
use crate::error::ApproxError;
use crate::funcspec::{DiffeoSpec, DEFAULT_POSITIVITY_TOL, DEFAULT_VALIDATION_GRID};
use crate::interp::dyadic_interpolation;
use crate::plmap::{PLMap, Point, Space};

/// Grid used to estimate `max f'` when the caller gives no bound.
pub const DEFAULT_DERIVATIVE_GRID: usize = 4096;
/// Multiplier applied to the sampled maximum of `f'`.
pub const DERIVATIVE_SAFETY: f64 = 1.25;
/// Largest supported `Delta`; `n = 2^Delta` cells are materialized.
pub const MAX_DELTA: u32 = 28;
/// `I_i` is shrunk by `width * 2^-SHRINK_BITS` on each side before picking `eta_i`.
pub const SHRINK_BITS: i32 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxParams {
    pub space: Space,
    pub epsilon: f64,
    /// Derivative bound `S >= max f'`.
    pub s: f64,
    /// `Delta = ceil(-log2(epsilon / 3S))`.
    pub delta_exponent: u32,
    /// `n = 2^Delta`.
    pub n: u64,
    /// `delta`, the upward offset allowed for `eta_i`.
    pub delta: f64,
    pub xi: Vec<Dyadic>,
    pub eta: Vec<Dyadic>,
    /// Sampled `f(xi_i)`; for circles `f(xi_n)` is `f(xi_0) + 1`.
    pub f_values: Vec<f64>,
    /// `I_i` for `i = 1..n-1`, in order; circles put the interval used for
    /// `eta_0` in front.
    pub intervals: Vec<(f64, f64)>,
    /// Total number of interpolation pieces before collinear points are
    /// merged.
    pub interpolation_pieces: u64,
}

#[derive(Debug, Clone)]
pub struct Approximation {
    pub g: PLMap,
    pub params: ApproxParams,
}

impl Approximation {
    /// Certification grid: `max(4096, 4 * pieces, 4 * n)`. The `4 * n` term
    /// keeps the bracket width (about `S / grid`) below `epsilon / 12`.
    pub fn certification_grid(&self) -> usize {
        let n = usize::try_from(self.params.n).unwrap_or(usize::MAX);
        4096.max(self.g.pieces().saturating_mul(4)).max(n.saturating_mul(4))
    }
}

/// `(Delta, n)` with `Delta = ceil(log2(3S / epsilon))` and `n = 2^Delta`.
pub fn compute_params(epsilon: f64, s: f64) -> Result<(u32, u64), ApproxError> {
    check_epsilon(epsilon)?;
    if !(s >= 1.0) || !s.is_finite() {
        return Err(ApproxError::ParameterOutOfRange(format!(
            "S must be finite and >= 1, got {s}"
        )));
    }
    let target = 3.0 * s / epsilon;
    // smallest D with 2^D >= target
    let mut delta = target.log2().ceil().max(1.0) as i32;
    while 2f64.powi(delta) < target {
        delta += 1;
    }
    while delta > 1 && 2f64.powi(delta - 1) >= target {
        delta -= 1;
    }
    let delta = delta as u32;
    if delta > MAX_DELTA {
        return Err(ApproxError::ParameterOutOfRange(format!(
            "Delta = {delta} exceeds the supported maximum {MAX_DELTA}"
        )));
    }
    Ok((delta, 1u64 << delta))
}

fn check_epsilon(epsilon: f64) -> Result<(), ApproxError> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(ApproxError::EpsilonOutOfRange(epsilon))
    }
}

/// `max(1, 1.25 * max f')` over `grid_size + 1` uniform samples.
pub fn estimate_derivative_max(f: &DiffeoSpec, grid_size: usize) -> Result<f64, ApproxError> {
    let n = grid_size.max(1);
    let mut max = f64::NEG_INFINITY;
    for i in 0..=n {
        max = max.max(f.derivative(i as f64 / n as f64)?);
    }
    Ok((max * DERIVATIVE_SAFETY).max(1.0))
}

fn derivative_bound(f: &DiffeoSpec) -> Result<f64, ApproxError> {
    match f.derivative_bound {
        Some(s) => Ok(s),
        None => estimate_derivative_max(f, DEFAULT_DERIVATIVE_GRID),
    }
}

/// A dyadic strictly inside `(lo, hi)`, preferring the inner part of the
/// interval.
fn choose_eta(lo: f64, hi: f64) -> Result<Dyadic, ApproxError> {
    if !(lo < hi) {
        return Err(ApproxError::ConstructionFailure(format!("empty interval ({lo}, {hi})")));
    }
    let (lo_exact, hi_exact) = (Dyadic::from_f64(lo).unwrap(), Dyadic::from_f64(hi).unwrap());
    let width = hi - lo;
    for bits in [SHRINK_BITS, 2 * SHRINK_BITS] {
        let margin = width * 2f64.powi(-bits);
        let (p, q) = (lo + margin, hi - margin);
        if p < q {
            if let Ok(eta) = find_dyadic_in(p, q) {
                if lo_exact < eta && eta < hi_exact {
                    return Ok(eta);
                }
            }
        }
    }
    find_dyadic_in(lo, hi).map_err(|e| ApproxError::ConstructionFailure(e.to_string()))
}

fn sample_values(f: &DiffeoSpec, n: u64) -> Result<Vec<f64>, ApproxError> {
    (0..=n).map(|i| Ok(f.value(i as f64 / n as f64)?)).collect()
}

fn check_increasing(values: &[f64]) -> Result<(), ApproxError> {
    match values.windows(2).position(|w| !(w[0] < w[1])) {
        None => Ok(()),
        Some(i) => Err(ApproxError::ConstructionFailure(format!(
            "sampled values not increasing at xi_{}",
            i + 1
        ))),
    }
}

/// Chosen `eta` values with the intervals they came from.
type EtaChoice = (Vec<Dyadic>, Vec<(f64, f64)>);

/// Picks `eta_1, ..., eta_(n-1)` from the intervals `I_i`.
fn interior_etas(fx: &[f64], delta: f64) -> Result<EtaChoice, ApproxError> {
    let n = fx.len() - 1;
    let mut etas = Vec::with_capacity(n - 1);
    let mut intervals = Vec::with_capacity(n - 1);
    for i in 1..n {
        let lo = (fx[i - 1] + delta).max(fx[i]);
        let hi = fx[i] + delta;
        if !(lo < hi) {
            return Err(ApproxError::ConstructionFailure(format!(
                "I_{i} = ({lo}, {hi}) is empty"
            )));
        }
        etas.push(choose_eta(lo, hi)?);
        intervals.push((lo, hi));
    }
    Ok((etas, intervals))
}

fn join_interpolations(xi: &[Dyadic], eta: &[Dyadic]) -> Result<Vec<Point>, ApproxError> {
    let mut points = vec![Point::new(xi[0].clone(), eta[0].clone())];
    for i in 0..xi.len() - 1 {
        let p = Point::new(xi[i].clone(), eta[i].clone());
        let q = Point::new(xi[i + 1].clone(), eta[i + 1].clone());
        let path = dyadic_interpolation(&p, &q)?;
        points.extend(path.into_iter().skip(1));
    }
    Ok(points)
}

fn check_eta_increasing(eta: &[Dyadic]) -> Result<(), ApproxError> {
    match eta.windows(2).position(|w| w[0] >= w[1]) {
        None => Ok(()),
        Some(i) => Err(ApproxError::ConstructionFailure(format!(
            "eta not increasing at index {}",
            i + 1
        ))),
    }
}

fn breakpoints_xi(n: u64, delta_exponent: u32) -> Vec<Dyadic> {
    (0..=n).map(|i| Dyadic::new(i, delta_exponent as u64)).collect()
}

/// An element of F within `epsilon` of the interval diffeomorphism `f`.
pub fn approximate_interval(f: &DiffeoSpec, epsilon: f64) -> Result<Approximation, ApproxError> {
    check_epsilon(epsilon)?;
    if f.space != Space::Interval {
        return Err(ApproxError::InvalidDiffeo("expected an interval map".into()));
    }
    let report = f.validate(DEFAULT_VALIDATION_GRID, DEFAULT_POSITIVITY_TOL);
    if !report.is_ok() {
        return Err(ApproxError::InvalidDiffeo(report.summary()));
    }
    let s = derivative_bound(f)?;
    let (delta_exponent, n) = compute_params(epsilon, s)?;
    let mut fx = sample_values(f, n)?;
    fx[0] = 0.0;
    fx[n as usize] = 1.0;
    check_increasing(&fx)?;
    let delta = (epsilon / 2.0).min((fx[n as usize] - fx[n as usize - 1]) / 2.0);

    let (interior, intervals) = interior_etas(&fx, delta)?;
    let mut eta = Vec::with_capacity(n as usize + 1);
    eta.push(Dyadic::zero());
    eta.extend(interior);
    eta.push(Dyadic::one());
    check_eta_increasing(&eta)?;

    let xi = breakpoints_xi(n, delta_exponent);
    let points = join_interpolations(&xi, &eta)?;
    let interpolation_pieces = points.len() as u64 - 1;
    let g = PLMap::new(Space::Interval, points)?;
    Ok(Approximation {
        g,
        params: ApproxParams {
            space: Space::Interval,
            epsilon,
            s,
            delta_exponent,
            n,
            delta,
            xi,
            eta,
            f_values: fx,
            intervals,
            interpolation_pieces,
        },
    })
}

/// An element of T within `epsilon` of the circle diffeomorphism with lift
/// `f_lift`, compared as lifts.
pub fn approximate_circle(f_lift: &DiffeoSpec, epsilon: f64) -> Result<Approximation, ApproxError> {
    check_epsilon(epsilon)?;
    if f_lift.space != Space::CircleLift {
        return Err(ApproxError::InvalidDiffeo("expected a circle lift".into()));
    }
    let report = f_lift.validate(DEFAULT_VALIDATION_GRID, DEFAULT_POSITIVITY_TOL);
    if !report.is_ok() {
        let lift_broken = report
            .violations
            .iter()
            .any(|v| matches!(v, crate::funcspec::DiffeoViolation::LiftIdentity { .. }));
        return Err(if lift_broken {
            ApproxError::LiftViolation(report.summary())
        } else {
            ApproxError::InvalidDiffeo(report.summary())
        });
    }
    let s = derivative_bound(f_lift)?;
    let (delta_exponent, n) = compute_params(epsilon, s)?;
    let mut fx = sample_values(f_lift, n)?;
    fx[n as usize] = fx[0] + 1.0;
    check_increasing(&fx)?;
    let delta = (epsilon / 2.0).min((fx[1] - fx[0]) / 2.0);

    let first = (fx[0] + delta, fx[1]);
    let eta0 = choose_eta(first.0, first.1)?;
    let (interior, interior_intervals) = interior_etas(&fx, delta)?;
    let mut eta = Vec::with_capacity(n as usize + 1);
    eta.push(eta0.clone());
    eta.extend(interior);
    eta.push(&eta0 + &Dyadic::one());
    check_eta_increasing(&eta)?;
    let mut intervals = vec![first];
    intervals.extend(interior_intervals);

    let xi = breakpoints_xi(n, delta_exponent);
    let points = join_interpolations(&xi, &eta)?;
    let interpolation_pieces = points.len() as u64 - 1;
    let g = PLMap::from_lift(points)?;
    Ok(Approximation {
        g,
        params: ApproxParams {
            space: Space::CircleLift,
            epsilon,
            s,
            delta_exponent,
            n,
            delta,
            xi,
            eta,
            f_values: fx,
            intervals,
            interpolation_pieces,
        },
    })
}

/// Dispatches on the space of `f`.
pub fn approximate(f: &DiffeoSpec, epsilon: f64) -> Result<Approximation, ApproxError> {
    match f.space {
        Space::Interval => approximate_interval(f, epsilon),
        Space::CircleLift => approximate_circle(f, epsilon),
    }
}

impl ApproxParams {
    /// Checks the inequalities the error estimate relies on, exactly against
    /// the sampled values. Returns a description of each failure.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.n as usize;
        let exact = |v: f64| Dyadic::from_f64(v).unwrap();
        if self.xi.len() != n + 1 || self.eta.len() != n + 1 || self.f_values.len() != n + 1 {
            out.push("length mismatch".to_string());
            return out;
        }
        for (i, x) in self.xi.iter().enumerate() {
            if x != &Dyadic::new(i as u64, self.delta_exponent as u64) {
                out.push(format!("xi_{i} != {i}/{n}"));
            }
        }
        for i in 0..n {
            if self.eta[i] >= self.eta[i + 1] {
                out.push(format!("eta_{i} >= eta_{}", i + 1));
            }
        }
        let offset = usize::from(self.space == Space::CircleLift);
        for i in 1..n {
            let fi = &self.f_values;
            let (lo, hi) = self.intervals[i - 1 + offset];
            if !(lo < hi) {
                out.push(format!("I_{i} empty"));
            }
            if lo != (fi[i - 1] + self.delta).max(fi[i]) || hi != fi[i] + self.delta {
                out.push(format!("I_{i} does not match the sampled values"));
            }
            if !(exact(lo) < self.eta[i] && self.eta[i] < exact(hi)) {
                out.push(format!("eta_{i} outside I_{i}"));
            }
            if self.eta[i] <= exact(fi[i]) {
                out.push(format!("eta_{i} <= f(xi_{i})"));
            }
            if self.eta[i] >= exact(fi[i] + self.delta) {
                out.push(format!("eta_{i} >= f(xi_{i}) + delta"));
            }
        }
        match self.space {
            Space::Interval => {
                if !self.eta[0].is_zero() || self.eta[n] != Dyadic::one() {
                    out.push("eta must start at 0 and end at 1".into());
                }
            }
            Space::CircleLift => {
                let fi = &self.f_values;
                let (lo, hi) = self.intervals[0];
                if !(exact(lo) < self.eta[0] && self.eta[0] < exact(hi)) {
                    out.push("eta_0 outside (f(xi_0) + delta, f(xi_1))".into());
                }
                if self.eta[n] != &self.eta[0] + &Dyadic::one() {
                    out.push("eta_n != eta_0 + 1".into());
                }
                let bound = (fi[n - 1] + self.delta).max(fi[n]);
                if exact(bound) >= self.eta[n] {
                    out.push("max{f(xi_(n-1)) + delta, f(xi_n)} >= eta_n".into());
                }
            }
        }
        out
    }
}
