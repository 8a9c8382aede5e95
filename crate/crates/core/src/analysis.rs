//! Distances between a target map and a PL element.
//!
//! The sup-distance certificate only uses that both maps are increasing: on
//! a cell `[a, b]`, `f(x) - g(x) <= f(b) - g(a)` and `g(x) - f(x) <= g(b) - f(a)`.
//! Circle elements are compared through their lifts, with the target lift
//! shifted by the integer that brings `f~(0)` closest to `g~(0)`.

use crate::error::AnalysisError;
use crate::funcspec::DiffeoSpec;
use crate::plmap::{Location, PLMap, Space};

/// Derivative tolerance used when deciding whether an input is a rotation.
pub const ROTATION_TOL: f64 = 1e-9;

/// Values this close to a power of 2 count as powers of 2.
pub const POWER2_SNAP: f64 = 1.0 / (1u64 << 40) as f64;

/// An increasing real map on `[0, 1]`, evaluated in floating point.
pub trait RealMap {
    fn space(&self) -> Space;
    fn value_at(&self, x: f64) -> Result<f64, AnalysisError>;
}

impl RealMap for DiffeoSpec {
    fn space(&self) -> Space {
        self.space
    }

    fn value_at(&self, x: f64) -> Result<f64, AnalysisError> {
        Ok(self.value(x)?)
    }
}

impl RealMap for PLMap {
    fn space(&self) -> Space {
        PLMap::space(self)
    }

    fn value_at(&self, x: f64) -> Result<f64, AnalysisError> {
        // Arguments come from [0, 1] partitions, so this cannot fail.
        Ok(self.eval_lift_real(x).expect("argument inside [0, 1]"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    SupDistance,
}

/// Bracket `lower <= sup |f - g| <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub lower: f64,
    pub upper: f64,
    pub grid_size: usize,
    /// Sample point where `lower` is attained.
    pub witness: f64,
    pub kind: CertificateKind,
}

impl Certificate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Integer added to the target lift so that it starts next to `g~(0)`.
pub fn lift_alignment<F: RealMap + ?Sized>(f: &F, g: &PLMap) -> Result<f64, AnalysisError> {
    match g.space() {
        Space::Interval => Ok(0.0),
        Space::CircleLift => Ok((g.float_points()[0].1 - f.value_at(0.0)?).round()),
    }
}

/// Merges the uniform grid `i / n` with the breakpoint abscissae of `g`.
fn partition(g: &PLMap, grid_size: usize) -> impl Iterator<Item = f64> + '_ {
    let n = grid_size.max(1);
    let xs = g.float_points();
    let mut i = 0usize;
    let mut j = 0usize;
    let mut last = f64::NEG_INFINITY;
    std::iter::from_fn(move || loop {
        let grid = (i <= n).then(|| i as f64 / n as f64);
        let bp = xs.get(j).map(|p| p.0);
        let next = match (grid, bp) {
            (None, None) => return None,
            (Some(a), Some(b)) if b < a => {
                j += 1;
                b
            }
            (Some(a), _) => {
                i += 1;
                a
            }
            (None, Some(b)) => {
                j += 1;
                b
            }
        };
        if next > last {
            last = next;
            return Some(next);
        }
    })
}

/// Brackets `sup_x |f(x) - g(x)|` on a partition refining both the uniform
/// grid of `grid_size` cells and the breakpoints of `g`.
pub fn certified_sup_distance<F: RealMap + ?Sized>(
    f: &F,
    g: &PLMap,
    grid_size: usize,
) -> Result<Certificate, AnalysisError> {
    if f.space() != g.space() {
        return Err(AnalysisError::SpaceMismatch);
    }
    let shift = lift_alignment(f, g)?;
    let mut lower = 0.0f64;
    let mut witness = 0.0;
    let mut upper = 0.0f64;
    let mut magnitude = 0.0f64;
    let mut prev: Option<(f64, f64)> = None;
    for x in partition(g, grid_size) {
        let fx = f.value_at(x)? + shift;
        let gx = g.eval_lift_real(x).expect("partition lies in [0, 1]");
        let gap = (fx - gx).abs();
        if gap > lower {
            lower = gap;
            witness = x;
        }
        if let Some((fa, ga)) = prev {
            upper = upper.max(fx - ga).max(gx - fa);
        }
        magnitude = magnitude.max(fx.abs()).max(gx.abs());
        prev = Some((fx, gx));
    }
    // absorb the rounding of the differences above
    let upper = upper.max(lower) + 4.0 * f64::EPSILON * magnitude.max(1.0);
    Ok(Certificate {
        lower,
        upper,
        grid_size,
        witness,
        kind: CertificateKind::SupDistance,
    })
}

/// Slope of `g` at `x`, or `None` when `x` is a breakpoint of `g`.
fn slope_off_breakpoints(g: &PLMap, x: f64, seam_is_breakpoint: bool) -> Option<f64> {
    let last = g.pieces();
    match g.locate_real(x) {
        Location::Inside(i) => Some(g.slope_f64(i)),
        Location::OnPoint(0) if g.space() == Space::Interval || !seam_is_breakpoint => Some(g.slope_f64(0)),
        Location::OnPoint(i) if i == last && (g.space() == Space::Interval || !seam_is_breakpoint) => {
            Some(g.slope_f64(last - 1))
        }
        Location::OnPoint(_) => None,
    }
}

/// Sampled lower bound on `d(f, g) = sup |f' - g'|` over points that are not
/// breakpoints of `g`.
pub fn derivative_distance_lb(f: &DiffeoSpec, g: &PLMap, grid_size: usize) -> Result<f64, AnalysisError> {
    if f.space != g.space() {
        return Err(AnalysisError::SpaceMismatch);
    }
    let seam = g.space() == Space::CircleLift && g.slope(0) != g.slope(g.pieces() - 1);
    let n = grid_size.max(1);
    let mut best = 0.0f64;
    for i in 0..=n {
        let x = i as f64 / n as f64;
        if let Some(slope) = slope_off_breakpoints(g, x, seam) {
            best = best.max((f.derivative(x)? - slope).abs());
        }
    }
    Ok(best)
}

/// Distance from `v > 0` to the nearest integer power of 2.
pub fn power2_gap(v: f64) -> Result<f64, AnalysisError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(AnalysisError::NonPositive(v));
    }
    let mut below = 2f64.powi(v.log2().floor() as i32);
    while below > v {
        below /= 2.0;
    }
    while below * 2.0 <= v {
        below *= 2.0;
    }
    let gap = (v - below).min(2.0 * below - v);
    Ok(if gap <= POWER2_SNAP { 0.0 } else { gap })
}

/// `true` iff `|f'(x) - 1| <= tol` at every grid sample.
pub fn is_rotation(f: &DiffeoSpec, tol: f64, grid_size: usize) -> bool {
    let n = grid_size.max(1);
    (0..=n).all(|i| {
        f.derivative(i as f64 / n as f64)
            .map(|d| (d - 1.0).abs() <= tol)
            .unwrap_or(false)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretenessFloor {
    pub x_star: f64,
    pub mu: f64,
}

/// Grid point where `f'` is farthest from every power of 2, and that gap.
///
/// Any `g` whose breakpoints avoid `x_star` has `d(f, g) >= mu`.
pub fn discreteness_floor(f: &DiffeoSpec, grid_size: usize) -> Result<DiscretenessFloor, AnalysisError> {
    if is_rotation(f, ROTATION_TOL, grid_size) {
        return Err(AnalysisError::Rotation);
    }
    let n = grid_size.max(1);
    let mut best = DiscretenessFloor { x_star: 0.0, mu: -1.0 };
    for i in 0..=n {
        let x = i as f64 / n as f64;
        let gap = power2_gap(f.derivative(x)?)?;
        if gap > best.mu {
            best = DiscretenessFloor { x_star: x, mu: gap };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Dyadic;
    use crate::plmap::Point;

    fn fam(text: &str) -> DiffeoSpec {
        DiffeoSpec::family(text).unwrap()
    }

    fn d(m: i64, k: u64) -> Dyadic {
        Dyadic::new(m, k)
    }

    fn sample_element() -> PLMap {
        PLMap::new(
            Space::Interval,
            vec![
                Point::new(d(0, 0), d(0, 0)),
                Point::new(d(1, 1), d(1, 2)),
                Point::new(d(3, 2), d(1, 1)),
                Point::new(d(1, 0), d(1, 0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_distance_is_zero() {
        let c = certified_sup_distance(&fam("identity"), &PLMap::identity(Space::Interval), 64).unwrap();
        assert_eq!(c.lower, 0.0);
        // monotonicity alone cannot rule out a jump inside a cell
        assert!(c.upper >= 1.0 / 64.0 && c.upper < 1.0 / 64.0 + 1e-14);
    }

    #[test]
    fn bracket_for_sample_element() {
        let g = sample_element();
        let c = certified_sup_distance(&fam("identity"), &g, 1024).unwrap();
        assert_eq!(c.lower, 0.25);
        assert!(c.witness == 0.5 || c.witness == 0.75);
        assert!(c.upper >= 0.25 && c.upper <= 0.25 + 2.0 / 1024.0 + 1e-12);
    }

    #[test]
    fn space_mismatch() {
        let g = PLMap::identity(Space::CircleLift);
        assert_eq!(
            certified_sup_distance(&fam("identity"), &g, 8),
            Err(AnalysisError::SpaceMismatch)
        );
        assert_eq!(
            derivative_distance_lb(&fam("identity"), &g, 8),
            Err(AnalysisError::SpaceMismatch)
        );
    }

    #[test]
    fn circle_lifts_are_aligned() {
        // x + 1/2 and x - 1/2 are the same circle map
        let f = DiffeoSpec::from_expr("x - 0.5", Space::CircleLift).unwrap();
        let g = PLMap::rotation_by(&d(1, 1)).unwrap();
        let c = certified_sup_distance(&f, &g, 64).unwrap();
        assert_eq!(c.lower, 0.0);
        assert!(c.upper < 1.0 / 64.0 + 1e-14);
    }

    #[test]
    fn derivative_distance_examples() {
        let f = DiffeoSpec::from_expr("x + 1/2", Space::CircleLift).unwrap();
        let g = PLMap::rotation_by(&d(1, 1)).unwrap();
        assert_eq!(derivative_distance_lb(&f, &g, 1024).unwrap(), 0.0);
        let lb = derivative_distance_lb(&fam("identity"), &sample_element(), 1024).unwrap();
        assert!(lb >= 1.0);
    }

    #[test]
    fn breakpoint_samples_are_skipped() {
        // f' = 1 everywhere; g' = 1/2, 1, 2; every sample on a breakpoint is
        // skipped, so with grid 4 only 0, 1/4 and 1 count.
        let g = sample_element();
        let lb = derivative_distance_lb(&fam("identity"), &g, 4).unwrap();
        assert_eq!(lb, 1.0);
        let lb = derivative_distance_lb(&fam("identity"), &g, 2).unwrap();
        // samples 0 (slope 1/2) and 1 (slope 2); 1/2 is a breakpoint
        assert_eq!(lb, 1.0);
    }

    #[test]
    fn circle_seam_is_skipped_when_slopes_differ() {
        let g = PLMap::new(
            Space::CircleLift,
            vec![
                Point::new(d(0, 0), d(1, 1)),
                Point::new(d(1, 1), d(3, 2)),
                Point::new(d(3, 2), d(1, 0)),
                Point::new(d(1, 0), d(3, 1)),
            ],
        )
        .unwrap();
        let f = DiffeoSpec::from_expr("x + 1/2", Space::CircleLift).unwrap();
        // grid 4 hits 0, 1/2, 3/4, 1 (all breakpoints) and 1/4 (slope 1/2)
        assert_eq!(derivative_distance_lb(&f, &g, 4).unwrap(), 0.5);
    }

    #[test]
    fn power2_gap_examples() {
        assert_eq!(power2_gap(1.0).unwrap(), 0.0);
        assert_eq!(power2_gap(1.5).unwrap(), 0.5);
        assert!((power2_gap(1.3).unwrap() - 0.3).abs() < 1e-15);
        assert!((power2_gap(0.7).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(power2_gap(1.0 + 1e-13).unwrap(), 0.0);
        assert_eq!(power2_gap(0.0), Err(AnalysisError::NonPositive(0.0)));
        assert!(power2_gap(-1.0).is_err());
        for j in -20..=20 {
            assert_eq!(power2_gap(2f64.powi(j)).unwrap(), 0.0);
        }
    }

    #[test]
    fn rotation_detection() {
        assert!(is_rotation(&fam("identity"), ROTATION_TOL, 256));
        assert!(is_rotation(&fam("rot:0.3"), ROTATION_TOL, 256));
        assert!(!is_rotation(&fam("bump:0.3"), 1e-6, 256));
    }

    #[test]
    fn discreteness_floor_examples() {
        let r = discreteness_floor(&fam("bump:0.3"), 4096).unwrap();
        assert_eq!(r.x_star, 0.0);
        assert!((r.mu - 0.3).abs() < 1e-12);
        let r = discreteness_floor(&fam("bump:-0.3"), 4096).unwrap();
        assert_eq!(r.x_star, 1.0);
        assert!((r.mu - 0.3).abs() < 1e-12);
        assert_eq!(discreteness_floor(&fam("rot:0.25"), 4096), Err(AnalysisError::Rotation));
    }

    #[test]
    fn partition_merges_grid_and_breakpoints() {
        let g = sample_element();
        let xs: Vec<f64> = partition(&g, 3).collect();
        assert_eq!(xs, vec![0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75, 1.0]);
    }
}
