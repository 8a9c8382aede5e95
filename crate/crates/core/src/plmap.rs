//! Strictly increasing piecewise-linear maps with dyadic breakpoint data.
//!
//! An interval element is a homeomorphism of `[0, 1]` fixing both ends. A
//! circle element is stored through its lift `g~` restricted to `[0, 1]`,
//! normalized so that `0 <= g~(0) < 1`; the rest of the lift follows from
//! `g~(x + 1) = g~(x) + 1`. Normalization picks one lift per circle map, so
//! two circle elements are equal iff their stored points are equal.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::dyadic::Dyadic;
use crate::error::PlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Interval,
    CircleLift,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Interval => f.write_str("interval"),
            Space::CircleLift => f.write_str("circle"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point {
    pub x: Dyadic,
    pub y: Dyadic,
}

impl Point {
    pub fn new(x: Dyadic, y: Dyadic) -> Self {
        Point { x, y }
    }
}

/// Interior points where the slope changes, plus the seam point `0` for
/// circle elements whose slopes differ across `x = 0 ~ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BreakpointSet {
    pub xs: Vec<Dyadic>,
}

impl BreakpointSet {
    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        self.xs.binary_search(x).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Segment slope is not an integer power of 2.
    Slope { segment: usize, slope: BigRational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Slope { segment, slope } => {
                write!(f, "segment {segment}: slope {slope} is not a power of 2")
            }
        }
    }
}

/// Outcome of the membership test for F (interval) or T (circle).
#[derive(Debug, Clone, PartialEq)]
pub struct ThompsonReport {
    pub space: Space,
    pub slopes: Vec<BigRational>,
    pub violations: Vec<Violation>,
}

impl ThompsonReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Position of a real argument relative to the breakpoint list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Exactly on stored point `i` (which may be an endpoint).
    OnPoint(usize),
    /// Strictly inside segment `i`.
    Inside(usize),
}

#[derive(Clone)]
pub struct PLMap {
    space: Space,
    points: Vec<Point>,
    // log2 of each segment slope, `None` when not a power of 2
    slope_log2: Vec<Option<i64>>,
    float_points: Vec<(f64, f64)>,
}

impl PartialEq for PLMap {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.points == other.points
    }
}

impl Eq for PLMap {}

impl fmt::Debug for PLMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PLMap")
            .field("space", &self.space)
            .field("points", &self.points)
            .finish()
    }
}

/// `log2(v)` when `v` is an exact integer power of 2.
pub fn exact_log2(v: &Dyadic) -> Option<i64> {
    if !v.is_positive() {
        return None;
    }
    if v.exponent() > 0 {
        v.numerator().is_one().then(|| -(v.exponent() as i64))
    } else {
        let tz = v.numerator().trailing_zeros()?;
        (v.numerator() == &(BigInt::one() << tz)).then_some(tz as i64)
    }
}

fn slope_log2(dx: &Dyadic, dy: &Dyadic) -> Option<i64> {
    dy.checked_div(dx).as_ref().and_then(exact_log2)
}

fn to_ratio(v: &Dyadic) -> BigRational {
    BigRational::new(v.numerator().clone(), BigInt::one() << v.exponent())
}

fn collinear(a: &Point, b: &Point, c: &Point) -> bool {
    (&b.y - &a.y) * (&c.x - &b.x) == (&c.y - &b.y) * (&b.x - &a.x)
}

impl PLMap {
    /// Builds a map from its breakpoint list, checking the structural
    /// invariants and stripping collinear interior points.
    pub fn new(space: Space, points: Vec<Point>) -> Result<Self, PlError> {
        if points.len() < 2 {
            return Err(PlError::TooFewPoints);
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[0].x >= w[1].x || w[0].y >= w[1].y {
                return Err(PlError::NotIncreasing(i + 1));
            }
        }
        let first = &points[0];
        let last = &points[points.len() - 1];
        match space {
            Space::Interval => {
                if !first.x.is_zero() || !first.y.is_zero() || last.x != Dyadic::one() || last.y != Dyadic::one() {
                    return Err(PlError::IntervalEndpoints);
                }
            }
            Space::CircleLift => {
                if !first.x.is_zero()
                    || last.x != Dyadic::one()
                    || last.y != &first.y + &Dyadic::one()
                    || first.y.is_negative()
                    || first.y >= Dyadic::one()
                {
                    return Err(PlError::LiftNormalization);
                }
            }
        }
        Ok(Self::from_checked(space, strip_collinear(points)))
    }

    /// Like [`PLMap::new`] for circle lifts, but first shifts the lift by the
    /// integer that brings `y(0)` into `[0, 1)`.
    pub fn from_lift(points: Vec<Point>) -> Result<Self, PlError> {
        let first_y = points.first().ok_or(PlError::TooFewPoints)?.y.clone();
        let shift = Dyadic::from_int(first_y.floor());
        let points = points.into_iter().map(|p| Point::new(p.x, &p.y - &shift)).collect();
        Self::new(Space::CircleLift, points)
    }

    fn from_checked(space: Space, points: Vec<Point>) -> Self {
        let slope_log2 = points
            .windows(2)
            .map(|w| slope_log2(&(&w[1].x - &w[0].x), &(&w[1].y - &w[0].y)))
            .collect();
        let float_points = points.iter().map(|p| (p.x.to_f64(), p.y.to_f64())).collect();
        PLMap {
            space,
            points,
            slope_log2,
            float_points,
        }
    }

    pub fn identity(space: Space) -> Self {
        Self::from_checked(
            space,
            vec![
                Point::new(Dyadic::zero(), Dyadic::zero()),
                Point::new(Dyadic::one(), Dyadic::one()),
            ],
        )
    }

    /// The rigid rotation `x -> x + c` as a circle element.
    pub fn rotation_by(c: &Dyadic) -> Result<Self, PlError> {
        if c.is_negative() || c >= &Dyadic::one() {
            return Err(PlError::RotationOutOfRange(c.to_string()));
        }
        Self::new(
            Space::CircleLift,
            vec![
                Point::new(Dyadic::zero(), c.clone()),
                Point::new(Dyadic::one(), c + &Dyadic::one()),
            ],
        )
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn pieces(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_identity(&self) -> bool {
        self.points.len() == 2 && self.points[0].y.is_zero()
    }

    pub fn float_points(&self) -> &[(f64, f64)] {
        &self.float_points
    }

    /// Exact slope of segment `i`.
    pub fn slope(&self, i: usize) -> BigRational {
        let dx = &self.points[i + 1].x - &self.points[i].x;
        let dy = &self.points[i + 1].y - &self.points[i].y;
        to_ratio(&dy) / to_ratio(&dx)
    }

    pub fn slopes(&self) -> Vec<BigRational> {
        (0..self.pieces()).map(|i| self.slope(i)).collect()
    }

    pub fn slope_f64(&self, i: usize) -> f64 {
        match self.slope_log2[i] {
            Some(j) => 2f64.powi(j as i32),
            None => self.slope(i).to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Membership test: every slope must be an integer power of 2.
    ///
    /// Breakpoints and their images are dyadic by construction, and the lift
    /// normalization is enforced when the map is built.
    pub fn validate_thompson(&self) -> ThompsonReport {
        let slopes = self.slopes();
        let violations = self
            .slope_log2
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(segment, _)| Violation::Slope {
                segment,
                slope: slopes[segment].clone(),
            })
            .collect();
        ThompsonReport {
            space: self.space,
            slopes,
            violations,
        }
    }

    pub fn is_thompson(&self) -> bool {
        self.slope_log2.iter().all(Option::is_some)
    }

    fn require_thompson(&self) -> Result<(), PlError> {
        let report = self.validate_thompson();
        match report.violations.first() {
            None => Ok(()),
            Some(v) => Err(PlError::InvalidElement(v.to_string())),
        }
    }

    fn segment_containing(&self, x: &Dyadic) -> usize {
        let idx = self.points.partition_point(|p| &p.x <= x);
        idx.saturating_sub(1).min(self.pieces() - 1)
    }

    fn eval_on_segment(&self, i: usize, x: &Dyadic) -> Result<Dyadic, PlError> {
        let p = &self.points[i];
        let offset = x - &p.x;
        if let Some(j) = self.slope_log2[i] {
            return Ok(&p.y + &offset.scale_pow2(j));
        }
        let q = &self.points[i + 1];
        (&(&q.y - &p.y) * &offset)
            .checked_div(&(&q.x - &p.x))
            .map(|v| &p.y + &v)
            .ok_or_else(|| PlError::NonDyadicResult(x.to_string()))
    }

    /// Exact value at `x` in `[0, 1]`.
    pub fn eval(&self, x: &Dyadic) -> Result<Dyadic, PlError> {
        if x.is_negative() || x > &Dyadic::one() {
            return Err(PlError::OutOfDomain(x.to_f64()));
        }
        self.eval_on_segment(self.segment_containing(x), x)
    }

    /// Exact value of the periodic extension `g~(x + z) = g~(x) + z` of a
    /// circle lift. Interval maps only accept `x` in `[0, 1]`.
    pub fn eval_lift(&self, x: &Dyadic) -> Result<Dyadic, PlError> {
        match self.space {
            Space::Interval => self.eval(x),
            Space::CircleLift => {
                let z = Dyadic::from_int(x.floor());
                Ok(&self.eval(&(x - &z))? + &z)
            }
        }
    }

    /// Exact preimage of `y` under the (extended) map.
    fn preimage(&self, y: &Dyadic) -> Result<Dyadic, PlError> {
        let (z, y) = match self.space {
            Space::Interval => (Dyadic::zero(), y.clone()),
            Space::CircleLift => {
                let z = Dyadic::from_int((y - &self.points[0].y).floor());
                let shifted = y - &z;
                (z, shifted)
            }
        };
        let first = &self.points[0].y;
        let last = &self.points[self.pieces()].y;
        if &y < first || &y > last {
            return Err(PlError::OutOfDomain(y.to_f64()));
        }
        let idx = self.points.partition_point(|p| p.y <= y);
        let i = idx.saturating_sub(1).min(self.pieces() - 1);
        let p = &self.points[i];
        let j = self.slope_log2[i].ok_or_else(|| PlError::InvalidElement(format!("segment {i}")))?;
        Ok(&(&p.x + &(&y - &p.y).scale_pow2(-j)) + &z)
    }

    /// Floating-point evaluation on `[0, 1]`.
    pub fn eval_real(&self, x: f64) -> Result<f64, PlError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(PlError::OutOfDomain(x));
        }
        Ok(self.eval_real_unchecked(x))
    }

    fn eval_real_unchecked(&self, x: f64) -> f64 {
        let pts = &self.float_points;
        let idx = pts.partition_point(|p| p.0 <= x);
        let i = idx.saturating_sub(1).min(pts.len() - 2);
        let (x0, y0) = pts[i];
        if x == x0 {
            return y0;
        }
        let (x1, y1) = pts[i + 1];
        if x == x1 {
            return y1;
        }
        y0 + self.slope_f64(i) * (x - x0).min(x1 - x0)
    }

    /// Floating-point evaluation of the lift on all of `R` (circle elements)
    /// or on `[0, 1]` (interval elements).
    pub fn eval_lift_real(&self, x: f64) -> Result<f64, PlError> {
        match self.space {
            Space::Interval => self.eval_real(x),
            Space::CircleLift => {
                if !x.is_finite() {
                    return Err(PlError::OutOfDomain(x));
                }
                let z = x.floor();
                Ok(self.eval_real_unchecked(x - z) + z)
            }
        }
    }

    /// Locates a real argument in `[0, 1]`.
    pub fn locate_real(&self, x: f64) -> Location {
        let pts = &self.float_points;
        let idx = pts.partition_point(|p| p.0 < x);
        if idx < pts.len() && pts[idx].0 == x {
            Location::OnPoint(idx)
        } else {
            Location::Inside(idx.saturating_sub(1).min(pts.len() - 2))
        }
    }

    pub fn breakpoints(&self) -> BreakpointSet {
        let mut xs: Vec<Dyadic> = self.points[1..self.pieces()].iter().map(|p| p.x.clone()).collect();
        if self.space == Space::CircleLift && self.slope(0) != self.slope(self.pieces() - 1) {
            xs.insert(0, Dyadic::zero());
        }
        BreakpointSet { xs }
    }

    pub fn invert(&self) -> Result<PLMap, PlError> {
        self.require_thompson()?;
        match self.space {
            Space::Interval => {
                let points = self
                    .points
                    .iter()
                    .map(|p| Point::new(p.y.clone(), p.x.clone()))
                    .collect();
                PLMap::new(Space::Interval, points)
            }
            Space::CircleLift => {
                // The inverse lift is known on [y0, y0 + 1]; its breakpoints
                // in [0, 1] are the images y_i reduced mod 1.
                let mut xs = vec![Dyadic::zero(), Dyadic::one()];
                for p in &self.points {
                    let z = Dyadic::from_int(p.y.floor());
                    xs.push(&p.y - &z);
                }
                sample_lift(Space::CircleLift, xs, |t| self.preimage(t))
            }
        }
    }

    /// `self ∘ other`, i.e. `x -> self(other(x))`.
    pub fn compose(&self, other: &PLMap) -> Result<PLMap, PlError> {
        if self.space != other.space {
            return Err(PlError::SpaceMismatch);
        }
        self.require_thompson()?;
        other.require_thompson()?;
        let mut xs: Vec<Dyadic> = other.points.iter().map(|p| p.x.clone()).collect();
        let lo = &other.points[0].y;
        let hi = &other.points[other.pieces()].y;
        let shifts: &[i64] = match self.space {
            Space::Interval => &[0],
            Space::CircleLift => &[0, 1],
        };
        for p in &self.points {
            for &z in shifts {
                let u = &p.x + &Dyadic::from(z);
                if &u >= lo && &u <= hi {
                    xs.push(other.preimage(&u)?);
                }
            }
        }
        sample_lift(self.space, xs, |x| self.eval_lift(&other.eval_lift(x)?))
    }
}

/// Builds the canonical element through the given x-positions (which must
/// include every breakpoint), evaluating `f` exactly at each.
fn sample_lift<F>(space: Space, mut xs: Vec<Dyadic>, f: F) -> Result<PLMap, PlError>
where
    F: Fn(&Dyadic) -> Result<Dyadic, PlError>,
{
    xs.sort();
    xs.dedup();
    let points = xs
        .into_iter()
        .map(|x| f(&x).map(|y| Point::new(x, y)))
        .collect::<Result<Vec<_>, _>>()?;
    match space {
        Space::Interval => PLMap::new(space, points),
        Space::CircleLift => PLMap::from_lift(points),
    }
}

fn strip_collinear(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        while out.len() >= 2 && collinear(&out[out.len() - 2], &out[out.len() - 1], &p) {
            out.pop();
        }
        out.push(p);
    }
    out
}
