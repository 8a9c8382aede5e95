//! Dyadic interpolation between two dyadic points.
//!
//! The rectangle spanned by `p` and `q` has sides `r1 = m1 / 2^k1` (domain)
//! and `r2 = m2 / 2^k2` (range). The side with more unit steps (`m_b`) is cut
//! uniformly into `m_b` pieces of length `2^-k_b`. The other side starts from
//! its `m_a` uniform pieces and is refined by halving its intervals left to
//! right, round after round, until it also has `m_b` pieces. Pairing the two
//! partitions gives a PL path whose slopes are all powers of 2.

use num_traits::ToPrimitive;

use crate::dyadic::Dyadic;
use crate::error::InterpError;
use crate::plmap::Point;

/// Largest number of pieces a single interpolation may produce.
pub const MAX_PIECES: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideDecomposition {
    /// `true` when the refined side (`a`) is the domain side.
    pub a_is_x: bool,
    pub m_a: u64,
    pub k_a: u64,
    pub m_b: u64,
    pub k_b: u64,
    pub d: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpPlan {
    pub sides: SideDecomposition,
    /// Final refinement round, present when `d > 0`.
    pub l: Option<u32>,
    /// Cut positions in generation order.
    pub cuts: Vec<Dyadic>,
}

fn side_count(r: &Dyadic) -> Result<u64, InterpError> {
    if !r.is_positive() {
        return Err(InterpError::NonPositiveSide);
    }
    match r.numerator().to_u64() {
        Some(m) if m <= MAX_PIECES => Ok(m),
        _ => Err(InterpError::TooManyPieces(MAX_PIECES)),
    }
}

/// Writes both sides in canonical form and picks the side to refine; ties
/// go to the domain side.
pub fn side_decomposition(r1: &Dyadic, r2: &Dyadic) -> Result<SideDecomposition, InterpError> {
    let (m1, m2) = (side_count(r1)?, side_count(r2)?);
    let (k1, k2) = (r1.exponent(), r2.exponent());
    let sides = if m1 <= m2 {
        SideDecomposition {
            a_is_x: true,
            m_a: m1,
            k_a: k1,
            m_b: m2,
            k_b: k2,
            d: m2 - m1,
        }
    } else {
        SideDecomposition {
            a_is_x: false,
            m_a: m2,
            k_a: k2,
            m_b: m1,
            k_b: k1,
            d: m1 - m2,
        }
    };
    Ok(sides)
}

/// `c_n = m_a (2^n - 1)`, the number of cuts made in rounds `0..n`.
fn cuts_before(m_a: u64, n: u32) -> u128 {
    m_a as u128 * ((1u128 << n) - 1)
}

/// Smallest `l >= 1` with `c_l >= d`.
fn stopping_round(m_a: u64, d: u64) -> u32 {
    let mut l = 1;
    while cuts_before(m_a, l) < d as u128 {
        l += 1;
    }
    l
}

/// Cut positions that refine the uniform partition of `[0, m_a / 2^k_a]`
/// into `m_a + d` dyadic intervals.
///
/// Round `n` halves every interval of the previous round at
/// `(2i - 1) / 2^(k_a + n + 1)`; the last round only cuts the leftmost
/// `d - c_(l-1)` intervals.
pub fn refine_cuts(m_a: u64, k_a: u64, d: u64) -> Vec<Dyadic> {
    if d == 0 {
        return Vec::new();
    }
    let l = stopping_round(m_a, d);
    let mut cuts = Vec::with_capacity(d as usize);
    for n in 0..l {
        let count = if n + 1 < l {
            (m_a as u128) << n
        } else {
            d as u128 - cuts_before(m_a, l - 1)
        };
        let exponent = k_a + n as u64 + 1;
        for i in 1..=count {
            cuts.push(Dyadic::new(2 * i as u64 - 1, exponent));
        }
    }
    cuts
}

pub fn plan(r1: &Dyadic, r2: &Dyadic) -> Result<InterpPlan, InterpError> {
    let sides = side_decomposition(r1, r2)?;
    let l = (sides.d > 0).then(|| stopping_round(sides.m_a, sides.d));
    let cuts = refine_cuts(sides.m_a, sides.k_a, sides.d);
    Ok(InterpPlan { sides, l, cuts })
}

impl InterpPlan {
    /// Sorted breakpoints of the refined side, from `0` to `m_a / 2^k_a`.
    pub fn refined_partition(&self) -> Vec<Dyadic> {
        let s = &self.sides;
        let mut xs: Vec<Dyadic> = (0..=s.m_a).map(|m| Dyadic::new(m, s.k_a)).collect();
        xs.extend(self.cuts.iter().cloned());
        xs.sort();
        xs
    }

    /// Breakpoints of the uniform side, from `0` to `m_b / 2^k_b`.
    pub fn uniform_partition(&self) -> Vec<Dyadic> {
        let s = &self.sides;
        (0..=s.m_b).map(|m| Dyadic::new(m, s.k_b)).collect()
    }
}

/// PL path from `p` to `q` with dyadic breakpoints and power-of-2 slopes.
///
/// Returns all `m_b + 1` partition points, collinear ones included.
pub fn dyadic_interpolation(p: &Point, q: &Point) -> Result<Vec<Point>, InterpError> {
    if p.x >= q.x || p.y >= q.y {
        return Err(InterpError::DegenerateRectangle);
    }
    let plan = plan(&(&q.x - &p.x), &(&q.y - &p.y))?;
    let refined = plan.refined_partition();
    let uniform = plan.uniform_partition();
    let (xs, ys) = if plan.sides.a_is_x {
        (refined, uniform)
    } else {
        (uniform, refined)
    };
    Ok(xs
        .into_iter()
        .zip(ys)
        .map(|(x, y)| Point::new(&p.x + &x, &p.y + &y))
        .collect())
}
