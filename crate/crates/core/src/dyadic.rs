//! Exact dyadic rationals `m / 2^k`.
//!
//! Every value is kept in canonical form: either the exponent is zero or the
//! numerator is odd. Zero is always `0 / 2^0`. Equality and hashing are
//! therefore structural.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::DyadicError;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u64,
}

impl Dyadic {
    /// Canonical representative of `m / 2^k`.
    pub fn new(numerator: impl Into<BigInt>, exponent: u64) -> Self {
        let mut numerator = numerator.into();
        if numerator.is_zero() {
            return Self::zero();
        }
        let twos = numerator.trailing_zeros().unwrap_or(0).min(exponent);
        if twos > 0 {
            numerator >>= twos;
        }
        Dyadic {
            numerator,
            exponent: exponent - twos,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            numerator: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Dyadic {
            numerator: n.into(),
            exponent: 0,
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.numerator.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.exponent == 0
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            numerator: self.numerator.abs(),
            exponent: self.exponent,
        }
    }

    /// `self * 2^j`.
    pub fn scale_pow2(&self, j: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        if j >= 0 {
            let j = j as u64;
            if j <= self.exponent {
                Dyadic {
                    numerator: self.numerator.clone(),
                    exponent: self.exponent - j,
                }
            } else {
                Dyadic {
                    numerator: &self.numerator << (j - self.exponent),
                    exponent: 0,
                }
            }
        } else {
            Self::new(self.numerator.clone(), self.exponent + j.unsigned_abs())
        }
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> BigInt {
        if self.exponent == 0 {
            return self.numerator.clone();
        }
        let den = BigInt::one() << self.exponent;
        self.numerator.div_floor(&den)
    }

    /// Smallest integer strictly greater than `self`.
    pub fn overline_ceil(&self) -> BigInt {
        self.floor() + 1
    }

    /// Exact quotient, when it is again dyadic.
    pub fn checked_div(&self, rhs: &Dyadic) -> Option<Dyadic> {
        if rhs.is_zero() {
            return None;
        }
        let twos = rhs.numerator.trailing_zeros().unwrap_or(0);
        let odd = &rhs.numerator >> twos;
        let (q, r) = self.numerator.div_rem(&odd);
        if !r.is_zero() {
            return None;
        }
        // (q / 2^a) / (1 / 2^b) * 2^-twos
        let shift = rhs.exponent as i64 - self.exponent as i64 - twos as i64;
        Some(Dyadic::from_int(q).scale_pow2(shift))
    }

    /// Exact conversion of a finite binary64 value.
    pub fn from_f64(x: f64) -> Result<Self, DyadicError> {
        if !x.is_finite() {
            return Err(DyadicError::NonFinite(x));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mantissa, exp2) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), biased - 1075)
        };
        let mut m = BigInt::from(mantissa);
        if negative {
            m = -m;
        }
        Ok(Dyadic::from_int(m).scale_pow2(exp2))
    }

    /// Nearest binary64 value (ties to even).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let magnitude = self.numerator.magnitude();
        let bits = magnitude.bits();
        // Keep 64 leading bits plus a sticky bit so the final rounding to
        // 53 bits is correct.
        let (top, shift) = if bits > 64 {
            let shift = bits - 63;
            let kept = magnitude >> shift;
            let sticky = (&kept << shift) != *magnitude;
            let top = kept.to_u64().unwrap() << 1 | sticky as u64;
            (top, shift as i64 - 1)
        } else {
            (magnitude.to_u64().unwrap(), 0)
        };
        let value = mul_pow2(top as f64, shift - self.exponent as i64);
        if self.numerator.sign() == Sign::Minus {
            -value
        } else {
            value
        }
    }
}

fn mul_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Smallest integer strictly greater than `x`.
pub fn overline_ceil(x: f64) -> i64 {
    x.floor() as i64 + 1
}

/// A dyadic rational strictly between two exact dyadic bounds.
///
/// Uses `k = max{0, overline_ceil(-log2(q - p))}` and
/// `m = overline_ceil(2^k p)`; with `2^-k < q - p` the point `m / 2^k` lies in
/// `(p, p + 2^-k]`, hence inside `(p, q)`.
pub fn dyadic_between(p: &Dyadic, q: &Dyadic) -> Result<Dyadic, DyadicError> {
    if p >= q {
        return Err(DyadicError::InvalidInterval {
            lo: p.to_f64(),
            hi: q.to_f64(),
        });
    }
    let width = q - p;
    let k = containment_exponent(&width);
    let m = p.scale_pow2(k as i64).overline_ceil();
    let d = Dyadic::new(m, k);
    debug_assert!(p < &d && &d < q);
    Ok(d)
}

/// `max{0, overline_ceil(-log2 w)}` for `w > 0`, computed exactly: the
/// smallest `k >= 0` with `2^-k < w`.
pub fn containment_exponent(width: &Dyadic) -> u64 {
    debug_assert!(width.is_positive());
    // w = m / 2^e with m > 0, so log2 w lies in [bits(m) - 1 - e, bits(m) - e).
    let bits = width.numerator.magnitude().bits() as i64;
    let e = width.exponent as i64;
    let mut k = (e - bits).max(0);
    while Dyadic::new(1, k as u64) >= *width {
        k += 1;
    }
    while k > 0 && Dyadic::new(1, (k - 1) as u64) < *width {
        k -= 1;
    }
    k as u64
}

/// A dyadic rational strictly inside the real interval `(p, q)`.
///
/// The bounds are converted exactly from binary64, so the containment holds
/// for the given floating-point values without rounding slack.
pub fn find_dyadic_in(p: f64, q: f64) -> Result<Dyadic, DyadicError> {
    if !p.is_finite() {
        return Err(DyadicError::NonFinite(p));
    }
    if !q.is_finite() {
        return Err(DyadicError::NonFinite(q));
    }
    if !(p < q) {
        return Err(DyadicError::InvalidInterval { lo: p, hi: q });
    }
    dyadic_between(&Dyadic::from_f64(p)?, &Dyadic::from_f64(q)?)
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.exponent.cmp(&other.exponent) {
            Ordering::Equal => self.numerator.cmp(&other.numerator),
            Ordering::Less => {
                let lhs = &self.numerator << (other.exponent - self.exponent);
                lhs.cmp(&other.numerator)
            }
            Ordering::Greater => {
                let rhs = &other.numerator << (self.exponent - other.exponent);
                self.numerator.cmp(&rhs)
            }
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn aligned_sum(a: &Dyadic, b: &Dyadic, negate_b: bool) -> Dyadic {
    let (mut lhs, mut rhs) = (a.numerator.clone(), b.numerator.clone());
    let exponent = a.exponent.max(b.exponent);
    if a.exponent < exponent {
        lhs <<= exponent - a.exponent;
    }
    if b.exponent < exponent {
        rhs <<= exponent - b.exponent;
    }
    if negate_b {
        Dyadic::new(lhs - rhs, exponent)
    } else {
        Dyadic::new(lhs + rhs, exponent)
    }
}

impl Add<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        aligned_sum(self, rhs, false)
    }
}

impl Sub<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        aligned_sum(self, rhs, true)
    }
}

impl Mul<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        // Product of odd numerators is odd, so only zero needs normalizing.
        Dyadic::new(&self.numerator * &rhs.numerator, self.exponent + rhs.exponent)
    }
}

macro_rules! forward_owned {
    ($imp:ident, $method:ident) => {
        impl $imp<Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: Dyadic) -> Dyadic {
                (&self).$method(&rhs)
            }
        }
        impl $imp<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: &Dyadic) -> Dyadic {
                (&self).$method(rhs)
            }
        }
        impl $imp<Dyadic> for &Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: Dyadic) -> Dyadic {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            numerator: -&self.numerator,
            exponent: self.exponent,
        }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Dyadic::from_int(n)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({}, {})", self.numerator, self.exponent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(m: i64, k: u64) -> Dyadic {
        Dyadic::new(m, k)
    }

    #[test]
    fn normalize_examples() {
        let x = d(2, 2);
        assert_eq!((x.numerator().clone(), x.exponent()), (BigInt::from(1), 1));
        let z = d(0, 7);
        assert_eq!((z.numerator().clone(), z.exponent()), (BigInt::from(0), 0));
        let y = d(12, 4);
        assert_eq!((y.numerator().clone(), y.exponent()), (BigInt::from(3), 2));
        // 12/16 == 3/4
        assert_eq!(BigInt::from(12) * 4, BigInt::from(3) * 16);
        // even integers keep exponent 0
        assert_eq!(d(6, 0).numerator(), &BigInt::from(6));
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(d(1, 1) + d(1, 2), d(3, 2));
        assert_eq!(d(3, 2) * d(1, 1), d(3, 3));
        assert_eq!(d(11, 6) - d(1, 3), d(3, 6));
        assert_eq!(-d(3, 2), d(-3, 2));
        assert_eq!(d(1, 1) - d(1, 1), Dyadic::zero());
    }

    #[test]
    fn compare_examples() {
        assert_eq!(d(1, 1).cmp(&d(2, 2)), Ordering::Equal);
        assert_eq!(d(3, 3).cmp(&d(1, 1)), Ordering::Less);
        assert_eq!(d(11, 6).cmp(&d(1, 3)), Ordering::Greater);
        assert!(d(-1, 1) < Dyadic::zero());
    }

    #[test]
    fn scale_pow2_examples() {
        assert_eq!(d(3, 2).scale_pow2(1), d(3, 1));
        assert_eq!(d(3, 2).scale_pow2(-2), d(3, 4));
        let r = Dyadic::from_int(6).scale_pow2(-1);
        assert_eq!(r, Dyadic::from_int(3));
        assert_eq!(r.exponent(), 0);
        assert_eq!(d(3, 1).scale_pow2(5), Dyadic::from_int(48));
    }

    #[test]
    fn overline_ceil_examples() {
        assert_eq!(overline_ceil(2.0), 3);
        assert_eq!(overline_ceil(2.3), 3);
        assert_eq!(overline_ceil(-0.5), 0);
        assert_eq!(overline_ceil(-1.0), 0);
        assert_eq!(d(-1, 1).overline_ceil(), BigInt::from(0));
        assert_eq!(Dyadic::from_int(2).overline_ceil(), BigInt::from(3));
    }

    #[test]
    fn find_dyadic_in_examples() {
        assert_eq!(find_dyadic_in(0.3, 0.4).unwrap(), d(5, 4));
        assert_eq!(find_dyadic_in(0.0, 1.0).unwrap(), d(1, 1));
        let r = find_dyadic_in(0.5, 0.75).unwrap().to_f64();
        assert!(0.5 < r && r < 0.75);
        // negative and straddling intervals are accepted
        let r = find_dyadic_in(-0.7, -0.6).unwrap().to_f64();
        assert!(-0.7 < r && r < -0.6);
        assert!(find_dyadic_in(-0.25, 0.25).unwrap().is_zero());
    }

    #[test]
    fn find_dyadic_in_rejects_bad_intervals() {
        assert!(matches!(
            find_dyadic_in(0.4, 0.3),
            Err(DyadicError::InvalidInterval { .. })
        ));
        assert!(find_dyadic_in(0.4, 0.4).is_err());
        assert!(matches!(find_dyadic_in(f64::NAN, 1.0), Err(DyadicError::NonFinite(_))));
    }

    #[test]
    fn from_f64_examples() {
        assert_eq!(Dyadic::from_f64(0.5).unwrap(), d(1, 1));
        assert_eq!(Dyadic::from_f64(0.3125).unwrap(), d(5, 4));
        assert_eq!(Dyadic::from_f64(1.0).unwrap(), Dyadic::one());
        assert_eq!(Dyadic::from_f64(-0.0).unwrap(), Dyadic::zero());
        assert!(Dyadic::from_f64(f64::INFINITY).is_err());
        let tiny = f64::from_bits(1);
        assert_eq!(Dyadic::from_f64(tiny).unwrap(), d(1, 1074));
    }

    #[test]
    fn checked_div() {
        assert_eq!(d(3, 3).checked_div(&d(1, 1)), Some(d(3, 2)));
        assert_eq!(d(3, 3).checked_div(&d(3, 1)), Some(d(1, 2)));
        assert_eq!(d(3, 3).checked_div(&d(3, 2)), Some(d(1, 1)));
        assert_eq!(d(1, 1).checked_div(&d(3, 2)), None);
        assert_eq!(
            Dyadic::from_int(12).checked_div(&Dyadic::from_int(6)),
            Some(Dyadic::from_int(2))
        );
        assert_eq!(d(1, 1).checked_div(&Dyadic::zero()), None);
    }

    #[test]
    fn to_f64_rounds_large_numerators() {
        let big = Dyadic::new(BigInt::from(1) << 200u32, 0) + Dyadic::one();
        assert_eq!(big.to_f64(), 2f64.powi(200));
        let x = Dyadic::new((BigInt::from(1) << 300u32) + 1, 301);
        assert_eq!(x.to_f64(), 0.5);
    }

    fn arb_dyadic() -> impl Strategy<Value = Dyadic> {
        (any::<i64>(), 0u64..80).prop_map(|(m, k)| Dyadic::new(m, k))
    }

    /// Value of `a` as a fraction over `2^e` for a common `e`.
    fn over(a: &Dyadic, e: u64) -> BigInt {
        a.numerator() << (e - a.exponent())
    }

    fn is_canonical(a: &Dyadic) -> bool {
        if a.is_zero() {
            a.exponent() == 0
        } else {
            a.exponent() == 0 || a.numerator().is_odd()
        }
    }

    proptest! {
        #[test]
        fn field_laws(a in arb_dyadic(), b in arb_dyadic(), c in arb_dyadic()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
            for r in [&a + &b, &a - &b, &a * &b] {
                prop_assert!(is_canonical(&r));
            }
        }

        #[test]
        fn values_match_cross_multiplication(a in arb_dyadic(), b in arb_dyadic()) {
            let e = a.exponent().max(b.exponent());
            let sum = &a + &b;
            prop_assert_eq!(over(&sum, e.max(sum.exponent())) , over(&a, e.max(sum.exponent())) + over(&b, e.max(sum.exponent())));
            let prod = &a * &b;
            let pe = a.exponent() + b.exponent();
            prop_assert_eq!(over(&prod, pe), a.numerator() * b.numerator());
            prop_assert_eq!(a.cmp(&b), over(&a, e).cmp(&over(&b, e)));
        }

        #[test]
        fn normalize_idempotent(m in any::<i64>(), k in 0u64..80) {
            let x = Dyadic::new(m, k);
            prop_assert!(is_canonical(&x));
            let again = Dyadic::new(x.numerator().clone(), x.exponent());
            prop_assert_eq!(&again, &x);
            prop_assert_eq!(x.cmp(&again) == Ordering::Equal, true);
        }

        #[test]
        fn from_f64_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let dy = Dyadic::from_f64(x).unwrap();
            prop_assert!(is_canonical(&dy));
            prop_assert_eq!(dy.to_f64(), x);
        }

        #[test]
        fn scale_pow2_inverts(a in arb_dyadic(), j in -60i64..60) {
            prop_assert_eq!(a.scale_pow2(j).scale_pow2(-j), a);
        }
    }
}
