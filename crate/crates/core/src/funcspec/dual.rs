use std::ops::{Add, Div, Mul, Neg, Sub};

/// Forward-mode dual number `value + deriv·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn new(value: f64, deriv: f64) -> Self {
        Dual { value, deriv }
    }

    pub fn constant(value: f64) -> Self {
        Dual { value, deriv: 0.0 }
    }

    /// The independent variable at `x`.
    pub fn variable(x: f64) -> Self {
        Dual { value: x, deriv: 1.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.deriv.is_finite()
    }

    pub fn sin(self) -> Self {
        Dual::new(self.value.sin(), self.deriv * self.value.cos())
    }

    pub fn cos(self) -> Self {
        Dual::new(self.value.cos(), -self.deriv * self.value.sin())
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        Dual::new(e, self.deriv * e)
    }

    /// `exp(x) - 1`, accurate near zero.
    pub fn exp_m1(self) -> Self {
        Dual::new(self.value.exp_m1(), self.deriv * self.value.exp())
    }

    pub fn ln(self) -> Self {
        Dual::new(self.value.ln(), self.deriv / self.value)
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        Dual::new(s, self.deriv / (2.0 * s))
    }

    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        Dual::new(t, self.deriv * (1.0 - t * t))
    }

    /// `self^c` for a constant exponent.
    pub fn powf(self, c: f64) -> Self {
        if c == 0.0 {
            return Dual::constant(1.0);
        }
        if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
            let n = c as i32;
            let lower = self.value.powi(n - 1);
            return Dual::new(lower * self.value, self.deriv * c * lower);
        }
        Dual::new(self.value.powf(c), self.deriv * c * self.value.powf(c - 1.0))
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.value * rhs.value, self.value * rhs.deriv + self.deriv * rhs.value)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        Dual::new(
            self.value / rhs.value,
            (self.deriv * rhs.value - self.value * rhs.deriv) / (rhs.value * rhs.value),
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.deriv)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, rhs: f64) -> Dual {
        Dual::new(self.value + rhs, self.deriv)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, rhs: f64) -> Dual {
        Dual::new(self.value * rhs, self.deriv * rhs)
    }
}
