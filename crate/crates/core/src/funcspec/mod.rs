//! Target diffeomorphisms: parsed expressions or built-in families, evaluated
//! with forward-mode derivatives, and the validators for the interval and
//! circle-lift preconditions.

pub mod dual;
pub mod expr;
pub mod parser;

use std::f64::consts::TAU;
use std::fmt;

pub use dual::Dual;
pub use expr::Expr;
pub use parser::parse;

use crate::error::FuncError;
use crate::plmap::Space;

/// Endpoint tolerance used by the validators.
pub const DEFAULT_ENDPOINT_TOL: f64 = 1e-9;
/// Lower bound the derivative must exceed at every sample.
pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-9;
pub const DEFAULT_VALIDATION_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Identity,
    /// `x + a x (1 - x)`, `|a| < 1`.
    Bump {
        a: f64,
    },
    /// `(e^(a x) - 1) / (e^a - 1)`, `a != 0`.
    ExpWarp {
        a: f64,
    },
    /// `x + c`.
    Rot {
        c: f64,
    },
    /// `y + a sin(2 pi y) / (2 pi)` with `y = x + c`, `|a| < 1`.
    Sine {
        a: f64,
        c: f64,
    },
}

fn expect_params(name: &str, params: &[f64], allowed: &[usize]) -> Result<(), FuncError> {
    if !allowed.contains(&params.len()) {
        return Err(FuncError::ParameterOutOfRange(format!(
            "`{name}` takes {allowed:?} parameters, got {}",
            params.len()
        )));
    }
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(FuncError::ParameterOutOfRange(format!("`{name}`: {p} is not finite")));
    }
    Ok(())
}

impl Family {
    pub fn new(name: &str, params: &[f64]) -> Result<Family, FuncError> {
        let family = match name {
            "identity" => {
                expect_params(name, params, &[0])?;
                Family::Identity
            }
            "bump" => {
                expect_params(name, params, &[1])?;
                Family::Bump { a: params[0] }
            }
            "expwarp" => {
                expect_params(name, params, &[1])?;
                Family::ExpWarp { a: params[0] }
            }
            "rot" => {
                expect_params(name, params, &[1])?;
                Family::Rot { c: params[0] }
            }
            "sine" => {
                expect_params(name, params, &[1, 2])?;
                Family::Sine {
                    a: params[0],
                    c: params.get(1).copied().unwrap_or(0.0),
                }
            }
            _ => return Err(FuncError::UnknownFamily(name.to_string())),
        };
        match family {
            Family::Bump { a } | Family::Sine { a, .. } if a.abs() >= 1.0 => Err(FuncError::ParameterOutOfRange(
                format!("`{name}` needs |a| < 1, got {a}"),
            )),
            Family::ExpWarp { a: 0.0 } => Err(FuncError::ParameterOutOfRange("`expwarp` needs a != 0".into())),
            f => Ok(f),
        }
    }

    /// Parses `name`, `name:p1,p2,...`, or `sine:a∘rot:c`.
    pub fn parse(text: &str) -> Result<Family, FuncError> {
        let text = text.trim();
        if let Some((outer, inner)) = text.split_once('∘') {
            return match (Family::parse(outer)?, Family::parse(inner)?) {
                (Family::Sine { a, c: 0.0 }, Family::Rot { c }) => Ok(Family::Sine { a, c }),
                _ => Err(FuncError::UnknownFamily(text.to_string())),
            };
        }
        let (name, params) = match text.split_once(':') {
            Some((name, rest)) => {
                let params = rest
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<f64>()
                            .map_err(|_| FuncError::ParameterOutOfRange(format!("`{p}` is not a number")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (name.trim(), params)
            }
            None => (text, Vec::new()),
        };
        Family::new(name, &params)
    }

    /// The space the family is defined on; the identity works on both.
    pub fn natural_space(&self) -> Space {
        match self {
            Family::Identity | Family::Bump { .. } | Family::ExpWarp { .. } => Space::Interval,
            Family::Rot { .. } | Family::Sine { .. } => Space::CircleLift,
        }
    }

    fn eval_dual(&self, x: Dual) -> Dual {
        match *self {
            Family::Identity => x,
            Family::Bump { a } => x + x * (Dual::constant(1.0) - x) * a,
            Family::ExpWarp { a } => (x * a).exp_m1() * (1.0 / a.exp_m1()),
            Family::Rot { c } => x + c,
            Family::Sine { a, c } => {
                let y = x + c;
                y + (y * TAU).sin() * (a / TAU)
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Identity => write!(f, "identity"),
            Family::Bump { a } => write!(f, "bump:{a}"),
            Family::ExpWarp { a } => write!(f, "expwarp:{a}"),
            Family::Rot { c } => write!(f, "rot:{c}"),
            Family::Sine { a, c } if *c == 0.0 => write!(f, "sine:{a}"),
            Family::Sine { a, c } => write!(f, "sine:{a},{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Expr(Expr),
    Family(Family),
}

/// A target map `f` (interval) or lift `f~` (circle), with an optional
/// caller-supplied bound `S >= max f'`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoSpec {
    pub source: Source,
    pub space: Space,
    pub derivative_bound: Option<f64>,
}

impl DiffeoSpec {
    pub fn from_expr(text: &str, space: Space) -> Result<Self, FuncError> {
        Ok(DiffeoSpec {
            source: Source::Expr(parse(text)?),
            space,
            derivative_bound: None,
        })
    }

    pub fn from_family(family: Family, space: Space) -> Self {
        DiffeoSpec {
            source: Source::Family(family),
            space,
            derivative_bound: None,
        }
    }

    /// A built-in family on its natural space.
    pub fn family(text: &str) -> Result<Self, FuncError> {
        let family = Family::parse(text)?;
        let space = family.natural_space();
        Ok(Self::from_family(family, space))
    }

    pub fn with_derivative_bound(mut self, s: f64) -> Self {
        self.derivative_bound = Some(s);
        self
    }

    /// `(f(x), f'(x))` by forward-mode differentiation.
    pub fn eval_dual(&self, x: f64) -> Result<Dual, FuncError> {
        let r = match &self.source {
            Source::Expr(e) => e.eval_dual(Dual::variable(x)),
            Source::Family(f) => f.eval_dual(Dual::variable(x)),
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err(FuncError::Domain(x))
        }
    }

    pub fn value(&self, x: f64) -> Result<f64, FuncError> {
        let r = match &self.source {
            Source::Expr(e) => e.eval_dual(Dual::constant(x)),
            Source::Family(f) => f.eval_dual(Dual::constant(x)),
        };
        if r.value.is_finite() {
            Ok(r.value)
        } else {
            Err(FuncError::Domain(x))
        }
    }

    pub fn derivative(&self, x: f64) -> Result<f64, FuncError> {
        self.eval_dual(x).map(|d| d.deriv)
    }

    pub fn validate(&self, grid_size: usize, tol: f64) -> DiffeoReport {
        match self.space {
            Space::Interval => validate_interval_diffeo(self, grid_size, tol),
            Space::CircleLift => validate_circle_lift(self, grid_size, tol),
        }
    }
}

impl fmt::Display for DiffeoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Expr(e) => write!(f, "{e}"),
            Source::Family(fam) => write!(f, "{fam}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiffeoViolation {
    StartValue { value: f64 },
    EndValue { value: f64 },
    NonPositiveDerivative { x: f64, derivative: f64 },
    LiftIdentity { x: f64, defect: f64 },
    Evaluation { x: f64 },
}

impl fmt::Display for DiffeoViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffeoViolation::StartValue { value } => write!(f, "f(0) = {value}, expected 0"),
            DiffeoViolation::EndValue { value } => write!(f, "f(1) = {value}, expected 1"),
            DiffeoViolation::NonPositiveDerivative { x, derivative } => {
                write!(f, "f'({x}) = {derivative} is not positive")
            }
            DiffeoViolation::LiftIdentity { x, defect } => {
                write!(f, "f({x} + 1) - f({x}) - 1 = {defect}")
            }
            DiffeoViolation::Evaluation { x } => write!(f, "f is undefined at {x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffeoReport {
    pub violations: Vec<DiffeoViolation>,
}

impl DiffeoReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    }
}

fn grid(grid_size: usize) -> impl Iterator<Item = f64> {
    let n = grid_size.max(1);
    (0..=n).map(move |i| i as f64 / n as f64)
}

fn check_derivative(f: &DiffeoSpec, grid_size: usize, tol: f64, out: &mut Vec<DiffeoViolation>) {
    for x in grid(grid_size) {
        match f.derivative(x) {
            Ok(d) if d > tol => {}
            Ok(d) => out.push(DiffeoViolation::NonPositiveDerivative { x, derivative: d }),
            Err(_) => out.push(DiffeoViolation::Evaluation { x }),
        }
    }
}

/// Checks `f(0) = 0`, `f(1) = 1` within `tol` and `f' > tol` on the grid.
pub fn validate_interval_diffeo(f: &DiffeoSpec, grid_size: usize, tol: f64) -> DiffeoReport {
    let mut violations = Vec::new();
    match f.value(0.0) {
        Ok(v) if v.abs() <= tol => {}
        Ok(value) => violations.push(DiffeoViolation::StartValue { value }),
        Err(_) => violations.push(DiffeoViolation::Evaluation { x: 0.0 }),
    }
    match f.value(1.0) {
        Ok(v) if (v - 1.0).abs() <= tol => {}
        Ok(value) => violations.push(DiffeoViolation::EndValue { value }),
        Err(_) => violations.push(DiffeoViolation::Evaluation { x: 1.0 }),
    }
    check_derivative(f, grid_size, tol, &mut violations);
    DiffeoReport { violations }
}

/// Checks `f(x + 1) = f(x) + 1` within `tol` and `f' > tol` on the grid.
pub fn validate_circle_lift(f: &DiffeoSpec, grid_size: usize, tol: f64) -> DiffeoReport {
    let mut violations = Vec::new();
    for x in grid(grid_size) {
        match (f.value(x), f.value(x + 1.0)) {
            (Ok(a), Ok(b)) => {
                let defect = b - a - 1.0;
                if defect.abs() > tol {
                    violations.push(DiffeoViolation::LiftIdentity { x, defect });
                }
            }
            _ => violations.push(DiffeoViolation::Evaluation { x }),
        }
    }
    check_derivative(f, grid_size, tol, &mut violations);
    DiffeoReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(text: &str) -> DiffeoSpec {
        DiffeoSpec::family(text).unwrap()
    }

    #[test]
    fn eval_dual_examples() {
        let sin = DiffeoSpec::from_expr("sin(x)", Space::Interval).unwrap();
        assert_eq!(sin.eval_dual(0.0).unwrap(), Dual::new(0.0, 1.0));
        let bump = fam("bump:0.3");
        let r = bump.eval_dual(0.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!((r.deriv - 1.3).abs() < 1e-15);
        let sq = DiffeoSpec::from_expr("x^2", Space::Interval).unwrap();
        assert_eq!(sq.eval_dual(3.0).unwrap(), Dual::new(9.0, 6.0));
        let log = DiffeoSpec::from_expr("log(x)", Space::Interval).unwrap();
        assert_eq!(log.eval_dual(0.0), Err(FuncError::Domain(0.0)));
        assert_eq!(log.eval_dual(-1.0), Err(FuncError::Domain(-1.0)));
    }

    #[test]
    fn family_examples() {
        let b = fam("bump:0");
        for i in 0..=8 {
            let x = i as f64 / 8.0;
            assert_eq!(b.value(x).unwrap(), x);
        }
        assert_eq!(fam("expwarp:1").value(1.0).unwrap(), 1.0);
        assert_eq!(fam("expwarp:-2").value(1.0).unwrap(), 1.0);
        assert_eq!(fam("expwarp:1").value(0.0).unwrap(), 0.0);
        assert!((fam("sine:0.2").derivative(0.0).unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(fam("rot:0.3").space, Space::CircleLift);
        assert_eq!(
            Family::parse("sine:0.2∘rot:0.3").unwrap(),
            Family::Sine { a: 0.2, c: 0.3 }
        );
        assert_eq!(Family::parse("sine:0.2,0.3").unwrap(), Family::Sine { a: 0.2, c: 0.3 });
        assert_eq!(Family::parse("sine:0.2,0.3").unwrap().to_string(), "sine:0.2,0.3");
    }

    #[test]
    fn family_errors() {
        assert_eq!(Family::parse("warp:1"), Err(FuncError::UnknownFamily("warp".into())));
        assert!(matches!(
            Family::parse("bump:1"),
            Err(FuncError::ParameterOutOfRange(_))
        ));
        assert!(matches!(
            Family::parse("bump:-1.5"),
            Err(FuncError::ParameterOutOfRange(_))
        ));
        assert!(matches!(
            Family::parse("sine:1"),
            Err(FuncError::ParameterOutOfRange(_))
        ));
        assert!(matches!(
            Family::parse("expwarp:0"),
            Err(FuncError::ParameterOutOfRange(_))
        ));
        assert!(matches!(Family::parse("bump"), Err(FuncError::ParameterOutOfRange(_))));
        assert!(matches!(
            Family::parse("bump:abc"),
            Err(FuncError::ParameterOutOfRange(_))
        ));
        assert!(matches!(
            Family::parse("identity:1"),
            Err(FuncError::ParameterOutOfRange(_))
        ));
    }

    #[test]
    fn interval_validation() {
        let tol = DEFAULT_POSITIVITY_TOL;
        assert!(validate_interval_diffeo(&fam("identity"), 1024, tol).is_ok());
        assert!(validate_interval_diffeo(&fam("bump:0.3"), 1024, tol).is_ok());
        let sq = DiffeoSpec::from_expr("x^2", Space::Interval).unwrap();
        let report = validate_interval_diffeo(&sq, 1024, tol);
        assert_eq!(
            report.violations,
            vec![DiffeoViolation::NonPositiveDerivative {
                x: 0.0,
                derivative: 0.0
            }]
        );
        let shifted = DiffeoSpec::from_expr("x + 0.1", Space::Interval).unwrap();
        let report = validate_interval_diffeo(&shifted, 16, tol);
        assert!(matches!(report.violations[0], DiffeoViolation::StartValue { .. }));
        assert!(matches!(report.violations[1], DiffeoViolation::EndValue { .. }));
        let log = DiffeoSpec::from_expr("log(x + 1) / log(2)", Space::Interval).unwrap();
        assert!(validate_interval_diffeo(&log, 256, tol).is_ok());
        let bad = DiffeoSpec::from_expr("log(x)", Space::Interval).unwrap();
        assert!(validate_interval_diffeo(&bad, 16, tol)
            .violations
            .contains(&DiffeoViolation::Evaluation { x: 0.0 }));
    }

    #[test]
    fn circle_validation() {
        let tol = DEFAULT_POSITIVITY_TOL;
        let rot = DiffeoSpec::from_expr("x + 0.3", Space::CircleLift).unwrap();
        assert!(validate_circle_lift(&rot, 1024, tol).is_ok());
        assert!(validate_circle_lift(&fam("sine:0.2"), 1024, tol).is_ok());
        let bad = DiffeoSpec::from_expr("x + sin(x)", Space::CircleLift).unwrap();
        let report = validate_circle_lift(&bad, 64, tol);
        assert!(matches!(report.violations[0], DiffeoViolation::LiftIdentity { .. }));
    }

    #[test]
    fn families_validate_across_parameters() {
        for i in -9..=9 {
            let a = i as f64 / 10.0;
            let bump = DiffeoSpec::from_family(Family::Bump { a }, Space::Interval);
            assert!(bump.validate(512, DEFAULT_POSITIVITY_TOL).is_ok(), "bump:{a}");
            let sine = DiffeoSpec::from_family(Family::Sine { a, c: 0.3 }, Space::CircleLift);
            assert!(sine.validate(512, DEFAULT_POSITIVITY_TOL).is_ok(), "sine:{a}");
            if i != 0 {
                let warp = DiffeoSpec::from_family(Family::ExpWarp { a: 3.0 * a }, Space::Interval);
                assert!(warp.validate(512, DEFAULT_POSITIVITY_TOL).is_ok(), "expwarp:{a}");
            }
            let rot = DiffeoSpec::from_family(Family::Rot { c: a }, Space::CircleLift);
            assert!(rot.validate(512, DEFAULT_POSITIVITY_TOL).is_ok(), "rot:{a}");
        }
    }

    #[test]
    fn dual_matches_central_differences() {
        let h = 2f64.powi(-20);
        let specs = [
            fam("identity"),
            fam("bump:0.3"),
            fam("bump:-0.3"),
            fam("expwarp:1"),
            fam("expwarp:-2"),
            fam("rot:0.3"),
            fam("sine:0.2"),
            fam("sine:0.2,0.3"),
            DiffeoSpec::from_expr("tanh(x) + sqrt(x + 1) * cos(x) / exp(x)", Space::Interval).unwrap(),
        ];
        for f in &specs {
            for i in 0..=256 {
                let x = i as f64 / 256.0;
                let dual = f.derivative(x).unwrap();
                let fd = (f.value(x + h).unwrap() - f.value(x - h).unwrap()) / (2.0 * h);
                assert!(
                    (dual - fd).abs() <= 1e-6 * dual.abs().max(1.0),
                    "{f} at {x}: {dual} vs {fd}"
                );
            }
        }
    }
}
