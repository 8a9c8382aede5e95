use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DyadicError {
    #[error("non-finite input {0}")]
    NonFinite(f64),
    #[error("empty interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlError {
    #[error("a piecewise-linear map needs at least two points")]
    TooFewPoints,
    #[error("coordinates not strictly increasing at point {0}")]
    NotIncreasing(usize),
    #[error("interval maps must fix 0 and 1")]
    IntervalEndpoints,
    #[error("circle lifts must span x in [0, 1] with y(1) = y(0) + 1 and 0 <= y(0) < 1")]
    LiftNormalization,
    #[error("argument {0} outside the domain [0, 1]")]
    OutOfDomain(f64),
    #[error("value at {0} is not a dyadic rational")]
    NonDyadicResult(String),
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("not an element of Thompson's group: {0}")]
    InvalidElement(String),
    #[error("rotation amount {0} outside [0, 1)")]
    RotationOutOfRange(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("side lengths must be positive")]
    NonPositiveSide,
    #[error("degenerate rectangle: corners must increase in both coordinates")]
    DegenerateRectangle,
    #[error("interpolation would need more than {0} pieces")]
    TooManyPieces(u64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuncError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation at x = {0} produced a non-finite value")]
    Domain(f64),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("family parameter out of range: {0}")]
    ParameterOutOfRange(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error("input is not a valid diffeomorphism: {0}")]
    InvalidDiffeo(String),
    #[error("input violates the lift identity: {0}")]
    LiftViolation(String),
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("construction failed: {0}")]
    ConstructionFailure(String),
    #[error(transparent)]
    Eval(#[from] FuncError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Pl(#[from] PlError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("function and element live on different spaces")]
    SpaceMismatch,
    #[error("derivative is identically 1: the input is a rotation")]
    Rotation,
    #[error("gap is undefined for non-positive value {0}")]
    NonPositive(f64),
    #[error(transparent)]
    Eval(#[from] FuncError),
}
