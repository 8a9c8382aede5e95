//! Approximation of orientation-preserving C¹ diffeomorphisms of the interval
//! and the circle by elements of Thompson's groups F and T.
//!
//! All group elements carry exact dyadic breakpoint data ([`dyadic::Dyadic`]);
//! floating point only enters when the target diffeomorphism is evaluated.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod approx;
pub mod dyadic;
pub mod error;
pub mod funcspec;
pub mod interp;
pub mod plmap;

pub use analysis::{certified_sup_distance, derivative_distance_lb, Certificate};
pub use approx::{approximate, approximate_circle, approximate_interval, ApproxParams, Approximation};
pub use dyadic::{find_dyadic_in, Dyadic};
pub use error::{AnalysisError, ApproxError, DyadicError, FuncError, InterpError, ParseError, PlError};
pub use funcspec::{DiffeoSpec, Family};
pub use interp::dyadic_interpolation;
pub use plmap::{BreakpointSet, PLMap, Point, Space, ThompsonReport};
