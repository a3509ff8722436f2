//! Slice regular functions on the quaternionic unit ball.
//!
//! The crate has two evaluation backends that are kept independent on
//! purpose: [`expr`] evaluates regular Moebius expression trees exactly
//! through pointwise product and rotation rules, while [`series`] works with
//! truncated power series and certified tail bounds. On top of these sit the
//! hyperbolic quotient machinery ([`hyperbolic`]), the Nevanlinna-Pick solver
//! for real nodes ([`interpolation`]) and sampled verification suites
//! ([`verify`]).

pub mod expr;
pub mod hyperbolic;
pub mod interpolation;
pub mod majorant;
pub mod moebius;
pub mod quaternion;
pub mod sampling;
pub mod series;
pub mod tolerances;
pub mod verify;

pub use expr::{Expr, ExprError, ExprKind};
pub use moebius::MoebiusMap;
pub use quaternion::{Quaternion, SimilaritySphere};
pub use series::{Evaluation, SeriesError, TaylorSeries};
