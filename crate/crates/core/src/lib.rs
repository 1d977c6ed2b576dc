//! Weighted polynomial approximation on `[-1, 1]`.
//!
//! The crate computes Jacobi-weighted `L_p` (quasi-)norms, classical and
//! Ditzian–Totik moduli of smoothness, and degrees of best unconstrained,
//! convex and coconvex polynomial (and spline) approximation. Around those
//! kernels sit a generalized Lebesgue–Stieltjes sum engine, Fejér-type
//! operators with `A`-statistical limit verdicts, and an experiment harness
//! that tabulates the resulting comparison ratios.
//!
//! All internal math runs on `[-1, 1]`; general intervals are carried by an
//! affine [`polynomials::Interval`] map.

pub mod error;
pub mod expr;
pub mod func;
pub mod harness;
pub mod korovkin;
pub mod polynomials;
pub mod shape;
pub mod smoothness;
pub mod solvers;
pub mod stieltjes;
pub mod weighted_spaces;

pub use error::{Error, Result};
pub use func::Func;
pub use polynomials::{ChebyshevPartition, ChebyshevPolynomial, Continuity, Interval, PiecewisePolynomial};
pub use shape::InflectionPartition;
pub use weighted_spaces::{JacobiWeight, WeightedNormParams};
