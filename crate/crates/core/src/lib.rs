//! Exact dynamics of interval translation maps on the circle.
//!
//! The crate computes forward attractors and invariant measures of
//! interval translation maps with rational parameters, approximates maps
//! with arbitrary-precision parameters by relation-preserving rational
//! maps, builds the measure-theoretic conjugacy to an interval exchange,
//! and runs Birkhoff empirical-measure experiments for general piecewise
//! continuous maps of the circle or the segment.
//!
//! Every set, measure and map parameter is an exact rational. Floating
//! point only appears where transcendental test functions are integrated.

pub mod approx;
pub mod circle;
pub mod conjugacy;
pub mod error;
pub mod itm;
pub mod measure;
pub mod piecewise;
pub mod rational;

pub use circle::{Arc, ArcSet, CirclePoint};
pub use error::{Error, Result};
pub use itm::{AttractorResult, EndpointOrbit, FiniteType, Itm, Side};
pub use measure::{Cdf, Measure};
pub use rational::Rational;

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
