//! Stochastic fiber lay-down on `R^d x S^{d-1}`: sphere geometry, potentials,
//! path simulation, generator checks and ergodic diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::result_large_err)]

pub mod dynamics;
pub mod ergodics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod potential;
pub mod rules;
pub mod scalar;

pub use dynamics::{InitialState, Scheme, SimConfig};
pub use error::{FiberError, Result};
pub use potential::{PotentialFamily, PotentialSpec};
pub use scalar::Real;

/// First line of every file written by the crate and its front end.
pub const FORMAT_HEADER: &str = "# fiberlay-format v1";

pub type Potential = PotentialSpec<f64>;
pub type Unit = geometry::UnitVector<f64>;
pub type Angles = geometry::SphericalAngles<f64>;
