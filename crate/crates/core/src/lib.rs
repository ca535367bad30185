//! Numerical laboratory for `u_t − Δu = u^p + M|∇u|^q`: exponent
//! classification, an explicit finite-difference solver, Bernstein-type
//! pointwise checks, integral inequalities, the doubling search and
//! experiment orchestration.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bernstein;
pub mod doubling;
pub mod error;
pub mod estimates;
pub mod experiment;
pub mod grid;
pub mod integral;
pub mod params;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
pub use params::{ProblemParams, Regime};
