//! Population-current calculus for catalytic cooling of diagonal quantum states.
//!
//! Every state is a probability vector in a fixed eigenbasis and every
//! unitary is a composition of real two-level rotations, so the dynamics
//! reduce exactly to population maps.

pub mod cnu;
pub mod cooling;
pub mod currents;
pub mod error;
pub mod multiqubit;
pub mod oracle;
pub mod report;
pub mod state;
pub mod thermometry;

pub use error::{Error, Result};

/// Margin used for every strict inequality: `a > b` means `a - b > EPS`.
pub const EPS: f64 = 1e-12;
