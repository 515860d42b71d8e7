//! Dyadic fractional Sobolev spaces on `[0, 1]`, realized exactly on
//! finite-depth step functions.

pub mod capacity;
pub mod carleson;
pub mod dyadic;
pub mod error;
pub mod identities;
pub mod lipschitz;
pub mod norms;
pub mod operators;
pub mod parallel;
pub mod random;
pub mod suites;

pub use error::{Error, Result};
