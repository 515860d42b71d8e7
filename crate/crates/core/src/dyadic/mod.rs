//! Dyadic intervals, step functions and the Haar transform on `[0,1]`.

mod haar;
mod index;
mod step;

pub use haar::{haar_analyze, haar_synthesize, HaarCoeffs};
pub use index::{DyadicIndex, Relation, MAX_LEVEL};
pub use step::{inner, StepFunction, MAX_STEP_DEPTH};
