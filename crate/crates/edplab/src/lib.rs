//! Desk-scale numerical laboratory for weighted discrepancy along
//! homogeneous arithmetic progressions.
//!
//! The crate materializes the objects of the weighted Erdos discrepancy
//! problem at finite scale: multiplicative functions and their epsilon-net
//! discretization, structured and random weight generators, Cesaro and
//! logarithmic averages, multiplicative Folner boxes with measured dilation
//! defects, correlation and decoupling estimators, discrepancy profiles
//! with witnesses, a branch-and-bound search for extremal bounded-
//! discrepancy sequences, Gram positive-semidefiniteness checks, and
//! Monte-Carlo tail-bound verification. Everything randomized is a pure
//! function of an explicit seed (see [`rng`]); everything summed reduces
//! deterministically at any worker count (see [`numeric`]).

pub mod averaging;
pub mod cli;
pub mod correlation;
pub mod discrepancy;
pub mod error;
pub mod gram;
pub mod numeric;
pub mod numtheory;
pub mod poly;
pub mod randomized;
pub mod rng;
pub mod search;
pub mod sequence;
pub mod weights;

pub use error::{Error, Result};
pub use sequence::UnitDiscSequence;
