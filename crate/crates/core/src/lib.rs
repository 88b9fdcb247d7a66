//! Step-search negative-curvature methods under probabilistic oracles.
//!
//! The crate bundles the test problems, oracle simulators, eigen/curvature
//! routines, the solvers, the theory calculators and the experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod directions;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
