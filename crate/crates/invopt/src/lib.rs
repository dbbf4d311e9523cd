//! Forward/inverse optimization toolkit.
//!
//! Given observed decisions and a parametric forward model, this crate
//! estimates objective and/or constraint parameters via classical
//! (hard-feasibility) and data-driven (loss-minimizing) formulations, over an
//! embedded LP / branch-and-bound / conditional-gradient solver stack.
//! Brute-force oracles back every numeric claim in the test suite.

pub mod apps;
pub mod classical;
pub mod datadriven;
pub mod error;
pub mod io;
pub mod linalg;
pub mod master;
pub mod model;
pub mod online;
pub mod oracles;
pub mod solver;

pub use error::{Error, Result};
