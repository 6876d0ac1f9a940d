//! Feasible smoothing accelerated projected gradient (S-APG) for nonsmooth
//! convex minimization, with S-PG and projected subgradient baselines, the
//! spectral log-sum-exp smoothing of the largest eigenvalue, and a truss
//! robust compliance test problem.

pub mod checks;
pub mod cli;
pub mod error;
pub mod feasible_set;
pub mod linalg;
pub mod smoothing;
pub mod solvers;
pub mod truss;

pub use error::{Error, Result};
