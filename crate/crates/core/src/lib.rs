//! Resilient maximization of monotone set functions over matroid
//! constraints against worst-case element removals.
//!
//! The crate provides the matroid families used as selection and removal
//! constraints, set-function oracles with curvature tools, the two-phase
//! resilient solver, brute-force oracles for certification on small
//! instances, the approximation bounds, and a sensing-constrained LQG
//! experiment built on top of them.

pub mod bounds;
pub mod error;
pub mod exact_oracles;
pub mod harness;
pub mod lqg;
pub mod matroid;
pub mod setfn;
pub mod solver;
pub mod subset;

pub use error::{Error, Result};
pub use exact_oracles::{OracleOptions, OracleResult};
pub use matroid::{IndependenceOracle, Matroid, MatroidDescriptor};
pub use setfn::{ObjectiveDescriptor, SetFunction};
pub use solver::{solve_resilient, SolverOutput};
pub use subset::{ElementId, GroundSet, Subset};
