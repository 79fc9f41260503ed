//! Dynamic iteration for coupled passive linear systems.
//!
//! Subsystems are described as [`SystemNode`]s carrying an energy weight,
//! composed block-diagonally and closed by a monotone [`CouplingOperator`].
//! After implicit-midpoint time discretization the closed loop becomes
//! `M(x, u) + N(x, u) = 0` on trajectory space, which
//! [`splitting::run`] solves with the Peaceman–Rachford iteration while
//! checking the convergence estimates at every step.

pub mod discrete;
pub mod error;
pub mod linalg;
pub mod models;
pub mod node;
pub mod reference;
pub mod splitting;
pub mod trajectory;

pub use discrete::{CoupledProblem, OperatorImage};
pub use error::{Error, Result};
pub use node::{CouplingOperator, NodeBlocks, SystemNode};
pub use trajectory::{GridTrajectory, Sampling, TimeGrid, TrajPair};
