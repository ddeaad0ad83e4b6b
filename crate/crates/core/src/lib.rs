//! Robust minimax regression designs on finite design spaces.
//!
//! The crate builds the orthonormal regressor basis for a design space,
//! evaluates the integrated variance and maximum squared bias of a design,
//! minimizes their convex combination, traces the resulting frontier, solves
//! the bounded-bias and bounded-variance problems along it, and rounds
//! continuous designs to integer allocations.

pub mod apportion;
pub mod cli;
pub mod criteria;
pub mod error;
mod linalg;
pub mod model;
pub mod optimizer;

pub use error::{DesignError, Result};
