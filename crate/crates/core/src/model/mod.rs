//! Finite design spaces, regressor evaluation, and the orthonormal basis
//! on which every criterion is computed.

mod basis;
mod measure;
mod regressors;
mod space;

pub use basis::{orthonormalize, OrthonormalBasis};
pub use measure::DesignMeasure;
pub use regressors::{evaluate_regressors, monomial_exponents, RegressorMatrix, RegressorSpec};
pub use space::{build_grid_space, DesignSpace};
