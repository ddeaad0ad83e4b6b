use nalgebra::DMatrix;

use super::measure::DesignMeasure;
use super::regressors::RegressorMatrix;
use crate::error::{DesignError, Result};
use crate::linalg::{numerical_rank, row_subset_rank};

/// `Q`: an `N x p` matrix with orthonormal columns spanning the column space
/// of `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    q: DMatrix<f64>,
    source: DMatrix<f64>,
}

impl OrthonormalBasis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// The regressor matrix this basis spans.
    pub fn source(&self) -> &DMatrix<f64> {
        &self.source
    }

    pub fn n_points(&self) -> usize {
        self.q.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.q.ncols()
    }

    /// Errors unless the support of `xi` spans all `p` columns.
    pub fn check_admissible(&self, xi: &DesignMeasure) -> Result<()> {
        if xi.len() != self.n_points() {
            return Err(DesignError::Dimension(format!(
                "design has {} weights, space has {} points",
                xi.len(),
                self.n_points()
            )));
        }
        let rank = self.support_rank(&xi.support());
        if rank < self.n_params() {
            return Err(DesignError::InadmissibleDesign {
                rank,
                p: self.n_params(),
            });
        }
        Ok(())
    }

    pub(crate) fn support_rank(&self, rows: &[usize]) -> usize {
        row_subset_rank(&self.q, rows)
    }
}

/// Orthonormal basis by column-pivoted Householder QR.
///
/// Each column of `Q` is signed so that its first nonzero entry is positive.
pub fn orthonormalize(f: &RegressorMatrix) -> Result<OrthonormalBasis> {
    let m = f.matrix();
    let p = m.ncols();
    let rank = numerical_rank(m, 1e-10);
    if rank < p {
        return Err(DesignError::RankDeficient { rank, p });
    }
    let qr = m.clone().col_piv_qr();
    let mut q = qr.q();
    for mut col in q.column_iter_mut() {
        let scale = col.amax();
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-12 * scale) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    Ok(OrthonormalBasis { q, source: m.clone() })
}
