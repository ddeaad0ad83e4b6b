//! Variance and maximum-bias criteria on a finite design space.
//!
//! With `Q` the orthonormal basis and `D = diag(xi)`:
//! `R = Q'DQ`, `S = Q'D^2Q`, `U = R^-1 S R^-1`, `VAR = tr R^-1` and
//! `MAXBIAS = ch_max U`. The mixed loss is `(1 - nu) VAR + nu MAXBIAS`.

use nalgebra::{DMatrix, DVector};

use crate::error::{DesignError, Result};
use crate::linalg::{symmetric_eigen, symmetrize, trace};
use crate::model::{DesignMeasure, OrthonormalBasis, RegressorMatrix};

/// Above this condition number of `R` the criteria are refused.
pub const MAX_CONDITION: f64 = 1e12;
/// Eigen gaps at or below this mark the top eigenvector of `U` as non-unique.
pub const DEGENERATE_GAP: f64 = 1e-9;

/// Moment matrices of one design and the top eigenpair of `U`.
#[derive(Debug, Clone)]
pub struct MomentBundle {
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub r_inv: DMatrix<f64>,
    pub lambda_max: f64,
    pub v_max: DVector<f64>,
    /// `lambda_1 - lambda_2` of `U`; infinite when `p = 1`.
    pub eigen_gap: f64,
}

impl MomentBundle {
    /// Whether `v_max` is determined up to sign.
    pub fn top_is_unique(&self) -> bool {
        self.eigen_gap > DEGENERATE_GAP
    }
}

fn describe(weights: &[f64]) -> String {
    let support: Vec<usize> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, _)| i)
        .collect();
    if support.len() > 12 {
        format!("design with {} support points", support.len())
    } else {
        format!("design with support {:?}", support)
    }
}

/// Moments from raw weights; no simplex or rank checks beyond conditioning.
/// Used for finite differences, where weights may step slightly outside the
/// simplex.
pub(crate) fn moments_raw(q: &DMatrix<f64>, weights: &[f64]) -> Result<MomentBundle> {
    let n = q.nrows();
    let p = q.ncols();
    if weights.len() != n {
        return Err(DesignError::Dimension(format!(
            "{} weights for {} points",
            weights.len(),
            n
        )));
    }
    let mut r = DMatrix::zeros(p, p);
    let mut s = DMatrix::zeros(p, p);
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = q.row(i);
        let outer = row.transpose() * row;
        r += &outer * w;
        s += &outer * (w * w);
    }
    let r = symmetrize(&r);
    let s = symmetrize(&s);

    let (r_inv, u, condition) = if weights.iter().all(|&w| w >= 0.0) {
        graded_inverse(q, weights)
    } else {
        eigen_inverse(&r, &s)
    };
    if !(condition <= MAX_CONDITION) {
        return Err(DesignError::SingularMoments {
            condition,
            design: describe(weights),
        });
    }

    let u_eig = symmetric_eigen(&u);
    let lambda_max = u_eig.values[0];
    let eigen_gap = if p > 1 {
        u_eig.values[0] - u_eig.values[1]
    } else {
        f64::INFINITY
    };
    let v_max = u_eig.vectors.column(0).into_owned();
    Ok(MomentBundle {
        r,
        s,
        u,
        r_inv,
        lambda_max,
        v_max,
        eigen_gap,
    })
}

/// `R^-1` and `U` through a pivoted QR of the row-scaled basis
/// `X = D^{1/2} Q` (support rows only, sorted by decreasing norm), so widely
/// varying weights do not cost accuracy: with `X P = Q_x T`,
/// `R^-1 = P T^-1 T^-T P'` and `U = K'K` for `K = D^{1/2} Q_x T^-T P'`.
fn graded_inverse(q: &DMatrix<f64>, weights: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let p = q.ncols();
    let mut rows: Vec<(usize, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i, w.sqrt() * q.row(i).norm()))
        .collect();
    if rows.len() < p {
        return (DMatrix::zeros(p, p), DMatrix::zeros(p, p), f64::INFINITY);
    }
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let x = DMatrix::from_fn(rows.len(), p, |k, j| weights[rows[k].0].sqrt() * q[(rows[k].0, j)]);
    let qr = x.col_piv_qr();
    let t = qr.r();
    let qx = qr.q();
    let mut perm = DMatrix::<f64>::identity(p, p);
    qr.p().permute_columns(&mut perm);

    let sv = t.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    let condition = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return (DMatrix::zeros(p, p), DMatrix::zeros(p, p), condition);
    }
    let Some(t_inv) = t.solve_upper_triangular(&DMatrix::identity(p, p)) else {
        return (DMatrix::zeros(p, p), DMatrix::zeros(p, p), f64::INFINITY);
    };
    // rows of M = T^-T P' satisfy R^-1 = M'M
    let m = t_inv.transpose() * perm.transpose();
    let r_inv = symmetrize(&(m.transpose() * &m));
    let mut k = qx * &m;
    for (row, &(i, _)) in rows.iter().enumerate() {
        let scale = weights[i].sqrt();
        k.row_mut(row).scale_mut(scale);
    }
    let u = symmetrize(&(k.transpose() * &k));
    (r_inv, u, condition)
}

fn eigen_inverse(r: &DMatrix<f64>, s: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let p = r.nrows();
    let r_eig = symmetric_eigen(r);
    let largest = r_eig.values[0];
    let smallest = r_eig.values[p - 1];
    let condition = if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    };
    let inv_diag = DMatrix::from_diagonal(&DVector::from_iterator(p, r_eig.values.iter().map(|l| 1.0 / l)));
    let r_inv = symmetrize(&(&r_eig.vectors * inv_diag * r_eig.vectors.transpose()));
    let u = symmetrize(&(&r_inv * s * &r_inv));
    (r_inv, u, condition)
}

pub fn moments(q: &OrthonormalBasis, xi: &DesignMeasure) -> Result<MomentBundle> {
    q.check_admissible(xi)?;
    moments_raw(q.matrix(), xi.weights())
}

/// Integrated prediction variance, `tr R^-1`.
pub fn variance(bundle: &MomentBundle) -> f64 {
    trace(&bundle.r_inv)
}

/// Maximum integrated squared bias, `ch_max U`.
pub fn maxbias(bundle: &MomentBundle) -> f64 {
    bundle.lambda_max
}

pub fn loss(nu: f64, var: f64, maxbias: f64) -> Result<f64> {
    check_nu(nu)?;
    Ok((1.0 - nu) * var + nu * maxbias)
}

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(DesignError::NuOutOfRange(nu));
    }
    Ok(())
}

/// `nu = tau^2 / (sigma^2 + tau^2)`.
pub fn nu_from_scale(sigma2: f64, tau2: f64) -> Result<f64> {
    if !(sigma2 >= 0.0) || !(tau2 >= 0.0) || !sigma2.is_finite() || !tau2.is_finite() {
        return Err(DesignError::InvalidScale(format!(
            "variances must be finite and nonnegative (sigma2 = {}, tau2 = {})",
            sigma2, tau2
        )));
    }
    if sigma2 + tau2 <= 0.0 {
        return Err(DesignError::InvalidScale("sigma2 and tau2 cannot both be zero".into()));
    }
    Ok(tau2 / (sigma2 + tau2))
}

/// Error variance, contamination budget and run size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossScale {
    sigma2: f64,
    tau2: f64,
    n: usize,
    nu: f64,
}

impl LossScale {
    pub fn new(sigma2: f64, tau2: f64, n: usize) -> Result<Self> {
        let nu = nu_from_scale(sigma2, tau2)?;
        if n == 0 {
            return Err(DesignError::InvalidScale("run size must be at least 1".into()));
        }
        Ok(Self { sigma2, tau2, n, nu })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Worst-case IMSE in response units: `(sigma^2 + tau^2)/n * loss`.
pub fn imse_scale(loss_value: f64, scale: &LossScale) -> f64 {
    (scale.sigma2 + scale.tau2) / scale.n as f64 * loss_value
}

/// Coefficient of maximum bias, `sqrt(maxbias / var)`.
pub fn cmb_value(var: f64, maxbias: f64) -> f64 {
    (maxbias / var).sqrt()
}

/// A unit contaminant orthogonal to the regressors and the bias it attains.
#[derive(Debug, Clone)]
pub struct WorstCasePsi {
    pub psi0: DVector<f64>,
    pub attained_bias: f64,
}

/// Maximizes `psi0' D Q R^-2 Q' D psi0 + 1` over unit `psi0` with
/// `Q' psi0 = 0`.
///
/// Works on an orthonormal basis `W` of the complement of `col(Q)`, so the
/// problem becomes a top eigenpair of `W' D Q R^-2 Q' D W`. This never goes
/// through `U`, which keeps it independent of [`maxbias`].
pub fn worst_case_psi(q: &OrthonormalBasis, xi: &DesignMeasure) -> Result<WorstCasePsi> {
    let n = q.n_points();
    let p = q.n_params();
    if n <= p {
        return Err(DesignError::NoContaminantSpace { n, p });
    }
    q.check_admissible(xi)?;
    let qm = q.matrix();
    let weights = xi.weights();
    let support = xi.support();

    let projector = DMatrix::<f64>::identity(n, n) - qm * qm.transpose();
    let p_eig = symmetric_eigen(&projector);
    let w = p_eig.vectors.columns(0, n - p).into_owned();

    // B' = R^-1 Q' D W = X^+ D^{1/2} W on the support, with X = D^{1/2} Q
    // factored by SVD.
    let x = DMatrix::from_fn(support.len(), p, |k, j| {
        weights[support[k]].sqrt() * qm[(support[k], j)]
    });
    let svd = x.svd(true, true);
    let (u_x, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let sigma = &svd.singular_values;
    if !(sigma.min() > sigma.max() * MAX_CONDITION.sqrt().recip()) {
        return Err(DesignError::SingularMoments {
            condition: (sigma.max() / sigma.min()).powi(2),
            design: describe(weights),
        });
    }
    let mut dw = DMatrix::from_fn(support.len(), n - p, |k, j| {
        weights[support[k]].sqrt() * w[(support[k], j)]
    });
    dw = u_x.transpose() * dw;
    for (row, s) in sigma.iter().enumerate() {
        dw.row_mut(row).scale_mut(1.0 / s);
    }
    let b = (v_t.transpose() * dw).transpose();
    let k = &b * b.transpose();
    let k_eig = symmetric_eigen(&k);
    let top = k_eig.values[0].max(0.0);
    let y = k_eig.vectors.column(0).into_owned();
    let mut psi0 = &w * y;
    let norm = psi0.norm();
    psi0 /= norm;
    let (imax, _) = psi0.iamax_full();
    if psi0[imax] < 0.0 {
        psi0.neg_mut();
    }
    Ok(WorstCasePsi {
        psi0,
        attained_bias: top + 1.0,
    })
}

/// Integrated squared bias for a given unit contaminant:
/// `psi0' D Q R^-2 Q' D psi0 + 1`.
pub fn bias_given_psi(q: &OrthonormalBasis, xi: &DesignMeasure, psi0: &DVector<f64>) -> Result<f64> {
    let n = q.n_points();
    if psi0.len() != n {
        return Err(DesignError::InvalidContaminant(format!(
            "length {} does not match {} points",
            psi0.len(),
            n
        )));
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(DesignError::InvalidContaminant(format!("norm is {}, not 1", norm)));
    }
    let qm = q.matrix();
    let leak = (qm.transpose() * psi0).amax();
    if leak > 1e-8 {
        return Err(DesignError::InvalidContaminant(format!(
            "not orthogonal to the regressors (max |Q'psi0| = {:.3e})",
            leak
        )));
    }
    let bundle = moments(q, xi)?;
    let d_psi = DVector::from_iterator(n, psi0.iter().zip(xi.weights()).map(|(a, b)| a * b));
    let z = &bundle.r_inv * (qm.transpose() * d_psi);
    Ok(z.norm_squared() + 1.0)
}

/// `tr(A M^-1)` with `A = F'F` and `M = F'DF`, computed on the raw
/// regressors rather than the orthonormal basis.
pub fn cross_check_variance(f: &RegressorMatrix, xi: &DesignMeasure) -> Result<f64> {
    let fm = f.matrix();
    if xi.len() != fm.nrows() {
        return Err(DesignError::Dimension(format!(
            "design has {} weights, regressors have {} rows",
            xi.len(),
            fm.nrows()
        )));
    }
    q_free_variance(fm, xi.weights()).ok_or_else(|| DesignError::SingularMoments {
        condition: f64::INFINITY,
        design: describe(xi.weights()),
    })
}

// With X = D^{1/2} F = U S V' on the support, M^-1 = V S^-2 V' and
// tr(A M^-1) = ||F V S^-1||_F^2.
fn q_free_variance(fm: &DMatrix<f64>, weights: &[f64]) -> Option<f64> {
    let p = fm.ncols();
    let support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    if support.len() < p {
        return None;
    }
    let x = DMatrix::from_fn(support.len(), p, |k, j| {
        weights[support[k]].sqrt() * fm[(support[k], j)]
    });
    let svd = x.svd(false, true);
    let sigma = &svd.singular_values;
    if !(sigma.min() > 0.0) {
        return None;
    }
    let mut g = fm * svd.v_t?.transpose();
    for (j, s) in sigma.iter().enumerate() {
        g.column_mut(j).scale_mut(1.0 / s);
    }
    Some(g.norm_squared())
}
