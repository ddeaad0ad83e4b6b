use nalgebra::DMatrix;

use crate::criteria::{check_nu, moments_raw, MomentBundle};
use crate::error::Result;
use crate::model::{DesignMeasure, OrthonormalBasis};

/// Step used for finite differences of `maxbias` when the top eigenvalue of
/// `U` is (near-)degenerate.
pub const FD_STEP: f64 = 1e-6;

/// Point-addition scores `t_i`: minus the directional derivative of the
/// mixed loss at `xi` toward the one-point design at `x_i`.
///
/// A positive score means adding mass at `x_i` lowers the loss; at a minimizer
/// every score is `<= 0`.
pub fn directional_scores(q: &OrthonormalBasis, xi: &DesignMeasure, nu: f64) -> Result<Vec<f64>> {
    check_nu(nu)?;
    q.check_admissible(xi)?;
    let bundle = moments_raw(q.matrix(), xi.weights())?;
    scores_with_bundle(q.matrix(), xi.weights(), nu, &bundle)
}

pub(crate) fn scores_with_bundle(
    q: &DMatrix<f64>,
    weights: &[f64],
    nu: f64,
    bundle: &MomentBundle,
) -> Result<Vec<f64>> {
    let n = q.nrows();
    let r_inv = &bundle.r_inv;
    let tr_r_inv = crate::linalg::trace(r_inv);
    let lambda = bundle.lambda_max;
    let v = &bundle.v_max;
    let a = r_inv * v;
    let analytic_bias = bundle.top_is_unique();

    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let qi = q.row(i).transpose();
        let r_inv_qi = r_inv * &qi;
        // dVar = -tr(R^-1 dR R^-1), dR = q q' - R
        let d_var = tr_r_inv - r_inv_qi.norm_squared();
        let d_bias = if nu == 0.0 {
            0.0
        } else if analytic_bias {
            // v'(-R^-1 dR U + R^-1 dS R^-1 - U dR R^-1)v with Uv = lambda v,
            // a = R^-1 v and dS = 2(xi_i q q' - S) collapses to this.
            let aq = a.dot(&qi);
            let vq = v.dot(&qi);
            -2.0 * lambda * aq * vq + 2.0 * weights[i] * aq * aq
        } else {
            maxbias_central_difference(q, weights, i, FD_STEP)?
        };
        scores.push(-((1.0 - nu) * d_var + nu * d_bias));
    }
    Ok(scores)
}

fn shifted(weights: &[f64], i: usize, h: f64) -> Vec<f64> {
    weights
        .iter()
        .enumerate()
        .map(|(j, &w)| w + h * (if j == i { 1.0 } else { 0.0 } - w))
        .collect()
}

fn maxbias_central_difference(q: &DMatrix<f64>, weights: &[f64], i: usize, h: f64) -> Result<f64> {
    let plus = moments_raw(q, &shifted(weights, i, h))?.lambda_max;
    let minus = moments_raw(q, &shifted(weights, i, -h))?.lambda_max;
    Ok((plus - minus) / (2.0 * h))
}
