//! Sequential point-addition minimization of the mixed loss over the
//! probability simplex, and the frontier searches built on it.

mod frontier;
mod scores;

pub use frontier::{
    default_nu_grid, find_nu_for_cmb, frontier_point, solve_rbb, solve_rbv, sweep_frontier, BoundedDesign,
    FrontierPoint, DEFAULT_GRID_POINTS,
};
pub use scores::{directional_scores, FD_STEP};

use crate::criteria::{check_nu, moments_raw, MomentBundle};
use crate::error::{DesignError, Result};
use crate::model::{DesignMeasure, OrthonormalBasis};
use scores::scores_with_bundle;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Convergence threshold on the largest score, relative to `1 + |loss|`.
    pub tol: f64,
    /// Cap on attempted point additions; `None` means `200 N`.
    pub max_iter: Option<usize>,
    /// Starting design; `None` means uniform.
    pub start: Option<DesignMeasure>,
    /// Initial pseudo-count `n` in the `1/(n+1)` step; `None` means `N`.
    pub pseudo_count_start: Option<f64>,
    /// After the main loop, points with weight below this and a negative
    /// score are dropped if that does not raise the loss. Zero disables.
    pub prune_below: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: None,
            start: None,
            pseudo_count_start: None,
            prune_below: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// Point additions performed.
    pub iterations: usize,
    /// Additions that produced a new lowest loss.
    pub accepted: usize,
    pub final_max_score: f64,
    /// Running minimum of the loss: the start, then every new lowest value.
    pub loss_history: Vec<f64>,
    pub converged: bool,
    pub pruned: usize,
}

fn loss_of(bundle: &MomentBundle, nu: f64) -> f64 {
    (1.0 - nu) * crate::criteria::variance(bundle) + nu * bundle.lambda_max
}

fn argmax_lowest(t: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &v) in t.iter().enumerate() {
        if v > t[best] {
            best = i;
        }
    }
    (best, t[best])
}

/// Minimizes `(1 - nu) VAR + nu MAXBIAS` by repeatedly adding mass at the
/// point with the largest score: `xi <- (n xi + delta_i)/(n + 1)`, `n <- n + 1`.
///
/// Steps are never undone; the lowest-loss iterate seen is returned. Running
/// out of iterations is reported in the trace, not as an error.
pub fn minimize_loss(q: &OrthonormalBasis, nu: f64, cfg: &OptimizerConfig) -> Result<(DesignMeasure, SolveTrace)> {
    check_nu(nu)?;
    if !(cfg.tol > 0.0) {
        return Err(DesignError::InvalidOptions(format!(
            "tolerance must be positive, got {}",
            cfg.tol
        )));
    }
    if cfg.max_iter == Some(0) {
        return Err(DesignError::InvalidOptions("max_iter must be at least 1".into()));
    }
    if let Some(n0) = cfg.pseudo_count_start {
        if !(n0 >= 0.0) {
            return Err(DesignError::InvalidOptions(format!(
                "pseudo_count_start must be >= 0, got {}",
                n0
            )));
        }
    }
    let n_points = q.n_points();
    let qm = q.matrix();
    let start = match &cfg.start {
        Some(s) => s.clone(),
        None => DesignMeasure::uniform(n_points),
    };
    q.check_admissible(&start)?;
    let max_iter = cfg.max_iter.unwrap_or(200 * n_points);
    let mut pseudo = cfg.pseudo_count_start.unwrap_or(n_points as f64);

    let mut weights = start.weights().to_vec();
    let mut bundle = moments_raw(qm, &weights)?;
    let mut iterate_loss = loss_of(&bundle, nu);
    let mut current = iterate_loss;
    let mut best_weights = weights.clone();
    let mut history = vec![current];
    let mut iterations = 0;
    let mut accepted = 0;

    loop {
        let t = scores_with_bundle(qm, &weights, nu, &bundle)?;
        let (best, score) = argmax_lowest(&t);
        if score <= cfg.tol * (1.0 + iterate_loss.abs()) || iterations >= max_iter {
            break;
        }
        iterations += 1;
        let step = 1.0 / (pseudo + 1.0);
        for (j, w) in weights.iter_mut().enumerate() {
            *w = (1.0 - step) * *w + if j == best { step } else { 0.0 };
        }
        pseudo += 1.0;
        bundle = moments_raw(qm, &weights)?;
        iterate_loss = loss_of(&bundle, nu);
        if iterate_loss <= current {
            best_weights.copy_from_slice(&weights);
            current = iterate_loss;
            history.push(current);
            accepted += 1;
        }
    }
    weights = best_weights;
    bundle = moments_raw(qm, &weights)?;
    let mut max_score = argmax_lowest(&scores_with_bundle(qm, &weights, nu, &bundle)?).1;

    let mut pruned = 0;
    if cfg.prune_below > 0.0 {
        let t = scores_with_bundle(qm, &weights, nu, &bundle)?;
        let keep: Vec<bool> = weights
            .iter()
            .zip(&t)
            .map(|(&w, &ti)| !(w > 0.0 && w < cfg.prune_below && ti < 0.0))
            .collect();
        let dropped = keep.iter().filter(|k| !**k).count();
        if dropped > 0 {
            let mut trimmed: Vec<f64> = weights
                .iter()
                .zip(&keep)
                .map(|(&w, &k)| if k { w } else { 0.0 })
                .collect();
            let total: f64 = trimmed.iter().sum();
            trimmed.iter_mut().for_each(|w| *w /= total);
            let support: Vec<usize> = (0..n_points).filter(|&i| trimmed[i] > 0.0).collect();
            if q.support_rank(&support) == q.n_params() {
                if let Ok(b) = moments_raw(qm, &trimmed) {
                    let l = loss_of(&b, nu);
                    if l <= current {
                        bundle = b;
                        weights = trimmed;
                        current = l;
                        history.push(current);
                        pruned = dropped;
                        max_score = argmax_lowest(&scores_with_bundle(qm, &weights, nu, &bundle)?).1;
                    }
                }
            }
        }
    }

    let converged = max_score <= cfg.tol * (1.0 + current.abs());
    let design = DesignMeasure::new(weights)?;
    Ok((
        design,
        SolveTrace {
            iterations,
            accepted,
            final_max_score: max_score,
            loss_history: history,
            converged,
            pruned,
        },
    ))
}
