use rayon::prelude::*;

use super::{minimize_loss, OptimizerConfig, SolveTrace};
use crate::criteria::{cmb_value, moments, variance};
use crate::error::{DesignError, Result};
use crate::model::{DesignMeasure, OrthonormalBasis};

pub const DEFAULT_GRID_POINTS: usize = 101;

/// Relative tolerance on the matched bound in [`solve_rbb`] and [`solve_rbv`],
/// absolute tolerance on the matched CMB in [`find_nu_for_cmb`].
const MATCH_TOL: f64 = 1e-3;
/// Bisection stops once the bracket on `nu` is narrower than this.
const NU_RESOLUTION: f64 = 1e-6;

/// The minimax design for one `nu` with its criteria.
#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub nu: f64,
    pub design: DesignMeasure,
    pub var: f64,
    pub maxbias: f64,
    pub cmb: f64,
    pub loss_value: f64,
    pub trace: SolveTrace,
}

pub fn frontier_point(q: &OrthonormalBasis, nu: f64, cfg: &OptimizerConfig) -> Result<FrontierPoint> {
    let (design, trace) = minimize_loss(q, nu, cfg)?;
    let bundle = moments(q, &design)?;
    let var = variance(&bundle);
    let maxbias = bundle.lambda_max;
    Ok(FrontierPoint {
        nu,
        design,
        var,
        maxbias,
        cmb: cmb_value(var, maxbias),
        loss_value: (1.0 - nu) * var + nu * maxbias,
        trace,
    })
}

/// `count` equally spaced values on `[0, 1]`.
pub fn default_nu_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|i| i as f64 / (count - 1) as f64).collect(),
    }
}

/// One cold-started [`FrontierPoint`] per grid value. Grid values are
/// solved independently and in parallel; the output is the same as solving
/// them one after another.
pub fn sweep_frontier(q: &OrthonormalBasis, nu_grid: &[f64], cfg: &OptimizerConfig) -> Result<Vec<FrontierPoint>> {
    if nu_grid.is_empty() {
        return Err(DesignError::InvalidGrid("nu grid is empty".into()));
    }
    if let Some(bad) = nu_grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(DesignError::NuOutOfRange(*bad));
    }
    if nu_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(DesignError::InvalidGrid("nu grid must be sorted ascending".into()));
    }
    nu_grid.par_iter().map(|&nu| frontier_point(q, nu, cfg)).collect()
}

/// Result of a bound-matching search along the frontier.
#[derive(Debug, Clone)]
pub struct BoundedDesign {
    pub point: FrontierPoint,
    /// Another probed `nu` below the returned one gave the same criterion
    /// value, i.e. the frontier is flat there.
    pub plateau: bool,
    /// Number of `nu` values solved during the search.
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
enum Direction {
    /// criterion nonincreasing in nu
    Falling,
    /// criterion nondecreasing in nu
    Rising,
}

struct Search<'a> {
    q: &'a OrthonormalBasis,
    cfg: &'a OptimizerConfig,
    probes: Vec<FrontierPoint>,
}

impl<'a> Search<'a> {
    fn new(q: &'a OrthonormalBasis, cfg: &'a OptimizerConfig) -> Self {
        Self {
            q,
            cfg,
            probes: Vec::new(),
        }
    }

    fn at(&mut self, nu: f64) -> Result<FrontierPoint> {
        if let Some(p) = self.probes.iter().find(|p| p.nu == nu) {
            return Ok(p.clone());
        }
        let p = frontier_point(self.q, nu, self.cfg)?;
        self.probes.push(p.clone());
        Ok(p)
    }

    /// Replaces `chosen` by the smallest-nu probe with the same criterion
    /// value, if there is one.
    fn finish(self, chosen: FrontierPoint, crit: impl Fn(&FrontierPoint) -> f64) -> BoundedDesign {
        let value = crit(&chosen);
        let same = |p: &FrontierPoint| (crit(p) - value).abs() <= 1e-9 * value.abs().max(1.0);
        let earliest = self
            .probes
            .iter()
            .filter(|p| p.nu < chosen.nu - NU_RESOLUTION && same(p))
            .min_by(|a, b| a.nu.partial_cmp(&b.nu).unwrap());
        let evaluations = self.probes.len();
        match earliest {
            Some(p) => BoundedDesign {
                point: p.clone(),
                plateau: true,
                evaluations,
            },
            None => BoundedDesign {
                point: chosen,
                plateau: false,
                evaluations,
            },
        }
    }

    /// Bisects on nu between `lo` and `hi` for `crit == target`.
    ///
    /// `lo` is on the side where `crit` has not yet crossed the target. On
    /// the resolution limit the feasible end of the bracket is returned: `hi`
    /// for a falling criterion (bound from above), `lo` for a rising one.
    fn bisect(
        &mut self,
        mut lo: FrontierPoint,
        mut hi: FrontierPoint,
        target: f64,
        tol: f64,
        dir: Direction,
        crit: &dyn Fn(&FrontierPoint) -> f64,
    ) -> Result<FrontierPoint> {
        while hi.nu - lo.nu >= NU_RESOLUTION {
            let mid = self.at(0.5 * (lo.nu + hi.nu))?;
            let value = crit(&mid);
            if (value - target).abs() <= tol {
                return Ok(mid);
            }
            let before_crossing = match dir {
                Direction::Falling => value > target,
                Direction::Rising => value <= target,
            };
            if before_crossing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(match dir {
            Direction::Falling => hi,
            Direction::Rising => lo,
        })
    }
}

/// Minimum-variance design subject to `maxbias <= b2`.
pub fn solve_rbb(q: &OrthonormalBasis, b2: f64, cfg: &OptimizerConfig) -> Result<BoundedDesign> {
    if !(b2 >= 1.0 - 1e-9) {
        return Err(DesignError::InfeasibleBound(format!(
            "bias bound {} is below the smallest attainable maximum bias 1",
            b2
        )));
    }
    let crit = |p: &FrontierPoint| p.maxbias;
    let mut search = Search::new(q, cfg);
    let p0 = search.at(0.0)?;
    if b2 >= p0.maxbias {
        return Ok(search.finish(p0, crit));
    }
    let p1 = search.at(1.0)?;
    if b2 <= p1.maxbias {
        return Ok(search.finish(p1, crit));
    }
    let found = search.bisect(p0, p1, b2, MATCH_TOL * b2, Direction::Falling, &crit)?;
    Ok(search.finish(found, crit))
}

/// Minimum-maxbias design subject to `var <= s2`.
pub fn solve_rbv(q: &OrthonormalBasis, s2: f64, cfg: &OptimizerConfig) -> Result<BoundedDesign> {
    let crit = |p: &FrontierPoint| p.var;
    let mut search = Search::new(q, cfg);
    let p0 = search.at(0.0)?;
    if !(s2 >= p0.var * (1.0 - MATCH_TOL)) {
        return Err(DesignError::InfeasibleBound(format!(
            "variance bound {} is below the I-optimal variance {}",
            s2, p0.var
        )));
    }
    if s2 <= p0.var {
        return Ok(search.finish(p0, crit));
    }
    let p1 = search.at(1.0)?;
    if s2 >= p1.var {
        return Ok(search.finish(p1, crit));
    }
    let found = search.bisect(p0, p1, s2, MATCH_TOL * s2, Direction::Rising, &crit)?;
    Ok(search.finish(found, crit))
}

/// Frontier design whose coefficient of maximum bias matches `target`.
pub fn find_nu_for_cmb(q: &OrthonormalBasis, target: f64, cfg: &OptimizerConfig) -> Result<BoundedDesign> {
    let crit = |p: &FrontierPoint| p.cmb;
    let mut search = Search::new(q, cfg);
    let p0 = search.at(0.0)?;
    let p1 = search.at(1.0)?;
    let (low, high) = (p1.cmb, p0.cmb);
    if !(target >= low - MATCH_TOL && target <= high + MATCH_TOL) {
        return Err(DesignError::TargetOutOfRange { target, low, high });
    }
    let d0 = (p0.cmb - target).abs();
    let d1 = (p1.cmb - target).abs();
    if d0 <= MATCH_TOL || d1 <= MATCH_TOL {
        let chosen = if d0 <= d1 { p0 } else { p1 };
        return Ok(search.finish(chosen, crit));
    }
    let found = search.bisect(p0, p1, target, MATCH_TOL, Direction::Falling, &crit)?;
    Ok(search.finish(found, crit))
}
