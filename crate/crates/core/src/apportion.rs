//! Rounding continuous designs to integer allocations.

use crate::criteria::{check_nu, moments};
use crate::error::{DesignError, Result};
use crate::model::{DesignMeasure, OrthonormalBasis};
use crate::optimizer::directional_scores;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingMethod {
    CeilRemove,
    EfficientApportionment,
}

impl RoundingMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RoundingMethod::CeilRemove => "ceil_remove",
            RoundingMethod::EfficientApportionment => "efficient_apportionment",
        }
    }
}

/// Integer allocations summing to the run size `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDesign {
    pub allocations: Vec<usize>,
    pub n: usize,
    pub method: RoundingMethod,
}

impl ExactDesign {
    pub fn support(&self) -> Vec<usize> {
        (0..self.allocations.len())
            .filter(|&i| self.allocations[i] > 0)
            .collect()
    }

    pub fn is_admissible(&self, q: &OrthonormalBasis) -> bool {
        q.support_rank(&self.support()) == q.n_params()
    }
}

/// `xi_i = n_i / n`.
pub fn exact_to_measure(d: &ExactDesign) -> Result<DesignMeasure> {
    let total: usize = d.allocations.iter().sum();
    if total == 0 || total != d.n {
        return Err(DesignError::InvalidRunSize(format!(
            "allocations sum to {} but n = {}",
            total, d.n
        )));
    }
    DesignMeasure::new(d.allocations.iter().map(|&a| a as f64 / total as f64).collect())
}

// ceil that ignores floating-point dust above an integer
fn ceil_tolerant(x: f64) -> usize {
    let c = (x - 1e-9 * x.abs().max(1.0)).ceil();
    if c <= 0.0 {
        0
    } else {
        c as usize
    }
}

fn allocation_measure(alloc: &[usize]) -> Result<DesignMeasure> {
    let total: usize = alloc.iter().sum();
    DesignMeasure::new(alloc.iter().map(|&a| a as f64 / total as f64).collect())
}

/// Rounds every `n xi_i` up, then removes one run at a time from the point
/// with the smallest score `t` (recomputed after each removal) until the
/// allocations sum to `n`. Removals that would leave a rank-deficient support
/// are skipped in favour of the next-smallest score.
pub fn ceil_then_remove(q: &OrthonormalBasis, xi: &DesignMeasure, n: usize, nu: f64) -> Result<ExactDesign> {
    check_nu(nu)?;
    let p = q.n_params();
    if n < p {
        return Err(DesignError::InvalidRunSize(format!(
            "run size {} is below p = {}",
            n, p
        )));
    }
    q.check_admissible(xi)?;
    let mut alloc: Vec<usize> = xi.weights().iter().map(|&w| ceil_tolerant(n as f64 * w)).collect();

    loop {
        let total: usize = alloc.iter().sum();
        if total == n {
            break;
        }
        let t = directional_scores(q, &allocation_measure(&alloc)?, nu)?;
        if total < n {
            let best = (0..alloc.len()).fold(0, |b, i| if t[i] > t[b] { i } else { b });
            alloc[best] += 1;
            continue;
        }
        let mut order: Vec<usize> = (0..alloc.len()).filter(|&i| alloc[i] > 0).collect();
        order.sort_by(|&a, &b| {
            t[a].partial_cmp(&t[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let support: Vec<usize> = (0..alloc.len()).filter(|&i| alloc[i] > 0).collect();
        let removable = order.into_iter().find(|&i| {
            if alloc[i] > 1 {
                return true;
            }
            let rest: Vec<usize> = support.iter().copied().filter(|&j| j != i).collect();
            q.support_rank(&rest) == p
        });
        match removable {
            Some(i) => alloc[i] -= 1,
            None => {
                return Err(DesignError::Rounding(
                    "no removal keeps the support at full rank".into(),
                ))
            }
        }
    }
    Ok(ExactDesign {
        allocations: alloc,
        n,
        method: RoundingMethod::CeilRemove,
    })
}

/// Efficient design apportionment on the support of `xi`.
///
/// Starts from `ceil((n - l/2) xi_i)` with `l` the support size, then
/// increments an index minimizing `n_i / xi_i` (ties: lowest index) or
/// decrements an index maximizing `(n_i - 1) / xi_i` (ties: highest index)
/// until the total is `n`. The tie rules are mirror images, which keeps the
/// allocations nondecreasing in `n`.
pub fn pukelsheim_rieder(xi: &DesignMeasure, n: usize) -> Result<ExactDesign> {
    let support = xi.support();
    let l = support.len();
    if n < l {
        return Err(DesignError::InvalidRunSize(format!(
            "run size {} is below the support size {}",
            n, l
        )));
    }
    let w = xi.weights();
    let multiplier = n as f64 - 0.5 * l as f64;
    let mut alloc = vec![0usize; w.len()];
    for &i in &support {
        alloc[i] = ceil_tolerant(multiplier * w[i]);
    }
    let mut total: usize = alloc.iter().sum();
    while total < n {
        let mut best = support[0];
        for &i in &support {
            if (alloc[i] as f64) / w[i] < (alloc[best] as f64) / w[best] {
                best = i;
            }
        }
        alloc[best] += 1;
        total += 1;
    }
    while total > n {
        let mut best = support[0];
        for &i in &support {
            if (alloc[i] as f64 - 1.0) / w[i] >= (alloc[best] as f64 - 1.0) / w[best] {
                best = i;
            }
        }
        alloc[best] -= 1;
        total -= 1;
    }
    Ok(ExactDesign {
        allocations: alloc,
        n,
        method: RoundingMethod::EfficientApportionment,
    })
}

/// Losses of a continuous design and of its two roundings.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingComparison {
    pub nu: f64,
    pub n: usize,
    pub loss_continuous: f64,
    pub loss_ceil_remove: f64,
    /// `None` when the support of the continuous design exceeds `n`.
    pub loss_efficient: Option<f64>,
    pub excess_ceil_remove: f64,
    pub excess_efficient: Option<f64>,
    pub ceil_remove: ExactDesign,
    pub efficient: Option<ExactDesign>,
}

/// `I_nu` of a design measure.
pub fn loss_of_measure(q: &OrthonormalBasis, xi: &DesignMeasure, nu: f64) -> Result<f64> {
    let b = moments(q, xi)?;
    crate::criteria::loss(nu, crate::criteria::variance(&b), crate::criteria::maxbias(&b))
}

/// `I_nu` of an exact design; infinite when its support is rank deficient.
pub fn loss_of_exact(q: &OrthonormalBasis, d: &ExactDesign, nu: f64) -> Result<f64> {
    if !d.is_admissible(q) {
        return Ok(f64::INFINITY);
    }
    loss_of_measure(q, &exact_to_measure(d)?, nu)
}

pub fn compare_rounding(q: &OrthonormalBasis, xi: &DesignMeasure, n: usize, nu: f64) -> Result<RoundingComparison> {
    let loss_continuous = loss_of_measure(q, xi, nu)?;
    let ceil_remove = ceil_then_remove(q, xi, n, nu)?;
    let loss_ceil_remove = loss_of_exact(q, &ceil_remove, nu)?;
    let efficient = match pukelsheim_rieder(xi, n) {
        Ok(d) => Some(d),
        Err(DesignError::InvalidRunSize(_)) => None,
        Err(e) => return Err(e),
    };
    let loss_efficient = efficient.as_ref().map(|d| loss_of_exact(q, d, nu)).transpose()?;
    let excess = |l: f64| (l - loss_continuous) / loss_continuous;
    Ok(RoundingComparison {
        nu,
        n,
        loss_continuous,
        loss_ceil_remove,
        loss_efficient,
        excess_ceil_remove: excess(loss_ceil_remove),
        excess_efficient: loss_efficient.map(excess),
        ceil_remove,
        efficient,
    })
}
