use crate::error::{DesignError, Result};

const NEGATIVE_TOL: f64 = 1e-14;
const SUM_TOL: f64 = 1e-10;

/// Probability weights on the `N` points of a design space.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMeasure {
    weights: Vec<f64>,
}

impl DesignMeasure {
    /// Validates and sanitizes raw weights.
    ///
    /// Entries in `[-1e-14, 0)` are clamped to zero and a sum within `1e-10`
    /// of one is renormalized; anything further off is rejected.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(DesignError::InvalidWeights("empty weight vector".into()));
        }
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() {
                return Err(DesignError::InvalidWeights(format!("weight {} is not finite", i)));
            }
            if *w < -NEGATIVE_TOL {
                return Err(DesignError::InvalidWeights(format!("weight {} is negative ({})", i, w)));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(DesignError::InvalidWeights(format!("weights sum to {}, not 1", sum)));
        }
        if sum != 1.0 {
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// All mass on point `i`.
    pub fn point_mass(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(DesignError::Dimension(format!(
                "index {} out of range for {} points",
                i, n
            )));
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Ok(Self { weights: w })
    }

    /// Equal mass on each listed index.
    pub fn equal_on(n: usize, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(DesignError::InvalidWeights("empty support".into()));
        }
        let mut w = vec![0.0; n];
        for &i in indices {
            if i >= n {
                return Err(DesignError::Dimension(format!(
                    "index {} out of range for {} points",
                    i, n
                )));
            }
            w[i] += 1.0 / indices.len() as f64;
        }
        Self::new(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Applies a permutation: point `i` of the result is point `perm[i]` here.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            weights: perm.iter().map(|&j| self.weights[j]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitizes_small_drift() {
        let xi = DesignMeasure::new(vec![0.5 + 1e-12, 0.5, -1e-15]).unwrap();
        assert_eq!(xi.weights()[2], 0.0);
        assert!((xi.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert_eq!(xi.support(), vec![0, 1]);
    }

    #[test]
    fn rejects_real_violations() {
        assert!(DesignMeasure::new(vec![1.1, -0.1]).is_err());
        assert!(DesignMeasure::new(vec![0.5, 0.4]).is_err());
        assert!(DesignMeasure::new(vec![f64::NAN, 1.0]).is_err());
        assert!(DesignMeasure::new(vec![]).is_err());
    }

    #[test]
    fn helpers() {
        assert_eq!(DesignMeasure::uniform(4).weights(), &[0.25; 4]);
        assert_eq!(DesignMeasure::point_mass(3, 1).unwrap().support(), vec![1]);
        assert_eq!(
            DesignMeasure::equal_on(4, &[0, 3]).unwrap().weights(),
            &[0.5, 0.0, 0.0, 0.5]
        );
        assert!(DesignMeasure::point_mass(3, 3).is_err());
    }
}
