use crate::error::{DesignError, Result};

/// An ordered, finite set of distinct design points in `q` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpace {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl DesignSpace {
    /// Builds a space from explicit points. All points must share one
    /// dimension and be pairwise distinct.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| DesignError::InvalidGrid("design space needs at least one point".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(DesignError::InvalidGrid(
                "points must have at least one coordinate".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(DesignError::InvalidGrid(format!(
                    "point {} has {} coordinates, expected {}",
                    i,
                    p.len(),
                    dim
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(DesignError::InvalidGrid(format!("point {} is not finite", i)));
            }
        }
        let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(DesignError::InvalidGrid("design points must be distinct".into()));
        }
        Ok(Self { points, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Covariate dimension `q`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }
}

/// Evenly spaced axis values, `lo + (hi - lo)(i - 1)/(count - 1)`.
///
/// Computed as `mid + half * u_i` with `u_i = (2(i-1) - (count-1))/(count-1)`
/// so that symmetric bounds give an exactly antisymmetric axis.
fn axis(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let denom = (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                let u = (2.0 * i as f64 - denom) / denom;
                mid + half * u
            }
        })
        .collect()
}

/// Full Cartesian grid; the first coordinate varies slowest.
pub fn build_grid_space(bounds: &[(f64, f64)], counts: &[usize]) -> Result<DesignSpace> {
    if bounds.is_empty() {
        return Err(DesignError::InvalidGrid("at least one axis is required".into()));
    }
    if bounds.len() != counts.len() {
        return Err(DesignError::InvalidGrid(format!(
            "{} bounds but {} counts",
            bounds.len(),
            counts.len()
        )));
    }
    let mut axes = Vec::with_capacity(bounds.len());
    for (k, (&(lo, hi), &count)) in bounds.iter().zip(counts).enumerate() {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(DesignError::InvalidGrid(format!("axis {}: bounds must be finite", k)));
        }
        if count == 0 {
            return Err(DesignError::InvalidGrid(format!("axis {}: count must be positive", k)));
        }
        if lo > hi {
            return Err(DesignError::InvalidGrid(format!(
                "axis {}: lower bound {} exceeds upper bound {}",
                k, lo, hi
            )));
        }
        if count == 1 && lo != hi {
            return Err(DesignError::InvalidGrid(format!(
                "axis {}: a single point needs a degenerate interval",
                k
            )));
        }
        if count >= 2 && lo == hi {
            return Err(DesignError::InvalidGrid(format!(
                "axis {}: {} points on a degenerate interval",
                k, count
            )));
        }
        axes.push(axis(lo, hi, count));
    }

    let total: usize = counts.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        points.push(idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect());
        for k in (0..axes.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    DesignSpace::from_points(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_line() {
        let s = build_grid_space(&[(-1.0, 1.0)], &[5]).unwrap();
        let xs: Vec<f64> = s.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn forty_point_line_is_symmetric() {
        let s = build_grid_space(&[(-1.0, 1.0)], &[40]).unwrap();
        assert_eq!(s.len(), 40);
        assert_eq!(s.point(0)[0], -1.0);
        assert_eq!(s.point(39)[0], 1.0);
        assert!((s.point(1)[0] + 37.0 / 39.0).abs() < 1e-15);
        for i in 0..40 {
            assert_eq!(s.point(i)[0], -s.point(39 - i)[0]);
            let expected = -1.0 + 2.0 * i as f64 / 39.0;
            assert!((s.point(i)[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_square_corners() {
        let s = build_grid_space(&[(0.0, 1.0), (0.0, 1.0)], &[2, 2]).unwrap();
        assert_eq!(
            s.points(),
            &[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(build_grid_space(&[(-1.0, 1.0)], &[0]).is_err());
        assert!(build_grid_space(&[(1.0, -1.0)], &[3]).is_err());
        assert!(build_grid_space(&[(0.0, 1.0)], &[1]).is_err());
        assert!(build_grid_space(&[(0.0, 0.0)], &[3]).is_err());
        assert!(build_grid_space(&[(0.0, 1.0)], &[2, 2]).is_err());
        let single = build_grid_space(&[(0.5, 0.5)], &[1]).unwrap();
        assert_eq!(single.points(), &[vec![0.5]]);
    }

    #[test]
    fn explicit_points_must_be_distinct() {
        assert!(DesignSpace::from_points(vec![vec![0.0], vec![0.0]]).is_err());
        assert!(DesignSpace::from_points(vec![vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(DesignSpace::from_points(vec![]).is_err());
    }
}
