use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::space::DesignSpace;
use crate::error::{DesignError, Result};
use crate::linalg::numerical_rank;

/// How the regressor vector `f(x)` is formed.
#[derive(Debug, Clone, PartialEq)]
pub enum RegressorSpec {
    /// All monomials of total degree `<= degree`, in graded lexicographic
    /// order. `interaction_order` caps the number of distinct covariates in
    /// one monomial (`None` means no cap).
    Polynomial {
        degree: usize,
        intercept: bool,
        interaction_order: Option<usize>,
    },
    /// An `N x p` table read from a headered CSV file.
    Explicit { path: PathBuf },
}

impl RegressorSpec {
    pub fn polynomial(degree: usize, intercept: bool) -> Self {
        RegressorSpec::Polynomial {
            degree,
            intercept,
            interaction_order: None,
        }
    }
}

/// `F`, with row `i` equal to `f'(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorMatrix {
    f: DMatrix<f64>,
    names: Vec<String>,
    rank: usize,
}

impl RegressorMatrix {
    /// Wraps an explicit matrix, checking full column rank.
    pub fn from_matrix(f: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if names.len() != f.ncols() {
            return Err(DesignError::Dimension(format!(
                "{} column names for {} columns",
                names.len(),
                f.ncols()
            )));
        }
        if f.ncols() == 0 {
            return Err(DesignError::InvalidRegressors("model has no regressors".into()));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(DesignError::InvalidRegressors("regressor values must be finite".into()));
        }
        let p = f.ncols();
        if p > f.nrows() {
            return Err(DesignError::RankDeficient { rank: f.nrows(), p });
        }
        let rank = numerical_rank(&f, 1e-10);
        if rank < p {
            return Err(DesignError::RankDeficient { rank, p });
        }
        Ok(Self { f, names, rank })
    }

    /// Reads a comma-separated table with one header row and one data row per
    /// design point.
    pub fn from_csv(path: &Path, expected_rows: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let names: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| {
                        DesignError::InvalidRegressors(format!(
                            "row {}: cannot parse {:?} as a number",
                            line + 1,
                            field
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.len() != expected_rows {
            return Err(DesignError::TableRowMismatch {
                expected: expected_rows,
                found: rows.len(),
            });
        }
        let p = names.len();
        let f = DMatrix::from_fn(rows.len(), p, |r, c| rows[r][c]);
        Self::from_matrix(f, names)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of regressors `p`.
    pub fn ncols(&self) -> usize {
        self.f.ncols()
    }

    /// Number of design points `N`.
    pub fn nrows(&self) -> usize {
        self.f.nrows()
    }
}

/// Exponent vectors of the monomials of a polynomial spec, graded
/// lexicographic: by total degree, then by descending power of the first
/// covariate, then the second, and so on.
pub fn monomial_exponents(
    dim: usize,
    degree: usize,
    intercept: bool,
    interaction_order: Option<usize>,
) -> Vec<Vec<usize>> {
    let cap = interaction_order.unwrap_or(dim);
    let mut out = Vec::new();
    for total in 0..=degree {
        if total == 0 && !intercept {
            continue;
        }
        let mut current = vec![0usize; dim];
        compositions(total, 0, &mut current, &mut out, cap);
    }
    out
}

fn compositions(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, cap: usize) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        if current.iter().filter(|&&e| e > 0).count() <= cap {
            out.push(current.clone());
        }
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        compositions(remaining - e, pos + 1, current, out, cap);
    }
    current[pos] = 0;
}

fn monomial_name(exps: &[usize]) -> String {
    let parts: Vec<String> = exps
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(k, &e)| {
            if e == 1 {
                format!("x{}", k + 1)
            } else {
                format!("x{}^{}", k + 1, e)
            }
        })
        .collect();
    if parts.is_empty() {
        "1".to_owned()
    } else {
        parts.join("*")
    }
}

pub fn evaluate_regressors(spec: &RegressorSpec, space: &DesignSpace) -> Result<RegressorMatrix> {
    match spec {
        RegressorSpec::Polynomial {
            degree,
            intercept,
            interaction_order,
        } => {
            if interaction_order == &Some(0) {
                return Err(DesignError::InvalidRegressors(
                    "interaction order must be positive".into(),
                ));
            }
            let exps = monomial_exponents(space.dim(), *degree, *intercept, *interaction_order);
            if exps.is_empty() {
                return Err(DesignError::InvalidRegressors("model has no regressors".into()));
            }
            let f = DMatrix::from_fn(space.len(), exps.len(), |r, c| {
                space
                    .point(r)
                    .iter()
                    .zip(&exps[c])
                    .map(|(x, &e)| x.powi(e as i32))
                    .product()
            });
            let names = exps.iter().map(|e| monomial_name(e)).collect();
            RegressorMatrix::from_matrix(f, names)
        }
        RegressorSpec::Explicit { path } => RegressorMatrix::from_csv(path, space.len()),
    }
}
