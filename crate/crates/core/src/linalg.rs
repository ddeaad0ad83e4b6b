//! Small dense helpers shared by the criteria and optimizer modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Symmetric eigendecomposition with eigenvalues in descending order.
///
/// Each eigenvector is signed so that its largest-magnitude entry is
/// positive; ties in magnitude go to the lowest index.
pub(crate) struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> SortedEigen {
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        values.push(eig.eigenvalues[j]);
        let mut col: DVector<f64> = eig.eigenvectors.column(j).into_owned();
        fix_sign_largest(&mut col);
        vectors.set_column(k, &col);
    }
    SortedEigen { values, vectors }
}

fn fix_sign_largest(v: &mut DVector<f64>) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = x.abs();
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Numerical rank from singular values, relative to the largest.
pub(crate) fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0_f64, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Rank of the rows of `q` selected by `rows`.
pub(crate) fn row_subset_rank(q: &DMatrix<f64>, rows: &[usize]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let sub = DMatrix::from_fn(rows.len(), q.ncols(), |r, c| q[(rows[r], c)]);
    numerical_rank(&sub, 1e-10)
}

pub(crate) fn trace(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}
