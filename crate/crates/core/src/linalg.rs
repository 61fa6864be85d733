//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order (columns of the returned matrix follow the same order).
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Nearest matrix with orthonormal rows, `(M Mᵗ)^{-1/2} M`. `None` when the
/// rows are (numerically) dependent.
pub fn polar_rows(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let gram = m * m.transpose();
    let (values, vectors) = sym_eigen_desc(&gram);
    let smallest = values[values.len() - 1];
    if smallest <= 1e-24 * values[0].max(1.0) {
        return None;
    }
    let inv_sqrt = DMatrix::from_diagonal(&values.map(|v| 1.0 / v.sqrt()));
    Some(&vectors * inv_sqrt * vectors.transpose() * m)
}

/// Rotation `R ∈ SO(k)` minimising `‖x - R y‖_F` for `k × n` matrices.
pub fn special_procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    procrustes(x, y, true)
}

/// Orthogonal `R ∈ O(k)` minimising `‖x - R y‖_F`.
pub fn orthogonal_procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    procrustes(x, y, false)
}

fn procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>, special: bool) -> DMatrix<f64> {
    let m = x * y.transpose();
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut r = &u * &v_t;
    if special && r.determinant() < 0.0 {
        // flip the direction paired with the smallest singular value
        let k = u.ncols();
        let (mut min_i, mut min_s) = (0, f64::INFINITY);
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s < min_s {
                min_s = *s;
                min_i = i;
            }
        }
        let mut flip = DMatrix::<f64>::identity(k, k);
        flip[(min_i, min_i)] = -1.0;
        r = &u * flip * &v_t;
    }
    r
}

/// Permutation matrix `g` with `g e_i = e_{σ(i)}` (0-based).
pub fn permutation_matrix(sigma: &[usize]) -> DMatrix<f64> {
    let n = sigma.len();
    let mut g = DMatrix::zeros(n, n);
    for (i, &s) in sigma.iter().enumerate() {
        g[(s, i)] = 1.0;
    }
    g
}

/// `‖M Mᵗ - I‖_F` for a matrix with (intended) orthonormal rows.
pub fn row_orthonormality_residual(m: &DMatrix<f64>) -> f64 {
    let k = m.nrows();
    (m * m.transpose() - DMatrix::<f64>::identity(k, k)).norm()
}

pub fn diag_matrix(entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(entries))
}

/// `diag(1, …, 1, -1)` of size `k`.
pub fn flip_last(k: usize) -> DMatrix<f64> {
    let mut d = DMatrix::identity(k, k);
    d[(k - 1, k - 1)] = -1.0;
    d
}

/// Planar rotation in the `(i, j)` coordinate plane of `ℝᵏ`.
pub fn givens(k: usize, i: usize, j: usize, angle: f64) -> DMatrix<f64> {
    let mut g = DMatrix::identity(k, k);
    let (s, c) = angle.sin_cos();
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = -s;
    g[(j, i)] = s;
    g
}
