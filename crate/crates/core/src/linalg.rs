//! Small dense linear-algebra kernels shared by the operator and search code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Singular values of `a`, sorted in descending order.
///
/// One-sided (Hestenes) Jacobi: columns are rotated pairwise until they are
/// mutually orthogonal, after which the singular values are the column norms.
/// Inputs whose columns are already orthogonal (diagonal matrices, coordinate
/// restrictions) are left untouched, so their singular values come out as the
/// exact absolute column entries.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // Work on the orientation with fewer columns.
    let mut w = if cols > rows { a.transpose() } else { a.clone() };
    let n = w.ncols();

    const MAX_SWEEPS: usize = 80;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..w.nrows() {
                    let wi = w[(r, i)];
                    let wj = w[(r, j)];
                    w[(r, i)] = c * wi - s * wj;
                    w[(r, j)] = s * wi + c * wj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    sigma.sort_by(|x, y| y.total_cmp(x));
    // A wide input has extra zero singular values only in the transposed
    // sense; the caller gets min(rows, cols) values either way.
    sigma
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending
/// order and eigenvectors permuted to match.
pub fn symmetric_eigen_ascending(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Generalized eigenvalues of the symmetric pencil `(a, b)` with `b`
/// positive definite, ascending. Returns `None` when `b` is not positive
/// definite at relative tolerance `rel_tol` (smallest over largest eigenvalue).
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> Option<Vec<f64>> {
    if !is_positive_definite(b, rel_tol) {
        return None;
    }
    let sym_b = (b + b.transpose()) * 0.5;
    let chol = sym_b.cholesky()?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let linv_a = l.solve_lower_triangular(a)?;
    let c_t = l.solve_lower_triangular(&linv_a.transpose())?;
    let (values, _) = symmetric_eigen_ascending(&c_t);
    Some(values)
}

/// Whether a symmetric matrix has smallest eigenvalue above `rel_tol` times
/// its largest (and a positive largest eigenvalue).
pub fn is_positive_definite(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if m.nrows() == 0 {
        return false;
    }
    let (values, _) = symmetric_eigen_ascending(m);
    let max = *values.last().unwrap();
    let min = values[0];
    max > 0.0 && min > rel_tol * max
}

/// Solves the symmetric positive definite system `m x = rhs`.
pub fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    sym.cholesky().map(|c| c.solve(rhs))
}

/// Solves a general square system by LU with partial pivoting.
pub fn solve_general(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().lu().solve(rhs)
}

/// Orthonormal basis of the column span of `columns`, dropping columns whose
/// component orthogonal to the ones already kept is below `drop_tol`
/// (relative to the column's own norm). Two passes of modified Gram-Schmidt.
pub fn orthonormal_columns(columns: &[DVector<f64>], drop_tol: f64) -> Vec<DVector<f64>> {
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(columns.len());
    for col in columns {
        let scale = col.norm();
        if scale == 0.0 {
            continue;
        }
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let nv = v.norm();
        if nv > drop_tol * scale {
            kept.push(v / nv);
        }
    }
    kept
}

/// Stacks column vectors into a matrix.
pub fn from_columns(columns: &[DVector<f64>], rows: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, columns.len());
    for (j, c) in columns.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Induced matrix norm for p = 1 (max column sum).
pub fn max_column_sum(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced matrix norm for p = ∞ (max row sum).
pub fn max_row_sum(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
