//! Dense kernels shared by the rest of the crate: an upper Cholesky with a
//! pivot floor, triangular solves against it, and a sorted symmetric
//! eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Squared Cholesky pivots at or below this value are treated as zero.
pub const PIVOT_FLOOR: f64 = 1e-14;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let o = 4 * c;
        acc[0] += a[o] * b[o];
        acc[1] += a[o + 1] * b[o + 1];
        acc[2] += a[o + 2] * b[o + 2];
        acc[3] += a[o + 3] * b[o + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for o in 4 * chunks..a.len() {
        s += a[o] * b[o];
    }
    s
}

fn check_square(a: &Matrix, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Upper-triangular `R` with `RᵀR = A`. Only the upper triangle of `a` is read.
pub fn cholesky_upper(a: &Matrix) -> Result<Matrix> {
    let n = check_square(a, "Cholesky input")?;
    let mut r = Matrix::zeros(n, n);
    let rs = r.as_mut_slice();
    for j in 0..n {
        let (head, tail) = rs.split_at_mut(j * n);
        let col_j = &mut tail[..n];
        for i in 0..j {
            let col_i = &head[i * n..i * n + n];
            let s = a[(i, j)] - dot(&col_i[..i], &col_j[..i]);
            col_j[i] = s / col_i[i];
        }
        let d = a[(j, j)] - dot(&col_j[..j], &col_j[..j]);
        if !(d > PIVOT_FLOOR) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        col_j[j] = d.sqrt();
    }
    Ok(r)
}

/// Solves `Rᵀ x = b` in place.
pub fn solve_upper_transpose(r: &Matrix, b: &mut [f64]) {
    let n = r.nrows();
    let rs = r.as_slice();
    for i in 0..n {
        let col = &rs[i * n..i * n + i];
        b[i] = (b[i] - dot(col, &b[..i])) / rs[i * n + i];
    }
}

/// Solves `R x = b` in place.
pub fn solve_upper(r: &Matrix, b: &mut [f64]) {
    let n = r.nrows();
    let rs = r.as_slice();
    for j in (0..n).rev() {
        let xj = b[j] / rs[j * n + j];
        b[j] = xj;
        if xj != 0.0 {
            let col = &rs[j * n..j * n + j];
            for (bi, &c) in b[..j].iter_mut().zip(col) {
                *bi -= xj * c;
            }
        }
    }
}

/// Solves `Rᵀ X = B` column by column.
pub fn solve_upper_transpose_mat(r: &Matrix, b: &mut Matrix) {
    let m = b.nrows();
    for col in b.as_mut_slice().chunks_mut(m) {
        solve_upper_transpose(r, col);
    }
}

/// Solves `R X = B` column by column.
pub fn solve_upper_mat(r: &Matrix, b: &mut Matrix) {
    let m = b.nrows();
    for col in b.as_mut_slice().chunks_mut(m) {
        solve_upper(r, col);
    }
}

/// `A⁻¹ b` for `A = RᵀR`.
pub fn cholesky_solve(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    solve_upper_transpose(r, &mut x);
    solve_upper(r, &mut x);
    x
}

/// `R⁻¹` for an upper-triangular `R` (itself upper triangular).
pub fn upper_inverse(r: &Matrix) -> Matrix {
    let n = r.nrows();
    let mut x = Matrix::identity(n, n);
    solve_upper_mat(r, &mut x);
    x
}

/// Diagonal of `A⁻¹` for `A = RᵀR`: squared row norms of `R⁻¹`.
pub fn inverse_diagonal(r: &Matrix) -> Vec<f64> {
    let inv = upper_inverse(r);
    let n = r.nrows();
    let mut d = vec![0.0; n];
    for j in 0..n {
        let col = inv.column(j);
        for (i, v) in col.iter().take(j + 1).enumerate() {
            d[i] += v * v;
        }
    }
    d
}

/// Eigenvalues (descending) and matching eigenvector columns of a symmetric
/// matrix.
pub fn sym_eigen_desc(a: &Matrix) -> Result<(Vector, Matrix)> {
    let n = check_square(a, "eigendecomposition input")?;
    if n == 0 {
        return Ok((Vector::zeros(0), Matrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues_desc(a: &Matrix) -> Result<Vec<f64>> {
    check_square(a, "eigendecomposition input")?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure);
    }
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &mut Matrix) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

/// Condition number `λmax / λmin` of a symmetric matrix; infinite when the
/// smallest eigenvalue is not positive.
pub fn condition_number(a: &Matrix) -> Result<f64> {
    let ev = sym_eigenvalues_desc(a)?;
    match (ev.first(), ev.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}
