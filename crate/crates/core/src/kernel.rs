//! Gaussian Gram matrices, landmark sets, and a Cholesky factor that supports
//! appending and removing one landmark at a time.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasets::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix, PIVOT_FLOOR};
use crate::par::{map_indexed, Execution};

/// Dense symmetric Gram matrix. `sigma` is `None` for matrices that were not
/// produced by [`gram`] (test kernels, loaded dumps without metadata).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    matrix: Matrix,
    sigma: Option<f64>,
}

impl KernelMatrix {
    /// Wraps an arbitrary symmetric matrix.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch("kernel matrix must be square".into()));
        }
        let scale = matrix.amax().max(1.0);
        for j in 0..n {
            for i in 0..j {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return invalid(format!("kernel matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { matrix, sigma: None })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }
}

/// Strictly increasing, duplicate-free row indices into a data set of size `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LandmarkSet(Vec<usize>);

impl LandmarkSet {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return invalid("landmark indices must be strictly increasing");
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, n });
            }
        }
        Ok(Self(indices))
    }

    /// Sorts `indices`; duplicates are an error.
    pub fn from_unsorted(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices, n)
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn complement(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n.saturating_sub(self.len()));
        let mut it = self.0.iter().peekable();
        for i in 0..n {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        out
    }

    fn check_range(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= n => Err(Error::IndexOutOfRange { index: last, n }),
            _ => Ok(()),
        }
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn gaussian(sq: f64, sigma2: f64) -> f64 {
    (-sq / sigma2).exp()
}

fn check_sigma(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return invalid(format!("bandwidth must be positive, got {sigma}"));
    }
    Ok(sigma * sigma)
}

/// `K_ij = exp(-‖x_i − x_j‖² / σ²)` with an exact unit diagonal.
pub fn gram(data: &DataMatrix, sigma: f64) -> Result<KernelMatrix> {
    gram_with(data, sigma, Execution::default())
}

pub fn gram_with(data: &DataMatrix, sigma: f64, exec: Execution) -> Result<KernelMatrix> {
    let sigma2 = check_sigma(sigma)?;
    let n = data.n();
    let xt = data.values().transpose();
    let d = xt.nrows();
    let xs = xt.as_slice();
    let row = |i: usize| &xs[i * d..(i + 1) * d];
    let upper = map_indexed(exec, n, |i| {
        let xi = row(i);
        (i + 1..n).map(|j| gaussian(sq_dist(xi, row(j)), sigma2)).collect::<Vec<f64>>()
    });
    let mut matrix = Matrix::identity(n, n);
    for (i, vals) in upper.into_iter().enumerate() {
        for (off, v) in vals.into_iter().enumerate() {
            let j = i + 1 + off;
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    Ok(KernelMatrix {
        matrix,
        sigma: Some(sigma),
    })
}

/// Gaussian kernel between every row of `x` (`n × d`) and every row of `y`
/// (`m × d`), as an `n × m` matrix.
pub fn cross_kernel(x: &Matrix, y: &Matrix, sigma: f64, exec: Execution) -> Result<Matrix> {
    let sigma2 = check_sigma(sigma)?;
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch("feature dimensions differ".into()));
    }
    let d = x.ncols();
    let (xt, yt) = (x.transpose(), y.transpose());
    let (xs, ys) = (xt.as_slice(), yt.as_slice());
    let m = y.nrows();
    // one output column per y row
    let cols = map_indexed(exec, m, |j| {
        let yj = &ys[j * d..(j + 1) * d];
        (0..x.nrows())
            .map(|i| gaussian(sq_dist(&xs[i * d..(i + 1) * d], yj), sigma2))
            .collect::<Vec<f64>>()
    });
    Ok(Matrix::from_iterator(x.nrows(), m, cols.into_iter().flatten()))
}

/// `K_C`: the Gram columns of the landmarks, `n × k`.
pub fn cross_gram(data: &DataMatrix, landmarks: &LandmarkSet, sigma: f64) -> Result<Matrix> {
    landmarks.check_range(data.n())?;
    let pts = data.select_rows(landmarks.indices());
    cross_kernel(data.values(), pts.values(), sigma, Execution::default())
}

/// `K_CC`: rows and columns of `k` at the landmark indices.
pub fn submatrix(k: &KernelMatrix, landmarks: &LandmarkSet) -> Result<Matrix> {
    landmarks.check_range(k.n())?;
    Ok(select(k.matrix(), landmarks.indices()))
}

pub(crate) fn select(m: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Upper-triangular `R` with `RᵀR = A_{order,order}`. `order[i]` names the
/// landmark (or row) behind the `i`-th pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    r: Matrix,
    order: Vec<usize>,
}

impl CholeskyFactor {
    pub fn empty() -> Self {
        Self {
            r: Matrix::zeros(0, 0),
            order: Vec::new(),
        }
    }

    /// Factor of a principal submatrix of `k`, pivots in the given order.
    pub fn of_kernel(k: &KernelMatrix, order: &[usize]) -> Result<Self> {
        if let Some(&bad) = order.iter().find(|&&i| i >= k.n()) {
            return Err(Error::IndexOutOfRange { index: bad, n: k.n() });
        }
        let a = select(k.matrix(), order);
        Ok(Self {
            r: linalg::cholesky_upper(&a)?,
            order: order.to_vec(),
        })
    }

    pub(crate) fn from_parts(r: Matrix, order: Vec<usize>) -> Self {
        debug_assert_eq!(r.nrows(), order.len());
        Self { r, order }
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `2 Σ log R_ii`; zero for the empty factor.
    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.r[(i, i)].ln()).sum::<f64>()
    }

    /// `RᵀR`.
    pub fn reconstruct(&self) -> Matrix {
        self.r.transpose() * &self.r
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        linalg::cholesky_solve(&self.r, b)
    }

    /// Factor of the matrix bordered by `new_column` (its coupling to the
    /// existing pivots, in factor order) and `new_diagonal`, appended last.
    pub fn append(&self, new_column: &[f64], new_diagonal: f64, label: usize) -> Result<Self> {
        let k = self.dim();
        if new_column.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "new column has length {} for a {k}x{k} factor",
                new_column.len()
            )));
        }
        let mut col = new_column.to_vec();
        linalg::solve_upper_transpose(&self.r, &mut col);
        let pivot2 = new_diagonal - linalg::dot(&col, &col);
        if !(pivot2 > PIVOT_FLOOR) {
            return Err(Error::NotPositiveDefinite { pivot: k });
        }
        let mut r = self.r.clone().resize(k + 1, k + 1, 0.0);
        for (i, v) in col.into_iter().enumerate() {
            r[(i, k)] = v;
        }
        r[(k, k)] = pivot2.sqrt();
        let mut order = self.order.clone();
        order.push(label);
        Ok(Self { r, order })
    }

    /// Factor of the principal submatrix without pivot `position`. The
    /// column is deleted from `R` and the trailing block is returned to upper
    /// triangular form with Givens rotations, `O(k²)`.
    pub fn remove(&self, position: usize) -> Result<Self> {
        let k = self.dim();
        if position >= k {
            return Err(Error::IndexOutOfRange { index: position, n: k });
        }
        let m = k - 1;
        let mut w = self.r.clone().remove_column(position);
        for j in position..m {
            let a = w[(j, j)];
            let b = w[(j + 1, j)];
            let h = a.hypot(b);
            if h == 0.0 {
                continue;
            }
            let (c, s) = (a / h, b / h);
            for col in j..m {
                let x = w[(j, col)];
                let y = w[(j + 1, col)];
                w[(j, col)] = c * x + s * y;
                w[(j + 1, col)] = c * y - s * x;
            }
            w[(j + 1, j)] = 0.0;
        }
        let r = w.remove_row(m);
        let mut order = self.order.clone();
        order.remove(position);
        Ok(Self { r, order })
    }
}

/// Cholesky factor of a symmetric matrix, pivots labelled `0..k`.
pub fn cholesky(a: &Matrix) -> Result<CholeskyFactor> {
    Ok(CholeskyFactor {
        r: linalg::cholesky_upper(a)?,
        order: (0..a.nrows()).collect(),
    })
}

pub fn chol_append(factor: &CholeskyFactor, new_column: &[f64], new_diagonal: f64) -> Result<CholeskyFactor> {
    let label = factor.order.iter().max().map_or(0, |m| m + 1);
    factor.append(new_column, new_diagonal, label)
}

pub fn chol_remove(factor: &CholeskyFactor, position: usize) -> Result<CholeskyFactor> {
    factor.remove(position)
}

pub fn logdet(factor: &CholeskyFactor) -> f64 {
    factor.logdet()
}

/// Writes a Gram matrix as an 8-byte little-endian row count followed by
/// the entries as row-major little-endian `f64`.
pub fn write_gram<W: Write>(k: &KernelMatrix, mut out: W) -> Result<()> {
    let n = k.n();
    out.write_all(&(n as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(n * 8);
    for i in 0..n {
        buf.clear();
        for j in 0..n {
            buf.extend_from_slice(&k.matrix[(i, j)].to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_gram<R: Read>(mut input: R, sigma: Option<f64>) -> Result<KernelMatrix> {
    let mut head = [0u8; 8];
    input.read_exact(&mut head)?;
    let n = usize::try_from(u64::from_le_bytes(head)).map_err(|_| Error::Data("gram dump too large".into()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != n * n * 8 {
        return Err(Error::Data(format!(
            "gram dump holds {} bytes, expected {} for n = {n}",
            bytes.len(),
            n * n * 8
        )));
    }
    let vals = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let matrix = Matrix::from_row_iterator(n, n, vals);
    Ok(KernelMatrix { matrix, sigma })
}

pub fn save_gram(k: &KernelMatrix, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_gram(k, std::io::BufWriter::new(file))
}

pub fn load_gram(path: impl AsRef<Path>, sigma: Option<f64>) -> Result<KernelMatrix> {
    let file = std::fs::File::open(path)?;
    read_gram(std::io::BufReader::new(file), sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pts(rows: &[&[f64]]) -> DataMatrix {
        DataMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn gram_entries() {
        let d = pts(&[&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0]]);
        let k = gram(&d, 1.0).unwrap();
        assert_eq!(k.get(0, 1), 1.0);
        assert_relative_eq!(k.get(0, 2), (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(k.get(0, 3), (-4.0f64).exp(), epsilon = 1e-15);
        for i in 0..4 {
            assert_eq!(k.get(i, i), 1.0);
        }
        assert!(gram(&d, 0.0).is_err());
        assert!(gram(&d, -1.0).is_err());
    }

    #[test]
    fn serial_and_parallel_gram_are_bit_identical() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos()]).collect();
        let d = DataMatrix::from_rows(&rows).unwrap();
        let a = gram_with(&d, 0.7, Execution::Serial).unwrap();
        let b = gram_with(&d, 0.7, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cross_gram_matches_gram_columns() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.1, (i * i) as f64 * 0.01]).collect();
        let d = DataMatrix::from_rows(&rows).unwrap();
        let k = gram(&d, 0.5).unwrap();
        let full = cross_gram(&d, &LandmarkSet::full(12), 0.5).unwrap();
        assert_relative_eq!(&full, k.matrix(), epsilon = 1e-12);
        let single = cross_gram(&d, &LandmarkSet::new(vec![4], 12).unwrap(), 0.5).unwrap();
        assert_eq!(single.ncols(), 1);
        for i in 0..12 {
            assert_relative_eq!(single[(i, 0)], k.get(i, 4), epsilon = 1e-12);
        }
        let none = cross_gram(&d, &LandmarkSet::default(), 0.5).unwrap();
        assert_eq!(none.shape(), (12, 0));
        assert!(cross_gram(&d, &LandmarkSet(vec![12]), 0.5).is_err());
    }

    #[test]
    fn submatrix_cases() {
        let d = pts(&[&[0.0], &[1.0], &[3.0]]);
        let k = gram(&d, 1.0).unwrap();
        assert_eq!(submatrix(&k, &LandmarkSet::full(3)).unwrap(), *k.matrix());
        assert_eq!(submatrix(&k, &LandmarkSet::new(vec![1], 3).unwrap()).unwrap()[(0, 0)], 1.0);
        let pair = submatrix(&k, &LandmarkSet::new(vec![0, 2], 3).unwrap()).unwrap();
        assert_eq!(pair[(0, 1)], k.get(0, 2));
        assert_eq!(pair[(1, 0)], k.get(2, 0));
    }

    #[test]
    fn landmark_set_validation() {
        assert!(LandmarkSet::new(vec![0, 2, 5], 6).is_ok());
        assert!(LandmarkSet::new(vec![2, 2], 6).is_err());
        assert!(LandmarkSet::new(vec![3, 1], 6).is_err());
        assert!(LandmarkSet::new(vec![6], 6).is_err());
        assert!(LandmarkSet::from_unsorted(vec![4, 1, 1], 6).is_err());
        let s = LandmarkSet::from_unsorted(vec![4, 1], 6).unwrap();
        assert_eq!(s.complement(6), vec![0, 2, 3, 5]);
        assert!(s.contains(4) && !s.contains(2));
    }

    #[test]
    fn cholesky_examples() {
        let f = cholesky(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(*f.r(), Matrix::identity(3, 3));
        assert_eq!(f.logdet(), 0.0);
        let f = cholesky(&Matrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0])).unwrap();
        assert_relative_eq!(f.logdet(), 8f64.ln(), epsilon = 1e-14);
        assert_eq!(CholeskyFactor::empty().logdet(), 0.0);
        assert!(matches!(
            cholesky(&Matrix::from_element(2, 2, 1.0)),
            Err(Error::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn append_and_remove_edge_cases() {
        let f = chol_append(&CholeskyFactor::empty(), &[], 4.0).unwrap();
        assert_eq!(f.r()[(0, 0)], 2.0);
        let empty = chol_remove(&f, 0).unwrap();
        assert_eq!(empty.dim(), 0);
        assert_eq!(empty.logdet(), 0.0);
        assert!(chol_remove(&empty, 0).is_err());

        let d = pts(&[&[0.0], &[0.4], &[1.1], &[2.0]]);
        let k = gram(&d, 1.0).unwrap();
        let f = CholeskyFactor::of_kernel(&k, &[0, 1, 2]).unwrap();
        // duplicate landmark: the bordered matrix is exactly singular
        let col: Vec<f64> = [0, 1, 2].iter().map(|&i| k.get(i, 1)).collect();
        assert!(matches!(f.append(&col, 1.0, 1), Err(Error::NotPositiveDefinite { pivot: 3 })));
        // removing the last pivot truncates R
        let t = f.remove(2).unwrap();
        assert_eq!(*t.r(), f.r().view((0, 0), (2, 2)).into_owned());
        assert_eq!(t.order(), &[0, 1]);
    }

    #[test]
    fn remove_middle_matches_refactorization() {
        let d = pts(&[&[0.0], &[0.4], &[1.1], &[2.0], &[2.2]]);
        let k = gram(&d, 1.0).unwrap();
        let f = CholeskyFactor::of_kernel(&k, &[0, 1, 2, 3, 4]).unwrap();
        let g = f.remove(1).unwrap();
        let fresh = CholeskyFactor::of_kernel(&k, &[0, 2, 3, 4]).unwrap();
        assert_relative_eq!(g.reconstruct(), fresh.reconstruct(), epsilon = 1e-12);
        assert_relative_eq!(g.logdet(), fresh.logdet(), epsilon = 1e-10);
        for i in 0..4 {
            assert!(g.r()[(i, i)] > 0.0);
        }
    }

    #[test]
    fn gram_dump_round_trip() {
        let d = pts(&[&[0.0], &[0.5], &[3.0]]);
        let k = gram(&d, 2.0).unwrap();
        let mut buf = Vec::new();
        write_gram(&k, &mut buf).unwrap();
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        assert_eq!(buf.len(), 8 + 9 * 8);
        let back = read_gram(buf.as_slice(), Some(2.0)).unwrap();
        assert_eq!(back, k);
        assert!(read_gram(&buf[..20], None).is_err());
    }
}
