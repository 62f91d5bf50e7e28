//! Small dense helpers over `nalgebra` used by the spatial and ICA code.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Flip `v` so its largest-magnitude entry is positive (first such entry on ties).
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted descending and
/// eigenvector columns in canonical sign.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Shape(format!("eigendecomposition of {}x{} matrix", n, m.ncols())));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition(format!("symmetric eigensolver did not converge ({n}x{n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        canonical_sign(&mut col);
        vectors.set_column(dst, &DVector::from_vec(col));
    }
    Ok((values, vectors))
}

/// `(M Mᵀ)^{-1/2} M` for a square matrix with full row rank.
pub fn symmetric_decorrelate(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = m * m.transpose();
    let (values, vectors) = sym_eigen_desc(&gram)?;
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Decomposition("decorrelation of a singular matrix".into()));
    }
    let inv_sqrt = DVector::from_iterator(values.len(), values.iter().map(|v| 1.0 / v.sqrt()));
    let scaled = &vectors * DMatrix::from_diagonal(&inv_sqrt) * vectors.transpose();
    Ok(scaled * m)
}

/// Largest absolute off-diagonal entry.
pub fn max_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

/// Builds a row-major slice view as a matrix with `rows` rows.
pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().iter().fold(0.0f64, |a, &b| a.max(b))
}

/// Strided view of a dense matrix for [`gemm`]: `data[r * row_stride + c * col_stride]`.
#[derive(Debug, Clone, Copy)]
pub struct Strided<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a> Strided<'a> {
    pub fn row_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self { data, rows, cols, row_stride: cols, col_stride: 1 }
    }

    pub fn transpose(self) -> Self {
        Self { rows: self.cols, cols: self.rows, row_stride: self.col_stride, col_stride: self.row_stride, ..self }
    }

    pub fn of(m: &'a DMatrix<f64>) -> Self {
        Self { data: m.as_slice(), rows: m.nrows(), cols: m.ncols(), row_stride: 1, col_stride: m.nrows() }
    }

    fn fits(&self) -> bool {
        self.rows == 0 || self.cols == 0 || (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride < self.data.len()
    }
}

/// Row-major product `a · b` through a cache-blocked kernel.
pub fn gemm(a: Strided<'_>, b: Strided<'_>) -> Result<Vec<f64>> {
    if a.cols != b.rows || !a.fits() || !b.fits() {
        return Err(Error::Shape(format!("cannot multiply {}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = alloc::vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return Ok(out);
    }
    // SAFETY: both operands were bounds-checked by `fits`, and `out` is a
    // fresh m × n row-major buffer.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            0.0,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_matches_naive_product() {
        let (m, k, n) = (7, 5, 9);
        let a: Vec<f64> = (0..m * k).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| ((i * 13) % 7) as f64 * 0.5).collect();
        let got = gemm(Strided::row_major(&a, m, k), Strided::row_major(&b, k, n)).unwrap();
        for i in 0..m {
            for j in 0..n {
                let want: f64 = (0..k).map(|l| a[i * k + l] * b[l * n + j]).sum();
                assert!((got[i * n + j] - want).abs() < 1e-12);
            }
        }
        let at = Strided::row_major(&a, m, k).transpose();
        let gram = gemm(Strided::row_major(&a, m, k), at).unwrap();
        let cm = DMatrix::from_row_slice(m, k, &a);
        let via = gemm(Strided::of(&cm), Strided::of(&cm).transpose()).unwrap();
        assert_eq!(gram, via);
        assert!(gemm(Strided::row_major(&a, m, k), Strided::row_major(&a, m, k)).is_err());
    }

    #[test]
    fn eigen_sorted_and_signed() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = sym_eigen_desc(&m).unwrap();
        assert_eq!(vals, [5.0, 2.0, 1.0]);
        assert_eq!(vecs[(1, 0)], 1.0);
        assert_eq!(vecs[(0, 1)], 1.0);
    }

    #[test]
    fn decorrelated_rows_are_orthonormal() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.3, 0.1, 2.0, -0.4, 0.5, 0.5, 1.5]);
        let d = symmetric_decorrelate(&m).unwrap();
        let g = &d * d.transpose();
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn sign_convention() {
        let mut v = [0.1, -0.9, 0.5];
        canonical_sign(&mut v);
        assert_eq!(v, [-0.1, 0.9, -0.5]);
    }
}
