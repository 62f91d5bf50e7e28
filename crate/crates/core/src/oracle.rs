//! Test-only reference routines, independent of the library's code paths.

use alloc::vec;
use alloc::vec::Vec;

/// Cyclic Jacobi eigensolver on a dense symmetric matrix (row-major).
/// Returns eigenvalues (descending) and eigenvectors as rows.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[i * n + j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| m[b * n + b].total_cmp(&m[a * n + a]));
    let values = idx.iter().map(|&i| m[i * n + i]).collect();
    let vectors = idx.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (values, vectors)
}

/// Generalized symmetric-definite eigenproblem `A w = λ B w` by whitening
/// with `B^{-1/2}` computed from the Jacobi decomposition of `B`.
pub fn generalized_eigen(a: &[f64], b: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (bv, be) = jacobi_eigen(b, n);
    // B^{-1/2} = E diag(1/sqrt λ) Eᵀ
    let mut inv_sqrt = vec![0.0; n * n];
    for (lam, e) in bv.iter().zip(&be) {
        for i in 0..n {
            for j in 0..n {
                inv_sqrt[i * n + j] += e[i] * e[j] / lam.sqrt();
            }
        }
    }
    let mul = |x: &[f64], y: &[f64]| {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    out[i * n + j] += x[i * n + k] * y[k * n + j];
                }
            }
        }
        out
    };
    let m = mul(&mul(&inv_sqrt, a), &inv_sqrt);
    let (values, vecs) = jacobi_eigen(&m, n);
    let filters = vecs
        .iter()
        .map(|u| (0..n).map(|i| (0..n).map(|k| inv_sqrt[i * n + k] * u[k]).sum()).collect())
        .collect();
    (values, filters)
}
