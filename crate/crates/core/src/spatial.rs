//! Common spatial patterns: class covariances, binary and one-vs-rest CSP,
//! and projection of epochs through a fitted filter bank.
//!
//! A bank fitted on imagined-speech epochs is applied unchanged to spoken
//! epochs; [`project`] never refits.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix};


use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, gemm, sym_eigen_desc, Strided};
use crate::signal::{Domain, EpochSet};

/// Default ridge, relative to `trace / n_channels`.
pub const DEFAULT_RIDGE: f64 = 1e-6;
pub const DEFAULT_PATTERNS_PER_CLASS: usize = 8;

/// Per-class mean of trace-normalized spatial covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCovariances {
    pub class_ids: Vec<u32>,
    pub matrices: Vec<DMatrix<f64>>,
    pub counts: Vec<usize>,
    pub domain: Domain,
}

impl ClassCovariances {
    pub fn n_channels(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    pub fn get(&self, class: u32) -> Option<&DMatrix<f64>> {
        self.class_ids.iter().position(|&c| c == class).map(|i| &self.matrices[i])
    }
}

/// `X Xᵀ / trace(X Xᵀ)` for one channel-major epoch.
///
/// Panics if `epoch` is shorter than `n_channels × n_samples`.
pub fn normalized_covariance(epoch: &[f64], n_channels: usize, n_samples: usize) -> DMatrix<f64> {
    let x = Strided::row_major(epoch, n_channels, n_samples);
    let gram = gemm(x, x.transpose()).expect("epoch shape checked by caller");
    // Exact symmetry regardless of the kernel's summation order.
    let mut cov = DMatrix::from_fn(n_channels, n_channels, |i, j| {
        0.5 * (gram[i * n_channels + j] + gram[j * n_channels + i])
    });
    let trace = cov.trace();
    if trace > 0.0 {
        cov /= trace;
    }
    cov
}

/// Averages normalized covariances per class, adds `ridge × trace / n` to the
/// diagonal, and renormalizes to unit trace.
pub fn class_covariances(epochs: &EpochSet, ridge: f64) -> Result<ClassCovariances> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid("ridge", format!("{ridge} must be non-negative")));
    }
    let domain = match epochs.domains().first() {
        Some(&d) if epochs.domains().iter().all(|&x| x == d) => d,
        Some(_) => return Err(Error::invalid("epochs", "covariances must be fitted on a single domain")),
        None => return Err(Error::invalid("epochs", "no epochs to fit")),
    };
    let n = epochs.n_channels();
    let mut sums: BTreeMap<u32, (DMatrix<f64>, usize)> = BTreeMap::new();
    for i in 0..epochs.n_epochs() {
        let cov = normalized_covariance(epochs.epoch(i), n, epochs.n_samples());
        let entry = sums.entry(epochs.labels()[i]).or_insert_with(|| (DMatrix::zeros(n, n), 0));
        entry.0 += cov;
        entry.1 += 1;
    }
    let mut out = ClassCovariances { class_ids: vec![], matrices: vec![], counts: vec![], domain };
    for (class, (sum, count)) in sums {
        if count < 2 {
            return Err(Error::InsufficientData { class, count, required: 2 });
        }
        let mut mean = sum / count as f64;
        let shift = ridge * mean.trace() / n as f64;
        for d in 0..n {
            mean[(d, d)] += shift;
        }
        let trace = mean.trace();
        if trace > 0.0 {
            mean /= trace;
        }
        out.class_ids.push(class);
        out.matrices.push(mean);
        out.counts.push(count);
    }
    Ok(out)
}

/// Filters from one two-class problem, rows ordered by descending
/// eigenvalue for the top half and ascending for the bottom half.
#[derive(Debug, Clone, PartialEq)]
pub struct CspSolution {
    pub filters: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

/// Solves `C1 w = λ (C1 + C2) w` and keeps the `n_pairs` largest and
/// `n_pairs` smallest eigenvalues. Filters satisfy `wᵀ(C1+C2)w = 1` and have
/// their largest-magnitude entry positive.
pub fn csp_binary(c1: &DMatrix<f64>, c2: &DMatrix<f64>, n_pairs: usize) -> Result<CspSolution> {
    let n = c1.nrows();
    if c1.shape() != (n, n) || c2.shape() != (n, n) {
        return Err(Error::Shape(format!("covariances {:?} and {:?} must be square and equal", c1.shape(), c2.shape())));
    }
    if n_pairs == 0 || 2 * n_pairs > n {
        return Err(Error::invalid("n_pairs", format!("{n_pairs} pairs need 1 ≤ 2·pairs ≤ {n}")));
    }
    let composite = c1 + c2;
    let chol = Cholesky::new(composite)
        .ok_or_else(|| Error::Decomposition("composite covariance is not positive definite".into()))?;
    let l = chol.l();
    let left = l
        .solve_lower_triangular(c1)
        .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))?;
    let whitened = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))?;
    let (values, vectors) = sym_eigen_desc(&whitened)?;
    let all_filters = l
        .transpose()
        .solve_upper_triangular(&vectors)
        .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))?;

    let picks: Vec<usize> = (0..n_pairs).chain((n - n_pairs..n).rev()).collect();
    let mut filters = DMatrix::zeros(picks.len(), n);
    let mut eigenvalues = Vec::with_capacity(picks.len());
    for (row, &col) in picks.iter().enumerate() {
        let mut w: Vec<f64> = all_filters.column(col).iter().copied().collect();
        canonical_sign(&mut w);
        for (j, v) in w.into_iter().enumerate() {
            filters[(row, j)] = v;
        }
        eigenvalues.push(values[col].clamp(0.0, 1.0));
    }
    Ok(CspSolution { filters, eigenvalues })
}

/// Fitted spatial filters, one block of `patterns_per_class` rows per class
/// in ascending class-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFilterBank {
    filters: DMatrix<f64>,
    class_ids: Vec<u32>,
    eigenvalues: Vec<f64>,
    patterns_per_class: usize,
    fitted_domain: Domain,
}

impl SpatialFilterBank {
    pub fn new(
        filters: DMatrix<f64>,
        class_ids: Vec<u32>,
        eigenvalues: Vec<f64>,
        patterns_per_class: usize,
        fitted_domain: Domain,
    ) -> Result<Self> {
        let expected = class_ids.len() * patterns_per_class;
        if filters.nrows() != expected || eigenvalues.len() != expected {
            return Err(Error::Shape(format!(
                "{} classes × {patterns_per_class} patterns needs {expected} filters, got {} rows and {} eigenvalues",
                class_ids.len(),
                filters.nrows(),
                eigenvalues.len()
            )));
        }
        if let Some(v) = eigenvalues.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid("eigenvalues", format!("{v} outside [0, 1]")));
        }
        if filters.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("filters", "non-finite coefficient"));
        }
        Ok(Self { filters, class_ids, eigenvalues, patterns_per_class, fitted_domain })
    }

    /// Identity bank: one filter per channel, all attributed to class 0.
    pub fn identity(n_channels: usize, domain: Domain) -> Self {
        Self {
            filters: DMatrix::identity(n_channels, n_channels),
            class_ids: vec![0],
            eigenvalues: vec![0.5; n_channels],
            patterns_per_class: n_channels,
            fitted_domain: domain,
        }
    }

    pub fn filters(&self) -> &DMatrix<f64> {
        &self.filters
    }

    pub fn n_filters(&self) -> usize {
        self.filters.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.filters.ncols()
    }

    pub fn class_ids(&self) -> &[u32] {
        &self.class_ids
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn patterns_per_class(&self) -> usize {
        self.patterns_per_class
    }

    pub fn fitted_domain(&self) -> Domain {
        self.fitted_domain
    }

    /// Class that produced filter `row`.
    pub fn source_class(&self, row: usize) -> u32 {
        self.class_ids[row / self.patterns_per_class]
    }

    /// Rows belonging to `class`, if present.
    pub fn block(&self, class: u32) -> Option<DMatrix<f64>> {
        let i = self.class_ids.iter().position(|&c| c == class)?;
        Some(self.filters.rows(i * self.patterns_per_class, self.patterns_per_class).into_owned())
    }

    pub fn filter(&self, row: usize) -> Vec<f64> {
        self.filters.row(row).iter().copied().collect()
    }
}

/// One-vs-rest CSP: class `c` against the unweighted mean of the other
/// classes, keeping `patterns_per_class / 2` filters at each spectrum end.
pub fn csp_multiclass(covs: &ClassCovariances, patterns_per_class: usize) -> Result<SpatialFilterBank> {
    let k = covs.class_ids.len();
    if k < 2 {
        return Err(Error::invalid("covariances", format!("need at least 2 classes, got {k}")));
    }
    if patterns_per_class == 0 || !patterns_per_class.is_multiple_of(2) {
        return Err(Error::invalid("patterns_per_class", format!("{patterns_per_class} must be even and positive")));
    }
    let n = covs.n_channels();
    let mut filters = DMatrix::zeros(k * patterns_per_class, n);
    let mut eigenvalues = Vec::with_capacity(k * patterns_per_class);
    for (ci, class) in covs.class_ids.iter().enumerate() {
        let mut rest = DMatrix::zeros(n, n);
        for (j, m) in covs.matrices.iter().enumerate() {
            if j != ci {
                rest += m;
            }
        }
        rest /= (k - 1) as f64;
        let sol = csp_binary(&covs.matrices[ci], &rest, patterns_per_class / 2).map_err(|e| match e {
            Error::Decomposition(msg) => Error::Decomposition(format!("class {class}: {msg}")),
            Error::InvalidParameter { name, reason } => {
                Error::InvalidParameter { name, reason: format!("class {class}: {reason}") }
            }
            other => other,
        })?;
        filters.rows_mut(ci * patterns_per_class, patterns_per_class).copy_from(&sol.filters);
        eigenvalues.extend(sol.eigenvalues);
    }
    SpatialFilterBank::new(filters, covs.class_ids.clone(), eigenvalues, patterns_per_class, covs.domain)
}

/// Covariances and one-vs-rest CSP in one call.
pub fn fit_bank(epochs: &EpochSet, ridge: f64, patterns_per_class: usize) -> Result<SpatialFilterBank> {
    csp_multiclass(&class_covariances(epochs, ridge)?, patterns_per_class)
}

/// Row-major filter coefficients, convenient for tight projection loops.
fn row_major(bank: &SpatialFilterBank) -> Vec<f64> {
    let (rows, cols) = bank.filters.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        out.extend(bank.filters.row(r).iter());
    }
    out
}

/// Applies the bank to one channel-major epoch; returns `n_filters × n_samples`.
pub fn project_epoch(bank: &SpatialFilterBank, epoch: &[f64], n_samples: usize) -> Result<Vec<f64>> {
    let weights = row_major(bank);
    project_with(&weights, bank.n_filters(), bank.n_channels(), epoch, n_samples)
}

fn project_with(weights: &[f64], n_filters: usize, n_channels: usize, epoch: &[f64], n_samples: usize) -> Result<Vec<f64>> {
    if epoch.len() != n_channels * n_samples {
        return Err(Error::Shape(format!(
            "epoch of {} values does not match {n_channels} channels × {n_samples} samples",
            epoch.len()
        )));
    }
    gemm(Strided::row_major(weights, n_filters, n_channels), Strided::row_major(epoch, n_channels, n_samples))
}

/// Spatially filters every epoch; labels and domains carry through.
pub fn project(bank: &SpatialFilterBank, epochs: &EpochSet) -> Result<EpochSet> {
    if bank.n_channels() != epochs.n_channels() {
        return Err(Error::Shape(format!(
            "bank expects {} channels, epochs have {}",
            bank.n_channels(),
            epochs.n_channels()
        )));
    }
    let weights = row_major(bank);
    let mut data = Vec::with_capacity(epochs.n_epochs() * bank.n_filters() * epochs.n_samples());
    for i in 0..epochs.n_epochs() {
        data.extend(project_with(&weights, bank.n_filters(), bank.n_channels(), epochs.epoch(i), epochs.n_samples())?);
    }
    EpochSet::new(
        epochs.sample_rate_hz(),
        bank.n_filters(),
        epochs.n_samples(),
        data,
        epochs.labels().to_vec(),
        epochs.domains().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_off_diagonal;
    use crate::oracle::generalized_eigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let m = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
        let t = m.trace();
        m / t
    }

    #[test]
    fn diagonal_case_is_analytic() {
        let c1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0 / 3.0, 1.0 / 3.0]));
        let c2 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0 / 3.0, 2.0 / 3.0]));
        let sol = csp_binary(&c1, &c2, 1).unwrap();
        assert!((sol.eigenvalues[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((sol.eigenvalues[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((sol.filters[(0, 0)] - 1.0).abs() < 1e-12 && sol.filters[(0, 1)].abs() < 1e-12);
        assert!((sol.filters[(1, 1)] - 1.0).abs() < 1e-12 && sol.filters[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn simultaneous_diagonalization_and_pairing() {
        for seed in 0..5 {
            let n = 8;
            let (c1, c2) = (random_spd(n, seed), random_spd(n, seed + 100));
            let sol = csp_binary(&c1, &c2, 4).unwrap();
            let w = sol.filters.transpose();
            let d1 = w.transpose() * &c1 * &w;
            let d2 = w.transpose() * &c2 * &w;
            assert!(max_off_diagonal(&d1) < 1e-8);
            assert!(max_off_diagonal(&d2) < 1e-8);
            for r in 0..sol.filters.nrows() {
                assert!((d1[(r, r)] + d2[(r, r)] - 1.0).abs() < 1e-10);
                assert!((d1[(r, r)] - sol.eigenvalues[r]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn agrees_with_jacobi_oracle() {
        let n = 6;
        let (c1, c2) = (random_spd(n, 7), random_spd(n, 8));
        let sol = csp_binary(&c1, &c2, 3).unwrap();
        let row_major = |m: &DMatrix<f64>| (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect::<Vec<_>>();
        let (values, vectors) = generalized_eigen(&row_major(&c1), &row_major(&(&c1 + &c2)), n);
        // top three descending, bottom three ascending
        let expected = [values[0], values[1], values[2], values[5], values[4], values[3]];
        let oracle_vecs = [&vectors[0], &vectors[1], &vectors[2], &vectors[5], &vectors[4], &vectors[3]];
        for r in 0..6 {
            assert!((sol.eigenvalues[r] - expected[r]).abs() < 1e-10);
            let w: Vec<f64> = sol.filters.row(r).iter().copied().collect();
            let dot: f64 = w.iter().zip(oracle_vecs[r].iter()).map(|(a, b)| a * b).sum();
            let norms = w.iter().map(|v| v * v).sum::<f64>().sqrt() * oracle_vecs[r].iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((dot.abs() / norms - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn non_spd_composite_is_decomposition_error() {
        let z = DMatrix::zeros(3, 3);
        assert!(matches!(csp_binary(&z, &z, 1), Err(Error::Decomposition(_))));
    }

    fn epochs_from(rows: &[(u32, Vec<f64>)], n_channels: usize, n_samples: usize) -> EpochSet {
        let mut set = EpochSet::empty(100.0, n_channels, n_samples);
        for (label, data) in rows {
            set.push(data, *label, Domain::Imagined).unwrap();
        }
        set
    }

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn covariance_scale_invariant_and_unit_trace() {
        let x = noise(4 * 200, 1);
        let y: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
        let a = class_covariances(&epochs_from(&[(0, x.clone()), (0, x.clone())], 4, 200), DEFAULT_RIDGE).unwrap();
        let b = class_covariances(&epochs_from(&[(0, y.clone()), (0, y)], 4, 200), DEFAULT_RIDGE).unwrap();
        assert!((&a.matrices[0] - &b.matrices[0]).abs().max() < 1e-15);
        assert!((a.matrices[0].trace() - 1.0).abs() < 1e-10);
        assert_eq!(a.matrices[0], a.matrices[0].transpose());
    }

    #[test]
    fn rank_one_epoch_stays_rank_one() {
        let s = noise(100, 3);
        let v = [0.6, 0.8, 0.0];
        let epoch: Vec<f64> = v.iter().flat_map(|&vi| s.iter().map(move |x| vi * x)).collect();
        let covs = class_covariances(&epochs_from(&[(1, epoch.clone()), (1, epoch)], 3, 100), 0.0).unwrap();
        let (values, _) = sym_eigen_desc(&covs.matrices[0]).unwrap();
        assert!((values[0] - 1.0).abs() < 1e-12);
        assert!(values[1].abs() < 1e-12 && values[2].abs() < 1e-12);
    }

    #[test]
    fn insufficient_class() {
        let e = epochs_from(&[(0, noise(200, 1)), (0, noise(200, 2)), (5, noise(200, 3))], 2, 100);
        assert_eq!(class_covariances(&e, 0.0), Err(Error::InsufficientData { class: 5, count: 1, required: 2 }));
    }

    #[test]
    fn two_class_ovr_matches_binary() {
        let rows: Vec<(u32, Vec<f64>)> = (0..6).map(|i| ((i % 2) as u32, noise(5 * 300, i as u64))).collect();
        let covs = class_covariances(&epochs_from(&rows, 5, 300), DEFAULT_RIDGE).unwrap();
        let bank = csp_multiclass(&covs, 2).unwrap();
        assert_eq!(bank.n_filters(), 4);
        let bin = csp_binary(&covs.matrices[0], &covs.matrices[1], 1).unwrap();
        assert_eq!(bank.block(0).unwrap(), bin.filters);
        assert_eq!(bank.source_class(3), 1);
    }

    #[test]
    fn thirteen_classes_give_104_filters() {
        let rows: Vec<(u32, Vec<f64>)> = (0..26).map(|i| ((i % 13) as u32, noise(16 * 120, 50 + i as u64))).collect();
        let bank = fit_bank(&epochs_from(&rows, 16, 120), DEFAULT_RIDGE, 8).unwrap();
        assert_eq!(bank.n_filters(), 104);
        for c in 0..13u32 {
            for r in c as usize * 8..(c as usize + 1) * 8 {
                assert_eq!(bank.source_class(r), c);
            }
        }
        assert!(bank.eigenvalues().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn odd_patterns_rejected() {
        let rows: Vec<(u32, Vec<f64>)> = (0..4).map(|i| ((i % 2) as u32, noise(400, i as u64))).collect();
        let covs = class_covariances(&epochs_from(&rows, 4, 100), 0.0).unwrap();
        assert!(csp_multiclass(&covs, 3).is_err());
    }

    #[test]
    fn identity_projection() {
        let e = epochs_from(&[(0, noise(3 * 50, 9))], 3, 50);
        let bank = SpatialFilterBank::identity(3, Domain::Imagined);
        assert_eq!(project(&bank, &e).unwrap(), e);
    }

    #[test]
    fn projection_shape_mismatch() {
        let e = epochs_from(&[(0, noise(3 * 50, 9))], 3, 50);
        let bank = SpatialFilterBank::identity(4, Domain::Imagined);
        assert!(matches!(project(&bank, &e), Err(Error::Shape(_))));
    }
}
