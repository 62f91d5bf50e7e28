//! Exact O(n²) t-SNE.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub init_sigma: f64,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            init_sigma: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub points: Vec<[f64; 2]>,
    pub kl_initial: f64,
    pub kl_final: f64,
    pub params: TsneParams,
}

const SEARCH_STEPS: usize = 50;
const SEARCH_TOLERANCE: f64 = 1e-5;

fn squared_distances(features: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        let xi = &features[i * d..(i + 1) * d];
        for j in i + 1..n {
            let s: f64 = xi.iter().zip(&features[j * d..(j + 1) * d]).map(|(a, b)| (a - b) * (a - b)).sum();
            dist[i * n + j] = s;
            dist[j * n + i] = s;
        }
    }
    dist
}

/// Conditional row `p_{j|i}` whose entropy matches `ln(perplexity)`,
/// found by bisection on the Gaussian precision.
fn conditional_row(dist: &[f64], i: usize, n: usize, target_entropy: f64, row: &mut [f64]) {
    let d_min = (0..n).filter(|&j| j != i).map(|j| dist[i * n + j]).fold(f64::INFINITY, f64::min);
    let (mut beta, mut lo, mut hi) = (1.0, f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..SEARCH_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for j in 0..n {
            if j == i {
                row[j] = 0.0;
                continue;
            }
            let shifted = dist[i * n + j] - d_min;
            let p = (-shifted * beta).exp();
            row[j] = p;
            sum += p;
            weighted += shifted * p;
        }
        let entropy = sum.ln() + beta * weighted / sum;
        row.iter_mut().for_each(|p| *p /= sum);
        let diff = entropy - target_entropy;
        if diff.abs() < SEARCH_TOLERANCE {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
}

/// Symmetrized affinities `(p_{j|i} + p_{i|j}) / 2n`, row-major `n × n`.
pub fn joint_probabilities(features: &[f64], n: usize, d: usize, perplexity: f64) -> Result<Vec<f64>> {
    if features.len() != n * d {
        return Err(Error::Shape(format!("{} values for {n} points of dimension {d}", features.len())));
    }
    let dist = squared_distances(features, n, d);
    if dist.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("all points are identical".into()));
    }
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    for i in 0..n {
        conditional_row(&dist, i, n, target, &mut cond[i * n..(i + 1) * n]);
    }
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64);
        }
    }
    Ok(p)
}

/// Student-t kernel values (zero diagonal) and their sum.
fn low_dim_kernel(y: &[[f64; 2]], num: &mut [f64]) -> f64 {
    let n = y.len();
    let mut total = 0.0;
    for i in 0..n {
        num[i * n + i] = 0.0;
        for j in i + 1..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
            total += 2.0 * v;
        }
    }
    total
}

fn kl_divergence(p: &[f64], num: &[f64], total: f64) -> f64 {
    p.iter()
        .zip(num)
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &nij)| pij * (pij / (nij / total).max(f64::MIN_POSITIVE)).ln())
        .sum()
}

/// Gradient of KL(E·P || Q) with respect to `y`, written into `grad`.
///
/// dC/dy_i = 4 Σ_j (E p_ij − n_ij/Z) n_ij (y_i − y_j), split into attractive
/// and repulsive sums so one pass over pairs suffices before Z is known.
/// `grad` holds the repulsive sums until the final scaling.
fn kl_gradient(p: &[f64], y: &[[f64; 2]], exaggeration: f64, attract: &mut [[f64; 2]], grad: &mut [[f64; 2]]) {
    let n = y.len();
    attract.iter_mut().chain(grad.iter_mut()).for_each(|g| *g = [0.0; 2]);
    let mut total = 0.0;
    for i in 0..n {
        let (mut ai, mut ri) = ([0.0; 2], [0.0; 2]);
        for j in i + 1..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let nij = 1.0 / (1.0 + dx * dx + dy * dy);
            total += 2.0 * nij;
            let pa = p[i * n + j] * nij;
            let rq = nij * nij;
            ai[0] += pa * dx;
            ai[1] += pa * dy;
            ri[0] += rq * dx;
            ri[1] += rq * dy;
            attract[j][0] -= pa * dx;
            attract[j][1] -= pa * dy;
            grad[j][0] -= rq * dx;
            grad[j][1] -= rq * dy;
        }
        for a in 0..2 {
            attract[i][a] += ai[a];
            grad[i][a] += ri[a];
        }
    }
    for (g, at) in grad.iter_mut().zip(attract.iter()) {
        for a in 0..2 {
            g[a] = 4.0 * (exaggeration * at[a] - g[a] / total);
        }
    }
}

/// Embeds `n` points of dimension `d` (row-major) in two dimensions.
pub fn tsne(features: &[f64], n: usize, d: usize, params: &TsneParams) -> Result<TsneResult> {
    if n < 4 {
        return Err(Error::invalid("features", format!("t-SNE needs at least 4 points, got {n}")));
    }
    let max_perplexity = (n as f64 - 1.0) / 3.0;
    if !(params.perplexity > 0.0 && params.perplexity < max_perplexity) {
        return Err(Error::invalid(
            "perplexity",
            format!("{} must be in (0, {max_perplexity:.3}) for {n} points", params.perplexity),
        ));
    }
    let p = joint_probabilities(features, n, d, params.perplexity)?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, params.init_sigma).map_err(|_| Error::invalid("init_sigma", "must be positive"))?;
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];

    let total = low_dim_kernel(&y, &mut num);
    let kl_initial = kl_divergence(&p, &num, total);

    let mut attract = vec![[0.0f64; 2]; n];
    let mut grad = vec![[0.0f64; 2]; n];
    for iter in 0..params.iterations {
        let exaggeration = if iter < params.exaggeration_iterations { params.early_exaggeration } else { 1.0 };
        let momentum = if iter < params.momentum_switch { params.initial_momentum } else { params.final_momentum };
        kl_gradient(&p, &y, exaggeration, &mut attract, &mut grad);
        for i in 0..n {
            for a in 0..2 {
                let g = grad[i][a];
                gains[i][a] = if (g > 0.0) != (velocity[i][a] > 0.0) { gains[i][a] + 0.2 } else { gains[i][a] * 0.8 };
                gains[i][a] = gains[i][a].max(0.01);
                velocity[i][a] = momentum * velocity[i][a] - params.learning_rate * gains[i][a] * g;
            }
        }
        for (yi, vi) in y.iter_mut().zip(&velocity) {
            yi[0] += vi[0];
            yi[1] += vi[1];
        }
        let centre = y.iter().fold([0.0; 2], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        for yi in y.iter_mut() {
            yi[0] -= centre[0] / n as f64;
            yi[1] -= centre[1] / n as f64;
        }
    }
    let total = low_dim_kernel(&y, &mut num);
    let kl_final = kl_divergence(&p, &num, total);
    if y.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(Error::Degenerate("t-SNE produced non-finite coordinates".into()));
    }
    Ok(TsneResult { points: y, kl_initial, kl_final, params: params.clone() })
}
