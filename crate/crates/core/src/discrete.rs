//! The uniform-grid discretization: a fractional Brownian motion sampled at
//! `k/N` has increments (fractional Gaussian noise) with Toeplitz covariance
//!
//! ```text
//! C_ij = N^{-2H} ρ(|i-j|),   ρ(m) = ((m+1)^{2H} + |m-1|^{2H} - 2 m^{2H}) / 2.
//! ```
//!
//! Cholesky-factoring `C = L Lᵀ` expresses the increments through i.i.d.
//! standard Gaussians, and the cumulative column sums of `L` give the
//! lower-triangular matrix `k_ij` playing the role of the kernel: the sampled
//! path is `b = K ζ`. The distance profile of a candidate coefficient vector
//! `a` is `h_t(a) = Σ_{s≤t} (k_ts - a_s)²` and the objective is its maximum.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::{Error, Result};

/// Pivot threshold below which the Cholesky factorization is rejected as
/// numerically non-positive-definite. No jitter is ever added.
const PIVOT_MIN: f64 = 1e-13;

/// Dense lower-triangular matrix in packed row-major storage: row `t` holds
/// entries for columns `0..=t`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    /// Build from an entry function over `(row, col)` with `col <= row`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for t in 0..n {
            let row = m.row_mut(t);
            for (s, v) in row.iter_mut().enumerate() {
                *v = f(t, s);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, t: usize) -> usize {
        t * (t + 1) / 2
    }

    /// Row `t` as a slice of its `t + 1` stored entries.
    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        let o = self.offset(t);
        &self.data[o..o + t + 1]
    }

    #[inline]
    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        let o = self.offset(t);
        &mut self.data[o..o + t + 1]
    }

    /// Entry `(t, s)`; zero above the diagonal.
    #[inline]
    pub fn get(&self, t: usize, s: usize) -> f64 {
        if s > t {
            0.0
        } else {
            self.data[self.offset(t) + s]
        }
    }

    /// The last row, i.e. the coefficients reproducing the terminal value.
    pub fn last_row(&self) -> &[f64] {
        self.row(self.n - 1)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The discrete model for one `(H, N)` pair: Toeplitz increment covariance,
/// its Cholesky factor and the derived kernel matrix.
///
/// Immutable after construction; all evaluation entry points are pure.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiscreteModel {
    h: f64,
    n: usize,
    /// `ρ(0..N)`; the covariance entry is `cov_scale * rho[|i-j|]`.
    rho: Vec<f64>,
    cov_scale: f64,
    chol: KernelMatrix,
    kernel: KernelMatrix,
}

/// Build the discrete model. `H` must lie in (1/2, 1) and `1 ≤ N ≤ 5000`.
///
/// Fails with [`Error::NotPositiveDefinite`] if a Cholesky pivot drops to
/// 1e-13 or below; the failure is surfaced, never masked by regularization.
pub fn build_model(h: f64, n: usize) -> Result<DiscreteModel> {
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::InvalidHurst(h));
    }
    if n == 0 || n > 5000 {
        return Err(Error::InvalidParameter(format!(
            "N must lie in 1..=5000, got {n}"
        )));
    }
    let two_h = 2.0 * h;
    let rho: Vec<f64> = (0..n)
        .map(|m| {
            let m = m as f64;
            0.5 * ((m + 1.0).powf(two_h) + (m - 1.0).abs().powf(two_h) - 2.0 * m.powf(two_h))
        })
        .collect();
    let cov_scale = (n as f64).powf(-two_h);

    let cov = |i: usize, j: usize| cov_scale * rho[i.abs_diff(j)];
    let chol = cholesky(n, cov)?;

    // k_ts = Σ_{i=s..=t} l_is: cumulative column sums of L.
    let mut kernel = KernelMatrix::zeros(n);
    for t in 0..n {
        for s in 0..=t {
            let above = if t == 0 { 0.0 } else { kernel.get(t - 1, s) };
            kernel.row_mut(t)[s] = above + chol.get(t, s);
        }
    }

    Ok(DiscreteModel { h, n, rho, cov_scale, chol, kernel })
}

fn cholesky(n: usize, cov: impl Fn(usize, usize) -> f64) -> Result<KernelMatrix> {
    let mut l = KernelMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = l.row(i)[..j].iter().zip(&l.row(j)[..j]).map(|(a, b)| a * b).sum();
            let v = cov(i, j) - dot;
            if i == j {
                if v <= PIVOT_MIN {
                    return Err(Error::NotPositiveDefinite { index: i, pivot: v });
                }
                l.row_mut(i)[j] = v.sqrt();
            } else {
                l.row_mut(i)[j] = v / l.get(j, j);
            }
        }
    }
    Ok(l)
}

impl DiscreteModel {
    pub fn hurst(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Increment covariance entry `C_ij` (both indices zero-based).
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov_scale * self.rho[i.abs_diff(j)]
    }

    /// Cholesky factor `L` of the increment covariance.
    pub fn chol(&self) -> &KernelMatrix {
        &self.chol
    }

    /// Discrete kernel matrix `k_ts`.
    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    /// Residuals of the three construction invariants, for diagnostics:
    /// the factorization residual `max |C - L Lᵀ| / max |C|`, and the worst
    /// deviation of row variances `Σ_s k_ts²` from `((t+1)/N)^{2H}`.
    pub fn factorization_residual(&self) -> f64 {
        let scale = self.cov_scale * self.rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..=i {
                let m = j.min(i);
                let dot: f64 = self.chol.row(i)[..=m]
                    .iter()
                    .zip(&self.chol.row(j)[..=m])
                    .map(|(a, b)| a * b)
                    .sum();
                worst = worst.max((self.cov(i, j) - dot).abs());
            }
        }
        worst / scale
    }

    /// Worst deviation of `Σ_s k_ts²` from `((t+1)/N)^{2H}` over all rows.
    pub fn variance_identity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for t in 0..self.n {
            let sum: f64 = self.kernel.row(t).iter().map(|v| v * v).sum();
            let expect = (((t + 1) as f64) / self.n as f64).powf(2.0 * self.h);
            worst = worst.max((sum - expect).abs());
        }
        worst
    }
}

/// Distance profile `h_t(a) = Σ_{s≤t} (k_ts - a_s)²` for `t = 1..N`
/// (returned zero-based).
pub fn h_profile(kernel: &KernelMatrix, a: &[f64]) -> Result<Vec<f64>> {
    let n = kernel.n();
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    let mut h = vec![0.0; n];
    for (t, ht) in h.iter_mut().enumerate() {
        let row = kernel.row(t);
        let mut acc = 0.0;
        for (k, &coef) in row.iter().zip(a) {
            let d = k - coef;
            acc += d * d;
        }
        *ht = acc;
    }
    Ok(h)
}

/// The minimax objective `F(a) = max_t h_t(a)`.
pub fn functional_f(kernel: &KernelMatrix, a: &[f64]) -> Result<f64> {
    Ok(h_profile(kernel, a)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Paths are processed in fixed-size shards so the parallel reduction is
/// independent of the worker count.
const MC_SHARD: usize = 2048;

/// Empirical second moments `Ê(b_k - m_k)²` over `paths` simulated paths,
/// with `b = K ζ` and `m_k = Σ_{j≤k} a_j ζ_j` for i.i.d. standard Gaussian ζ.
///
/// Deterministic for a fixed seed: shards derive their streams from the
/// master seed by index and partial sums are reduced in shard order, so the
/// result is bit-identical regardless of thread count.
pub fn simulate_mc(kernel: &KernelMatrix, a: &[f64], paths: usize, seed: u64) -> Result<Vec<f64>> {
    let n = kernel.n();
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    if paths == 0 {
        return Err(Error::InvalidParameter("paths must be at least 1".into()));
    }
    let shards = paths.div_ceil(MC_SHARD);
    let partials: Vec<Vec<f64>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64 + 1);
            let count = MC_SHARD.min(paths - shard * MC_SHARD);
            let mut acc = vec![0.0; n];
            let mut zeta = vec![0.0; n];
            for _ in 0..count {
                for z in zeta.iter_mut() {
                    *z = StandardNormal.sample(&mut rng);
                }
                for (t, acc_t) in acc.iter_mut().enumerate() {
                    let row = kernel.row(t);
                    let mut diff = 0.0;
                    for ((k, coef), z) in row.iter().zip(a).zip(&zeta) {
                        diff += (k - coef) * z;
                    }
                    *acc_t += diff * diff;
                }
            }
            acc
        })
        .collect();

    let mut mean = vec![0.0; n];
    for part in &partials {
        for (m, p) in mean.iter_mut().zip(part) {
            *m += p;
        }
    }
    for m in mean.iter_mut() {
        *m /= paths as f64;
    }
    Ok(mean)
}
