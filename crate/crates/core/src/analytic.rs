//! A separable kernel with a known minimax value and an infinite minimizer
//! set, used as an end-to-end analytic regression for the solver.
//!
//! The kernel is `K(t,s) = g(t) h(s)` with piecewise-linear factors
//!
//! ```text
//! g: 0 on [0,1/3], up to 1 at 1/2, down to -1 at 5/6, up to 0 at 1,
//! h: 0 at 0, up to 1 at 1/4, down to 0 at 1/2, zero beyond.
//! ```
//!
//! Since `∫_0^t h² = 1/6` for every `t ≥ 1/2` while `g(1/2) = 1` and
//! `g(5/6) = -1`, the minimax value is exactly `1/6`, and a function is a
//! minimizer iff it vanishes a.e. on `[0, 5/6]` and satisfies
//! `∫_{5/6}^t a² ≤ 1/6 - 6(1-t)²` on `(5/6, 1]`.

use crate::discrete::KernelMatrix;
use crate::{Error, Result};

/// Piecewise-linear function given by sorted `(x, value)` breakpoints.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    breakpoints: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidParameter("need at least two breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter(
                "breakpoint abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Linear interpolation; errors outside the breakpoint span.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let first = self.breakpoints[0];
        let last = self.breakpoints[self.breakpoints.len() - 1];
        if x < first.0 || x > last.0 {
            return Err(Error::InvalidParameter(format!(
                "argument {x} outside [{}, {}]",
                first.0, last.0
            )));
        }
        let idx = self.breakpoints.partition_point(|&(bx, _)| bx <= x);
        if idx == self.breakpoints.len() {
            return Ok(last.1);
        }
        let (x0, y0) = self.breakpoints[idx - 1];
        let (x1, y1) = self.breakpoints[idx];
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// The separable kernel `K(t,s) = g(t) h(s)`.
#[derive(Debug, Clone)]
pub struct ProductKernel {
    g: PiecewiseLinear,
    h: PiecewiseLinear,
}

impl ProductKernel {
    /// The standard instance with minimax value exactly 1/6.
    pub fn standard() -> Self {
        let third = 1.0 / 3.0;
        let five_sixths = 5.0 / 6.0;
        Self {
            g: PiecewiseLinear::new(vec![
                (0.0, 0.0),
                (third, 0.0),
                (0.5, 1.0),
                (five_sixths, -1.0),
                (1.0, 0.0),
            ])
            .expect("valid breakpoints"),
            h: PiecewiseLinear::new(vec![(0.0, 0.0), (0.25, 1.0), (0.5, 0.0), (1.0, 0.0)])
                .expect("valid breakpoints"),
        }
    }

    pub fn g(&self) -> &PiecewiseLinear {
        &self.g
    }

    pub fn h(&self) -> &PiecewiseLinear {
        &self.h
    }

    /// `K(t,s) = g(t) h(s)`; errors outside the unit square.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.g.eval(t)? * self.h.eval(s)?)
    }
}

/// Midpoint-rule discretization of an arbitrary bounded kernel into a matrix
/// the solver consumes: `k_ij = K(i/N, (j-1/2)/N) · N^{-1/2}` for `j ≤ i`
/// (one-based), so that the discrete objective
/// `Σ_{s≤t} (k_ts - a_s)²` approximates `∫_0^t (K(t,s) - â(s))² ds` with
/// `â(s_j) = √N a_j`.
pub fn discretize_kernel(kernel: impl Fn(f64, f64) -> f64, n: usize) -> Result<KernelMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    let nf = n as f64;
    let scale = nf.powf(-0.5);
    Ok(KernelMatrix::from_fn(n, |t, s| {
        kernel((t + 1) as f64 / nf, (s as f64 + 0.5) / nf) * scale
    }))
}

/// Discrete solver output rescaled to the continuous sampling convention of
/// [`discretize_kernel`]: `â(s_j) = √N a_j` at `s_j = (j - 1/2)/N`.
pub fn to_continuous_scale(a: &[f64]) -> Vec<f64> {
    let scale = (a.len() as f64).sqrt();
    a.iter().map(|v| v * scale).collect()
}

/// Membership test for the minimizer set of the standard product kernel.
///
/// Takes continuous-scale samples `a(s_j)` at the midpoints
/// `s_j = (j - 1/2)/N` and checks, within the discretization tolerance
/// `10/N`:
///
/// 1. `a = 0` on `[0, 5/6]`,
/// 2. `∫_{5/6}^t a² ds ≤ 1/6 - 6(1-t)²` for every grid `t ∈ (5/6, 1]`.
pub fn minimizer_set_check(a: &[f64]) -> bool {
    let n = a.len();
    if n == 0 {
        return false;
    }
    let nf = n as f64;
    let tol = 10.0 / nf;
    let boundary = 5.0 / 6.0;

    for (j, &v) in a.iter().enumerate() {
        let s = (j as f64 + 0.5) / nf;
        if s <= boundary && v.abs() > tol {
            return false;
        }
    }

    let mut acc = 0.0;
    for (i, &v) in a.iter().enumerate() {
        let t = (i + 1) as f64 / nf;
        if t <= boundary {
            continue;
        }
        let s_mid = (i as f64 + 0.5) / nf;
        if s_mid > boundary {
            acc += v * v / nf;
        }
        let budget = 1.0 / 6.0 - 6.0 * (1.0 - t).powi(2);
        if acc > budget + tol {
            return false;
        }
    }
    true
}
