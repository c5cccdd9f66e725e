//! The Volterra kernel of fractional Brownian motion for Hurst index
//! `H ∈ (1/2, 1)`:
//!
//! ```text
//! K(t,s) = C_α s^{-α} ∫_s^t u^α (u-s)^{α-1} du,   0 < s < t ≤ 1,  α = H - 1/2,
//! C_α    = α ((2α+1) Γ(1-α) / (Γ(α+1) Γ(1-2α)))^{1/2}.
//! ```
//!
//! The integrand has an integrable singularity at `u = s`. Substituting
//! `w = (u-s)^α` turns it into the uniformly smooth
//! `(1/α)(s + w^{1/α})^α` on `[0, (t-s)^α]`, which adaptive Gauss panels
//! integrate to absolute tolerance without special functions.
//!
//! `K(t, 0)` is left undefined for `t > 0` (`s^{-α}` diverges); every
//! consumer integrates against `s` and never needs the value at zero.

use crate::gamma::gamma;
use crate::quad;
use crate::{Error, Result};

/// Default absolute tolerance for kernel quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Validated kernel parameters for one Hurst index.
///
/// Immutable after construction and safe to share across threads; grid
/// evaluations may be parallelized freely.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KernelParams {
    h: f64,
    alpha: f64,
    c_alpha: f64,
    quad_tol: f64,
}

/// Normalizing constant `C_α` for `α = H - 1/2`.
///
/// The gamma factors are evaluated to relative error below 1e-12, which
/// dominates no downstream tolerance.
pub fn c_alpha(h: f64) -> Result<f64> {
    check_hurst(h)?;
    let a = h - 0.5;
    Ok(a * ((2.0 * a + 1.0) * gamma(1.0 - a) / (gamma(a + 1.0) * gamma(1.0 - 2.0 * a))).sqrt())
}

/// Covariance `E[B_t B_u] = (t^{2H} + u^{2H} - |t-u|^{2H}) / 2` of fractional
/// Brownian motion.
pub fn fbm_covariance(h: f64, t: f64, u: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidParameter(format!(
            "covariance arguments must lie in [0, 1], got t = {t}, u = {u}"
        )));
    }
    let p = 2.0 * h;
    Ok(0.5 * (t.powf(p) + u.powf(p) - (t - u).abs().powf(p)))
}

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::InvalidHurst(h));
    }
    Ok(())
}

impl KernelParams {
    /// Parameters for Hurst index `h`, with the default quadrature tolerance.
    pub fn new(h: f64) -> Result<Self> {
        Self::with_quad_tol(h, DEFAULT_QUAD_TOL)
    }

    /// Parameters with an explicit absolute quadrature tolerance.
    pub fn with_quad_tol(h: f64, quad_tol: f64) -> Result<Self> {
        if !(quad_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerance must be positive, got {quad_tol}"
            )));
        }
        let c = c_alpha(h)?;
        Ok(Self { h, alpha: h - 0.5, c_alpha: c, quad_tol })
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// Kernel value `K(t,s)` to absolute accuracy `quad_tol`.
    ///
    /// Returns 0 on the diagonal `s = t`. Errors if `s > t`, either argument
    /// leaves `[0, 1]`, or `s = 0 < t` where the kernel is undefined.
    pub fn eval_k(&self, t: f64, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&s) || s > t {
            return Err(Error::KernelDomain { t, s });
        }
        if s == t {
            return Ok(0.0);
        }
        if s == 0.0 {
            return Err(Error::KernelDomain { t, s });
        }
        let a = self.alpha;
        let prefactor = self.c_alpha * s.powf(-a) / a;
        let upper = (t - s).powf(a);
        // The substituted integral is resolved to quad_tol; the kernel value
        // inherits the error scaled by the prefactor, which is O(1) away
        // from s = 0 and harmless under the outer integrals near it.
        let integral = quad::integrate(|w| (s + w.powf(1.0 / a)).powf(a), 0.0, upper, self.quad_tol)?;
        Ok(prefactor * integral)
    }

    /// `∫_0^t K(t,s)² ds`, which equals `t^{2H}` (the variance of `B_t`).
    ///
    /// The integrand behaves like `s^{-2α}` near zero; the adaptive panels
    /// absorb that. Used as a cross-check, not on any hot path.
    pub fn row_norm_sq(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "time must lie in [0, 1], got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        quad::integrate_fallible(|s| Ok(self.eval_k(t, s)?.powi(2)), 0.0, t, self.outer_tol())
    }

    /// Residual of the increment-variance identity
    ///
    /// ```text
    /// ∫_0^t (K(1,s) - K(t,s))² ds + ∫_t^1 K(1,s)² ds = (1-t)^{2H},
    /// ```
    ///
    /// i.e. the quadrature left-hand side minus the closed form. The identity
    /// is `E(B_1 - B_t)²` written through the Volterra representation.
    pub fn increment_identity_residual(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "time must lie in [0, 1], got {t}"
            )));
        }
        let tol = self.outer_tol();
        let head = if t == 0.0 {
            0.0
        } else {
            quad::integrate_fallible(
                |s| {
                    let k1 = self.eval_k(1.0, s)?;
                    let kt = if s >= t { 0.0 } else { self.eval_k(t, s)? };
                    Ok((k1 - kt).powi(2))
                },
                0.0,
                t,
                tol,
            )?
        };
        let tail =
            quad::integrate_fallible(|s| Ok(self.eval_k(1.0, s)?.powi(2)), t, 1.0, tol)?;
        Ok(head + tail - (1.0 - t).powf(2.0 * self.h))
    }

    /// Tolerance for the outer integrals over `s`: two orders looser than the
    /// kernel tolerance, still well inside the 1e-6 the identity checks use.
    fn outer_tol(&self) -> f64 {
        (self.quad_tol * 100.0).min(1e-7)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Arbitrary-precision reference values for the normalizing constant.
    const C_ALPHA_075: f64 = 0.267_411_158_757_997_58;
    const C_ALPHA_09: f64 = 0.324_488_259_257_341_01;

    // Dense Riemann-sum oracle (1e7 midpoint nodes on the substituted
    // integrand) for K(1, 0.5) at H = 0.75; an arbitrary-precision quadrature
    // agrees to 2e-15.
    const K_1_05_H075: f64 = 0.937_591_963_698_055_6;

    #[test]
    fn c_alpha_rejects_boundary_hurst() {
        assert!(matches!(c_alpha(0.5), Err(Error::InvalidHurst(_))));
        assert!(matches!(c_alpha(1.0), Err(Error::InvalidHurst(_))));
        assert!(matches!(c_alpha(0.3), Err(Error::InvalidHurst(_))));
    }

    #[test]
    fn c_alpha_matches_reference_values() {
        assert_relative_eq!(c_alpha(0.75).unwrap(), C_ALPHA_075, max_relative = 1e-12);
        assert_relative_eq!(c_alpha(0.9).unwrap(), C_ALPHA_09, max_relative = 1e-12);
    }

    #[test]
    fn kernel_vanishes_on_diagonal() {
        let p = KernelParams::new(0.75).unwrap();
        for t in [0.0, 0.3, 0.7, 1.0] {
            assert_eq!(p.eval_k(t, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn kernel_matches_riemann_oracle() {
        let p = KernelParams::new(0.75).unwrap();
        assert_abs_diff_eq!(p.eval_k(1.0, 0.5).unwrap(), K_1_05_H075, epsilon = 1e-9);
    }

    #[test]
    fn kernel_self_similar_under_scaling() {
        // K(ct, cs) = c^α K(t, s); c = 0.5 halves both arguments.
        let p = KernelParams::new(0.75).unwrap();
        let lhs = p.eval_k(1.0, 0.4).unwrap();
        let rhs = 2f64.powf(p.alpha()) * p.eval_k(0.5, 0.2).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 2.0 * p.quad_tol());
    }

    #[test]
    fn kernel_domain_errors() {
        let p = KernelParams::new(0.75).unwrap();
        assert!(matches!(p.eval_k(0.5, 0.6), Err(Error::KernelDomain { .. })));
        assert!(matches!(p.eval_k(1.2, 0.5), Err(Error::KernelDomain { .. })));
        assert!(matches!(p.eval_k(0.5, -0.1), Err(Error::KernelDomain { .. })));
        // Undefined at s = 0 for t > 0.
        assert!(matches!(p.eval_k(0.5, 0.0), Err(Error::KernelDomain { .. })));
    }

    #[test]
    fn covariance_basics() {
        for h in [0.6, 0.75, 0.9] {
            for t in [0.2, 0.5, 1.0] {
                assert_relative_eq!(
                    fbm_covariance(h, t, t).unwrap(),
                    t.powf(2.0 * h),
                    max_relative = 1e-14
                );
            }
        }
        // Telescoping cancellation: cov(1, 0.5) = 1/2 for every H.
        assert_abs_diff_eq!(fbm_covariance(0.75, 1.0, 0.5).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn nested_kernel_quadrature_reproduces_covariance() {
        let p = KernelParams::new(0.7).unwrap();
        let nested = crate::quad::integrate(
            |s| p.eval_k(1.0, s).unwrap() * p.eval_k(0.5, s).unwrap(),
            0.0,
            0.5,
            1e-8,
        )
        .unwrap();
        let cov = fbm_covariance(0.7, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(nested, cov, epsilon = 1e-6);
    }

    #[test]
    fn increment_identity_residual_degenerate_endpoints() {
        let p = KernelParams::new(0.7).unwrap();
        assert_abs_diff_eq!(p.increment_identity_residual(1.0).unwrap(), 0.0, epsilon = 1e-6);
        // At t = 0 the identity reduces to ∫_0^1 K(1,s)² ds = 1.
        assert_abs_diff_eq!(p.increment_identity_residual(0.0).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn increment_identity_residual_interior() {
        let p = KernelParams::new(0.7).unwrap();
        assert_abs_diff_eq!(p.increment_identity_residual(0.5).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn kernel_monotone_and_nonnegative_on_grid() {
        // Increasing in t for fixed s, decreasing in s for fixed t,
        // nonnegative throughout; 50 x 50 grid.
        let p = KernelParams::new(0.8).unwrap();
        let n = 50;
        let mut values = vec![vec![f64::NAN; n + 1]; n + 1];
        for i in 1..=n {
            let t = i as f64 / n as f64;
            for j in 1..=i {
                let s = j as f64 / n as f64;
                values[i][j] = p.eval_k(t, s).unwrap();
                assert!(values[i][j] >= 0.0);
            }
        }
        let slack = 1e-9;
        for i in 2..=n {
            for j in 1..i {
                assert!(
                    values[i][j] >= values[i - 1][j] - slack,
                    "not increasing in t at i={i}, j={j}"
                );
            }
        }
        for i in 2..=n {
            for j in 2..=i {
                assert!(
                    values[i][j] <= values[i][j - 1] + slack,
                    "not decreasing in s at i={i}, j={j}"
                );
            }
        }
    }

    #[test]
    fn quadrature_tolerance_is_honored() {
        // Halving the tolerance must move the value by at most the previous
        // tolerance.
        for (t, s) in [(1.0, 0.5), (0.9, 0.05), (0.41, 0.4)] {
            let mut tol = 1e-6;
            let mut prev = KernelParams::with_quad_tol(0.8, tol).unwrap().eval_k(t, s).unwrap();
            for _ in 0..4 {
                tol *= 0.5;
                let next = KernelParams::with_quad_tol(0.8, tol).unwrap().eval_k(t, s).unwrap();
                assert!((next - prev).abs() <= 2.0 * tol, "t={t}, s={s}, tol={tol}");
                prev = next;
            }
        }
    }
}
