//! Deterministic time functions of the model: the seasonal level, the seasonal
//! volatility and the exponential-kernel integrals built on them.
//!
//! Time is measured in days and the annual period is fixed at 365 days.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

pub const YEAR_DAYS: f64 = 365.0;
/// Angular frequency of the annual harmonic, per day.
pub const OMEGA: f64 = 2.0 * PI / YEAR_DAYS;

/// Smallest admissible volatility on the working horizon.
pub const VOL_MARGIN: f64 = 1e-9;

const QUAD_TOL: Tolerance = Tolerance { abs: 1e-12, rel: 1e-13 };
const QUAD_BUDGET: usize = 1 << 20;

/// `k0 + k1·t + k2·sin(ωt) + k3·cos(ωt)`, with ω = 2π/365.
///
/// Used both for the seasonal mean level and for the volatility.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FourCoeffs {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl FourCoeffs {
    pub const fn new(k0: f64, k1: f64, k2: f64, k3: f64) -> Self {
        Self { k0, k1, k2, k3 }
    }

    pub const fn constant(k0: f64) -> Self {
        Self::new(k0, 0.0, 0.0, 0.0)
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|c| *c == 0.0)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.k0, self.k1, self.k2, self.k3]
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_array(self.as_array().map(|c| c * factor))
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (s, c) = (OMEGA * t).sin_cos();
        self.k0 + self.k1 * t + self.k2 * s + self.k3 * c
    }

    /// Regressors `[1, t, sin ωt, cos ωt]`.
    pub fn basis(t: f64) -> [f64; 4] {
        let (s, c) = (OMEGA * t).sin_cos();
        [1.0, t, s, c]
    }

    /// Volatility admissibility: strictly positive on a one-day grid over
    /// `[0, horizon]`. Identically zero coefficients are accepted as the
    /// noiseless model.
    pub fn check_volatility(&self, horizon: f64) -> Result<()> {
        if self.is_zero() {
            return Ok(());
        }
        let days = horizon.max(0.0).ceil() as usize;
        for d in 0..=days {
            let t = (d as f64).min(horizon.max(0.0));
            let v = self.eval(t);
            if !(v > VOL_MARGIN) {
                return Err(Error::InvalidParameter(format!(
                    "volatility {v:.6e} is not positive at t = {t} (horizon {horizon})"
                )));
            }
        }
        Ok(())
    }
}

/// Orientation of the exponential kernel in [`quad_exp_kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `e^{−α(t−u)}`
    Decaying,
    /// `e^{αu}`
    Growing,
}

/// Adaptive quadrature of `∫₀ᵗ f(u)·kernel(u) du`.
pub fn quad_exp_kernel<F>(f: F, alpha: f64, t: f64, kernel: Kernel) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if t <= 0.0 {
        return Ok(0.0);
    }
    let integrand = |u: f64| -> Result<f64> {
        let w = match kernel {
            Kernel::Decaying => (-alpha * (t - u)).exp(),
            Kernel::Growing => (alpha * u).exp(),
        };
        Ok(f(u) * w)
    };
    Ok(quad::integrate(integrand, 0.0, t, QUAD_TOL, QUAD_BUDGET)?.value)
}

/// `K₁(t, α) = ∫₀ᵗ s_u e^{−α(t−u)} du` in closed form.
pub fn k1(t: f64, alpha: f64, seasonal: &FourCoeffs) -> Result<f64> {
    check_alpha(alpha)?;
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    Ok(decaying_integral(seasonal, alpha, t))
}

/// `K₂(α, T) = ∫₀ᵀ σ_u e^{αu} du` in closed form.
pub fn k2(horizon: f64, alpha: f64, vol: &FourCoeffs) -> Result<f64> {
    check_alpha(alpha)?;
    if horizon < 0.0 {
        return Err(Error::InvalidParameter(format!("horizon must be nonnegative, got {horizon}")));
    }
    vol.check_volatility(horizon)?;
    let value = (alpha * horizon).exp() * decaying_integral(vol, alpha, horizon);
    if !value.is_finite() {
        return Err(Error::Numerical(format!("K2 overflows at alpha·T = {}", alpha * horizon)));
    }
    Ok(value)
}

/// `e^{−αT} K₂(α, T) = ∫₀ᵀ σ_u e^{−α(T−u)} du`; finite for any horizon.
pub fn k2_discounted(horizon: f64, alpha: f64, vol: &FourCoeffs) -> Result<f64> {
    check_alpha(alpha)?;
    vol.check_volatility(horizon)?;
    Ok(decaying_integral(vol, alpha, horizon.max(0.0)))
}

/// Deterministic part of `T_t`: `e^{−αt}T₀ + αK₁(t, α)`.
pub fn deterministic_level(t: f64, alpha: f64, t0: f64, seasonal: &FourCoeffs) -> f64 {
    (-alpha * t).exp() * t0 + alpha * decaying_integral(seasonal, alpha, t)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mean-reversion rate must be positive, got {alpha}")))
    }
}

/// `∫₀ᵗ c(u) e^{−α(t−u)} du` for the linear-plus-harmonic function `c`,
/// assembled from the four elementary integrals.
pub(crate) fn decaying_integral(c: &FourCoeffs, alpha: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = alpha * t;
    let one_minus_exp = -(-x).exp_m1();
    let constant = one_minus_exp / alpha;
    let linear = phi2(x) / (alpha * alpha);

    let wt = OMEGA * t;
    let (s, co) = wt.sin_cos();
    let denom = alpha * alpha + OMEGA * OMEGA;
    let half_sin = (0.5 * wt).sin();
    let one_minus_cos = 2.0 * half_sin * half_sin;
    // α sin ωt − ω cos ωt + ω e^{−αt}
    let sine = (if wt < 0.5 && x < 0.5 {
        alpha * sin_minus_arg(wt) + OMEGA * phi2(x) + OMEGA * one_minus_cos
    } else {
        alpha * s - OMEGA * co + OMEGA * (-x).exp()
    }) / denom;
    // α cos ωt + ω sin ωt − α e^{−αt}
    let cosine = (OMEGA * s - alpha * one_minus_cos + alpha * one_minus_exp) / denom;

    c.k0 * constant + c.k1 * linear + c.k2 * sine + c.k3 * cosine
}

/// `y − 1 + e^{−y}` without cancellation for small `y`.
fn phi2(y: f64) -> f64 {
    if y.abs() < 0.2 {
        let mut term = y * y / 2.0;
        let mut sum: f64 = 0.0;
        let mut n = 2.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += term;
            n += 1.0;
            term *= -y / n;
        }
        sum
    } else {
        y - 1.0 + (-y).exp()
    }
}

/// `sin x − x` without cancellation for small `x`.
fn sin_minus_arg(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term = -x * x * x / 6.0;
        let mut sum: f64 = 0.0;
        let mut n = 3.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += term;
            term *= -x * x / ((n + 1.0) * (n + 2.0));
            n += 2.0;
        }
        sum
    } else {
        x.sin() - x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FITTED: FourCoeffs = FourCoeffs::new(7.9733, 0.0008223, -5.8796, -12.866);

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(FourCoeffs::constant(1.0).eval(17.0), 1.0);
        let c = FourCoeffs::new(1.5, -2.0, 3.0, 4.5);
        assert_eq!(c.eval(0.0), 1.5 + 4.5);
        assert!((FITTED.eval(0.0) - (-4.8927)).abs() < 1e-12);
    }

    #[test]
    fn k1_empty_integral_and_constant() {
        assert_eq!(k1(0.0, 0.3, &FITTED).unwrap(), 0.0);
        let (b0, a, t) = (4.2, 0.17, 23.0);
        let v = k1(t, a, &FourCoeffs::constant(b0)).unwrap();
        assert!(close(v, b0 * (1.0 - (-a * t).exp()) / a, 1e-14));
    }

    #[test]
    fn k1_matches_quadrature() {
        let c = FourCoeffs::new(1.0, 1.0, 1.0, 1.0);
        let exact = k1(30.0, 0.2, &c).unwrap();
        let q = quad_exp_kernel(|u| c.eval(u), 0.2, 30.0, Kernel::Decaying).unwrap();
        assert!(close(exact, q, 1e-10), "{exact} vs {q}");
    }

    #[test]
    fn k1_rejects_nonpositive_alpha() {
        assert!(k1(1.0, 0.0, &FITTED).is_err());
        assert!(k1(1.0, -1.0, &FITTED).is_err());
    }

    #[test]
    fn k2_examples() {
        assert_eq!(k2(0.0, 0.4, &FourCoeffs::constant(2.0)).unwrap(), 0.0);
        let (c0, a, t) = (2.5, 0.1, 40.0);
        let v = k2(t, a, &FourCoeffs::constant(c0)).unwrap();
        assert!(close(v, c0 * ((a * t).exp() - 1.0) / a, 1e-13));

        let vol = FourCoeffs::new(2.0, 0.001, 0.5, 0.5);
        let exact = k2(60.0, 0.25, &vol).unwrap();
        let q = quad_exp_kernel(|u| vol.eval(u), 0.25, 60.0, Kernel::Growing).unwrap();
        assert!(close(exact, q, 1e-10), "{exact} vs {q}");
    }

    #[test]
    fn k2_rejects_nonpositive_volatility() {
        let vol = FourCoeffs::new(0.2, 0.0, 0.5, 0.0);
        assert!(k2(300.0, 0.2, &vol).is_err());
        assert!(k2(150.0, 0.2, &vol).is_ok());
        assert!(k2(10.0, 0.0, &FourCoeffs::constant(1.0)).is_err());
    }

    #[test]
    fn quadrature_examples() {
        assert_eq!(quad_exp_kernel(|_| 0.0, 0.5, 10.0, Kernel::Decaying).unwrap(), 0.0);
        let (a, t) = (0.3, 7.0);
        let v = quad_exp_kernel(|_| 1.0, a, t, Kernel::Decaying).unwrap();
        assert!(close(v, (1.0 - (-a * t).exp()) / a, 1e-13));
        let v = quad_exp_kernel(|u| u, 1.0, 1.0, Kernel::Growing).unwrap();
        assert!(close(v, 1.0, 1e-13));
    }

    #[test]
    fn small_time_is_stable() {
        let c = FourCoeffs::new(0.0, 0.0, 1.0, 0.0);
        for &t in &[1e-6, 1e-3, 0.1] {
            let exact = decaying_integral(&c, 0.01, t);
            let q = quad_exp_kernel(|u| c.eval(u), 0.01, t, Kernel::Decaying).unwrap();
            assert!(close(exact, q, 1e-9), "t={t}: {exact} vs {q}");
        }
    }
}
