//! Fourier-cosine (COS) density expansion and strangle pricing on the CAT
//! index.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfun::{self, CatMode, ModelParams};
use crate::error::{Error, Result};
use crate::seasonal;

pub const DEFAULT_TERMS: usize = 256;
pub const DEFAULT_L_MULT: f64 = 10.0;
const TAIL_WARNING: f64 = 1e-8;

/// Truncation interval `[b1, b2]` and the number of terms of each leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosGrid {
    pub b1: f64,
    pub b2: f64,
    pub n1: usize,
    pub n2: usize,
}

impl CosGrid {
    pub fn new(b1: f64, b2: f64, n1: usize, n2: usize) -> Result<Self> {
        let g = Self { b1, b2, n1, n2 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b1 < self.b2) || !self.b1.is_finite() || !self.b2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "truncation interval needs b1 < b2, got [{}, {}]",
                self.b1, self.b2
            )));
        }
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidParameter("term counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.b2 - self.b1
    }

    fn frequency(&self, k: usize) -> f64 {
        k as f64 * PI / self.width()
    }
}

/// Strangle on the CAT index: `d₁(ξ − K₁)⁺ + d₂(K₂ − ξ)⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    /// Accrual period in days.
    pub horizon_t: u32,
    pub k1_strike: f64,
    pub k2_strike: f64,
    /// Call tick size (currency per index unit).
    pub d1: f64,
    /// Put tick size.
    pub d2: f64,
    /// Interest rate per year.
    pub rate_r: f64,
}

impl ContractSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_t == 0 {
            return Err(Error::InvalidParameter("contract horizon must be at least one day".into()));
        }
        if !(self.k1_strike >= self.k2_strike) || !self.k1_strike.is_finite() || !self.k2_strike.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "strikes need K1 >= K2, got K1 = {}, K2 = {}",
                self.k1_strike, self.k2_strike
            )));
        }
        if !(self.d1 >= 0.0 && self.d2 >= 0.0) {
            return Err(Error::InvalidParameter("tick sizes must be nonnegative".into()));
        }
        if !(self.rate_r >= 0.0 && self.rate_r.is_finite()) {
            return Err(Error::InvalidParameter("interest rate must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn discount(&self) -> f64 {
        (-self.rate_r * self.horizon_t as f64 / seasonal::YEAR_DAYS).exp()
    }

    pub fn payoff(&self, cat: f64) -> f64 {
        self.d1 * (cat - self.k1_strike).max(0.0) + self.d2 * (self.k2_strike - cat).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub value: f64,
    /// Payoff support does not intersect the truncation interval.
    pub clamped: bool,
}

/// `(mean ∓ l·√variance)`.
pub fn truncation_bounds(mean: f64, variance: f64, l_mult: f64) -> Result<(f64, f64)> {
    if variance < 0.0 || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!("variance must be >= 0, got {variance}")));
    }
    if l_mult < 0.0 {
        return Err(Error::InvalidParameter(format!("l_mult must be >= 0, got {l_mult}")));
    }
    let half = l_mult * variance.sqrt();
    Ok((mean - half, mean + half))
}

/// `A_k = 2/(b₂−b₁)·Re[e^{−ikπb₁/(b₂−b₁)} φ(kπ/(b₂−b₁))]` for `k = 0..=count`.
/// `A_0` is stored unhalved.
pub fn cos_coefficients<F>(charfun_at: F, grid: &CosGrid, count: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    grid.validate()?;
    let at_zero = charfun_at(0.0)?;
    if (at_zero - 1.0).norm() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "characteristic function at 0 is {at_zero}, expected 1"
        )));
    }
    let scale = 2.0 / grid.width();
    (0..=count)
        .into_par_iter()
        .map(|k| {
            let u = grid.frequency(k);
            let phase = Complex64::new(0.0, -u * grid.b1).exp();
            Ok(scale * (phase * charfun_at(u)?).re)
        })
        .collect()
}

/// Same as [`cos_coefficients`] but from a log characteristic function, so the
/// shift by `b₁` is applied to the exponent before exponentiation.
pub fn cos_coefficients_from_log<F>(log_charfun: F, grid: &CosGrid, count: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    grid.validate()?;
    let scale = 2.0 / grid.width();
    (0..=count)
        .into_par_iter()
        .map(|k| {
            let u = grid.frequency(k);
            let exponent = log_charfun(u)? - Complex64::new(0.0, u * grid.b1);
            Ok(scale * exponent.exp().re)
        })
        .collect()
}

/// `(ψ_k, χ_k) = (∫ cos(kπ(x−b₁)/(b₂−b₁)) dx, ∫ x·cos(kπ(x−b₁)/(b₂−b₁)) dx)`
/// over `[lower, upper]`.
pub fn payoff_cos_integrals(k: usize, grid: &CosGrid, lower: f64, upper: f64) -> Result<(f64, f64)> {
    if lower > upper {
        return Err(Error::InvalidParameter(format!("lower {lower} exceeds upper {upper}")));
    }
    let (psi, chi_shifted) = shifted_integrals(k, grid, lower, upper);
    Ok((psi, chi_shifted + grid.b1 * psi))
}

/// `ψ_k` and `∫ (x − b₁) cos(...) dx`, computed in the shifted variable to
/// avoid cancellation when `b₁` is large.
fn shifted_integrals(k: usize, grid: &CosGrid, lower: f64, upper: f64) -> (f64, f64) {
    let (c, d) = (lower - grid.b1, upper - grid.b1);
    if k == 0 {
        return (d - c, 0.5 * (d * d - c * c));
    }
    let w = grid.frequency(k);
    let (sd, cd) = (w * d).sin_cos();
    let (sc, cc) = (w * c).sin_cos();
    let psi = (sd - sc) / w;
    let chi = (d * sd - c * sc) / w + (cd - cc) / (w * w);
    (psi, chi)
}

/// Payoff-weighted sum over precomputed coefficients.
pub fn leg_from_coefficients(
    coeffs: &[f64],
    grid: &CosGrid,
    strike: f64,
    kind: LegKind,
    terms: usize,
) -> Result<Leg> {
    grid.validate()?;
    if terms == 0 || coeffs.len() < terms + 1 {
        return Err(Error::InvalidParameter(format!(
            "need {} coefficients, have {}",
            terms + 1,
            coeffs.len()
        )));
    }
    let (lower, upper) = match kind {
        LegKind::Call => (grid.b1.max(strike), grid.b2),
        LegKind::Put => (grid.b1, grid.b2.min(strike)),
    };
    if lower >= upper {
        return Ok(Leg { value: 0.0, clamped: true });
    }
    let offset = grid.b1 - strike;
    let sign = match kind {
        LegKind::Call => 1.0,
        LegKind::Put => -1.0,
    };
    let mut sum = 0.0;
    for (k, a) in coeffs.iter().take(terms + 1).enumerate() {
        let (psi, chi) = shifted_integrals(k, grid, lower, upper);
        // ∫ (x − K) cos(...) = χ' + (b₁ − K)ψ
        let term = a * sign * (chi + offset * psi);
        sum += if k == 0 { 0.5 * term } else { term };
    }
    Ok(Leg { value: sum, clamped: false })
}

/// Undiscounted `E[(ξ − K)⁺]` (call) or `E[(K − ξ)⁺]` (put).
pub fn leg_value<F>(charfun_at: F, grid: &CosGrid, strike: f64, kind: LegKind, terms: usize) -> Result<Leg>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    let coeffs = cos_coefficients(charfun_at, grid, terms)?;
    leg_from_coefficients(&coeffs, grid, strike, kind, terms)
}

pub fn density_from_coefficients(coeffs: &[f64], grid: &CosGrid, x: f64) -> Result<f64> {
    if x < grid.b1 || x > grid.b2 {
        return Err(Error::InvalidParameter(format!(
            "x = {x} outside [{}, {}]",
            grid.b1, grid.b2
        )));
    }
    let y = (x - grid.b1) * PI / grid.width();
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| if k == 0 { 0.5 * a } else { a * (k as f64 * y).cos() })
        .sum())
}

/// Cosine-series density `Σ'_{k=0..terms} A_k cos(kπ(x−b₁)/(b₂−b₁))`.
pub fn density_from_charfun<F>(charfun_at: F, grid: &CosGrid, x: f64, terms: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    if x < grid.b1 || x > grid.b2 {
        return Err(Error::InvalidParameter(format!(
            "x = {x} outside [{}, {}]",
            grid.b1, grid.b2
        )));
    }
    let coeffs = cos_coefficients(charfun_at, grid, terms)?;
    density_from_coefficients(&coeffs, grid, x)
}

/// Truncation interval from the CAT cumulants under `Q^θ`.
pub fn auto_grid(
    p: &ModelParams,
    theta: f64,
    horizon_days: u32,
    l_mult: f64,
    n1: usize,
    n2: usize,
) -> Result<CosGrid> {
    let (mean, variance) = charfun::cat_cumulants(p, theta, horizon_days)?;
    let (b1, b2) = truncation_bounds(mean, variance, l_mult)?;
    if !(b1 < b2) {
        return Err(Error::InvalidParameter(
            "degenerate CAT law: zero variance leaves no truncation interval".into(),
        ));
    }
    CosGrid::new(b1, b2, n1, n2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub price: f64,
    /// Undiscounted `E[(ξ − K₁)⁺]`.
    pub call_leg: f64,
    /// Undiscounted `E[(K₂ − ξ)⁺]`.
    pub put_leg: f64,
    pub discount: f64,
    /// `Σ |A_k|` over the last 10% of terms.
    pub tail_mass: f64,
    pub warnings: Vec<String>,
}

/// Strangle price `e^{−rT/365}(d₁E(ξ−K₁)⁺ + d₂E(K₂−ξ)⁺)` under `Q^θ`, using the
/// exact-kernel CAT characteristic function.
pub fn price_strangle(
    contract: &ContractSpec,
    p: &ModelParams,
    theta: f64,
    grid: &CosGrid,
) -> Result<PriceReport> {
    price_strangle_with_mode(contract, p, theta, grid, CatMode::ExactKernel)
}

/// [`price_strangle`] with a choice of CAT characteristic function.
pub fn price_strangle_with_mode(
    contract: &ContractSpec,
    p: &ModelParams,
    theta: f64,
    grid: &CosGrid,
    mode: CatMode,
) -> Result<PriceReport> {
    contract.validate()?;
    grid.validate()?;
    let horizon = contract.horizon_t;
    let count = grid.n1.max(grid.n2);
    let coeffs = cos_coefficients_from_log(
        |u| charfun::cat_log_charfun(u, p, theta, horizon, mode),
        grid,
        count,
    )?;
    let mut warnings = Vec::new();
    let call = leg_from_coefficients(&coeffs, grid, contract.k1_strike, LegKind::Call, grid.n1)?;
    let put = leg_from_coefficients(&coeffs, grid, contract.k2_strike, LegKind::Put, grid.n2)?;
    if call.clamped {
        warnings.push("call strike at or above b2: call leg set to 0".into());
    }
    if put.clamped {
        warnings.push("put strike at or below b1: put leg set to 0".into());
    }
    let tail_start = count - count / 10;
    let tail_mass: f64 = coeffs[tail_start.max(1)..].iter().map(|a| a.abs()).sum();
    if tail_mass > TAIL_WARNING {
        warnings.push(format!("coefficient tail {tail_mass:.3e} exceeds {TAIL_WARNING:.0e}: expansion under-resolved"));
    }
    let discount = contract.discount();
    let price = discount * (contract.d1 * call.value + contract.d2 * put.value);
    Ok(PriceReport { price, call_leg: call.value, put_leg: put.value, discount, tail_mass, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{self, Tolerance};

    fn gaussian(u: f64) -> Result<Complex64> {
        Ok(Complex64::new(-0.5 * u * u, 0.0).exp())
    }

    fn std_grid(n: usize) -> CosGrid {
        CosGrid::new(-10.0, 10.0, n, n).unwrap()
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation_bounds(3.0, 4.0, 0.0).unwrap(), (3.0, 3.0));
        assert_eq!(truncation_bounds(0.0, 1.0, 10.0).unwrap(), (-10.0, 10.0));
        assert!(truncation_bounds(0.0, -1.0, 10.0).is_err());
        // Gaussian mass outside ±10σ.
        let tail = statrs::function::erf::erfc(10.0 / 2f64.sqrt());
        assert!(tail < 1e-20);
    }

    #[test]
    fn first_coefficient_is_normalisation() {
        let g = CosGrid::new(-3.0, 5.0, 8, 8).unwrap();
        let a = cos_coefficients(gaussian, &g, 4).unwrap();
        assert!((a[0] - 2.0 / 8.0).abs() < 1e-15);
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn gaussian_density_at_zero() {
        let f = density_from_charfun(gaussian, &std_grid(256), 0.0, 256).unwrap();
        assert!((f - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn modulation_shifts_density() {
        let shift = 1.7;
        let g = std_grid(256);
        let moved = CosGrid::new(g.b1 + shift, g.b2 + shift, 256, 256).unwrap();
        let a = cos_coefficients(gaussian, &g, 256).unwrap();
        let b = cos_coefficients(
            |u| Ok(gaussian(u)? * Complex64::new(0.0, u * shift).exp()),
            &moved,
            256,
        )
        .unwrap();
        for i in 0..50 {
            let x = -9.0 + 18.0 * i as f64 / 49.0;
            let fa = density_from_coefficients(&a, &g, x).unwrap();
            let fb = density_from_coefficients(&b, &moved, x + shift).unwrap();
            assert!((fa - fb).abs() < 1e-10);
        }
    }

    #[test]
    fn payoff_integral_examples() {
        let g = CosGrid::new(-2.0, 3.0, 4, 4).unwrap();
        assert_eq!(payoff_cos_integrals(5, &g, 0.7, 0.7).unwrap(), (0.0, 0.0));
        let (psi, chi) = payoff_cos_integrals(0, &g, 0.0, 1.0).unwrap();
        assert!((psi - 1.0).abs() < 1e-15 && (chi - 0.5).abs() < 1e-15);
        assert!(payoff_cos_integrals(1, &g, 1.0, 0.0).is_err());

        let (lo, hi) = (-0.4, 2.1);
        let (psi, chi) = payoff_cos_integrals(3, &g, lo, hi).unwrap();
        let w = 3.0 * PI / g.width();
        let tol = Tolerance::absolute(1e-14);
        let qpsi = quad::integrate(|x: f64| Ok((w * (x - g.b1)).cos()), lo, hi, tol, 1 << 16).unwrap();
        let qchi =
            quad::integrate(|x: f64| Ok(x * (w * (x - g.b1)).cos()), lo, hi, tol, 1 << 16).unwrap();
        assert!((psi - qpsi.value).abs() < 1e-12);
        assert!((chi - qchi.value).abs() < 1e-12);
    }

    #[test]
    fn gaussian_call_and_parity() {
        let g = std_grid(256);
        let call = leg_value(gaussian, &g, 0.0, LegKind::Call, 256).unwrap();
        assert!((call.value - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-6);
        let k = 0.6;
        let c = leg_value(gaussian, &g, k, LegKind::Call, 256).unwrap().value;
        let p = leg_value(gaussian, &g, k, LegKind::Put, 256).unwrap().value;
        assert!((c - p - (0.0 - k)).abs() < 1e-6);
    }

    #[test]
    fn empty_support_is_clamped() {
        let g = std_grid(64);
        let call = leg_value(gaussian, &g, 10.0, LegKind::Call, 64).unwrap();
        assert_eq!(call, Leg { value: 0.0, clamped: true });
        let put = leg_value(gaussian, &g, -12.0, LegKind::Put, 64).unwrap();
        assert!(put.clamped);
    }

    #[test]
    fn density_outside_interval_rejected() {
        assert!(density_from_charfun(gaussian, &std_grid(16), 10.5, 16).is_err());
    }

    #[test]
    fn density_normalisation_and_positivity() {
        let g = std_grid(256);
        let a = cos_coefficients(gaussian, &g, 256).unwrap();
        let n = 1024;
        let h = g.width() / (n - 1) as f64;
        let values: Vec<f64> = (0..n)
            .map(|i| density_from_coefficients(&a, &g, g.b1 + h * i as f64).unwrap())
            .collect();
        let trapezoid: f64 = values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
        assert!((trapezoid - 1.0).abs() < 1e-4);
        assert!(values.iter().cloned().fold(f64::INFINITY, f64::min) > -1e-6);
    }
}
