use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ingest::DailySeries;
use crate::error::{Error, Result};
use crate::seasonal::{decaying_integral, FourCoeffs, OMEGA};

/// Singular values below this fraction of the largest one (after column
/// scaling) mark the design as rank deficient.
const RANK_TOL: f64 = 1e-10;

pub const SEASONAL_NAMES: [&str; 4] = ["beta0", "beta1", "beta2", "beta3"];

/// Least-squares fit with the parameter covariance.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coef: DVector<f64>,
    /// `(XᵀX)⁻¹`, so the classical covariance is `sigma2 · xtx_inv`.
    pub xtx_inv: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub sigma2: f64,
    pub dof: usize,
}

/// Ordinary least squares through an SVD of the column-equilibrated design.
pub fn ols(design: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit> {
    let (n, p) = design.shape();
    if y.len() != n {
        return Err(Error::InvalidParameter(format!("design has {n} rows, response {}", y.len())));
    }
    if n <= p {
        return Err(Error::RankDeficient(format!("{n} observations for {p} coefficients")));
    }
    let norms: Vec<f64> = (0..p).map(|j| design.column(j).norm()).collect();
    if let Some(j) = norms.iter().position(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::RankDeficient(format!("regressor {j} is zero or non-finite")));
    }
    let mut scaled = design.clone();
    for (j, norm) in norms.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / norm);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficient(format!(
            "design condition number {:.3e} exceeds {:.0e}",
            smax / smin,
            1.0 / RANK_TOL
        )));
    }
    let u = svd.u.as_ref().expect("left singular vectors");
    let v_t = svd.v_t.as_ref().expect("right singular vectors");
    let yv = DVector::from_column_slice(y);
    let inv_s = svd.singular_values.map(|s| 1.0 / s);
    let scaled_coef = v_t.transpose() * (u.transpose() * &yv).component_mul(&inv_s);
    let unscale = DVector::from_iterator(p, norms.iter().map(|v| 1.0 / v));
    let coef = scaled_coef.component_mul(&unscale);
    let vs = v_t.transpose() * DMatrix::from_diagonal(&inv_s.map(|s| s * s)) * v_t;
    let xtx_inv = DMatrix::from_fn(p, p, |i, j| vs[(i, j)] * unscale[i] * unscale[j]);
    let fitted = design * &coef;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let dof = n - p;
    let sigma2 = residuals.iter().map(|r| r * r).sum::<f64>() / dof as f64;
    Ok(OlsFit { coef, xtx_inv, residuals, sigma2, dof })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientStat {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
}

impl CoefficientStat {
    /// Student-t inference with `dof` degrees of freedom.
    pub fn new(name: &str, estimate: f64, std_error: f64, dof: usize) -> Result<Self> {
        let t = StudentsT::new(0.0, 1.0, dof as f64)
            .map_err(|e| Error::Numerical(format!("student t({dof}): {e}")))?;
        let q = t.inverse_cdf(0.975);
        let t_stat = estimate / std_error;
        let p_value = if std_error > 0.0 { 2.0 * t.sf(t_stat.abs()) } else { 0.0 };
        Ok(Self {
            name: name.to_string(),
            estimate,
            std_error,
            t_stat,
            ci_low: estimate - q * std_error,
            ci_high: estimate + q * std_error,
            p_value,
        })
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub coefficients: Vec<CoefficientStat>,
    pub n: usize,
    pub residual_sd: f64,
    pub r_squared: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl FitReport {
    pub fn beta(&self) -> FourCoeffs {
        let e: Vec<f64> = self.coefficients.iter().map(|c| c.estimate).collect();
        FourCoeffs::new(e[0], e[1], e[2], e[3])
    }
}

fn seasonal_design(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, 4, |i, j| FourCoeffs::basis(i as f64)[j])
}

/// OLS of the daily values on `[1, t, sin ωt, cos ωt]`, `t` in days from the
/// first observation.
pub fn fit_seasonal(series: &DailySeries) -> Result<FitReport> {
    fit_seasonal_values(&series.values)
}

pub fn fit_seasonal_values(values: &[f64]) -> Result<FitReport> {
    let n = values.len();
    if n <= 4 {
        return Err(Error::InvalidParameter(format!("seasonal fit needs n > 4, got {n}")));
    }
    let fit = ols(&seasonal_design(n), values)?;
    let coefficients = (0..4)
        .map(|j| {
            let se = (fit.sigma2 * fit.xtx_inv[(j, j)]).sqrt();
            CoefficientStat::new(SEASONAL_NAMES[j], fit.coef[j], se, fit.dof)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = values.iter().sum::<f64>() / n as f64;
    let tss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let rss: f64 = fit.residuals.iter().map(|r| r * r).sum();
    Ok(FitReport {
        coefficients,
        n,
        residual_sd: fit.sigma2.sqrt(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        residuals: fit.residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub alpha_stderr: f64,
    pub rho: f64,
    pub rho_stderr: f64,
    pub intercept: f64,
}

/// AR(1) with intercept on the deseasonalized series: `α = −ln ρ` per day.
pub fn fit_alpha(residuals: &[f64]) -> Result<AlphaEstimate> {
    let n = residuals.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("AR(1) fit needs n >= 3, got {n}")));
    }
    let design = DMatrix::from_fn(n - 1, 2, |i, j| if j == 0 { 1.0 } else { residuals[i] });
    let fit = ols(&design, &residuals[1..])?;
    let rho = fit.coef[1];
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::NoMeanReversion(rho));
    }
    let rho_stderr = (fit.sigma2 * fit.xtx_inv[(1, 1)]).sqrt();
    Ok(AlphaEstimate {
        alpha: -rho.ln(),
        alpha_stderr: rho_stderr / rho,
        rho,
        rho_stderr,
        intercept: fit.coef[0],
    })
}

/// `ln(T_{j+1}/T_j)`; every value must be positive.
pub fn log_returns(series: &DailySeries) -> Result<Vec<f64>> {
    if let Some(i) = series.values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Domain(format!(
            "log-return undefined: value {} on {} is not positive",
            series.values[i], series.dates[i]
        )));
    }
    Ok(series.values.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Fit of the exact one-day transition
/// `T_{t+1} = e^{−α}T_t + Σ_k β_k x_k(t; α) + ε_t`, with
/// `x_k(t; α) = α∫₀¹ basis_k(t+v) e^{−α(1−v)} dv`.
///
/// The coefficients are those of the effective mean level: a noise with mean
/// `κ₁` per day and volatility `c` shifts them by `κ₁c/α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDynamicsFit {
    pub alpha: f64,
    pub alpha_stderr: f64,
    pub beta_effective: Vec<CoefficientStat>,
    /// Heteroskedasticity-robust covariance of `(α, β₀..β₃)`.
    pub covariance: Vec<Vec<f64>>,
    #[serde(skip)]
    pub innovations: Vec<f64>,
}

/// Per-day regressors for a transition starting at day `t`.
fn transition_regressors(t: f64, alpha: f64) -> [f64; 4] {
    let unit = |k| {
        let mut c = [0.0; 4];
        c[k] = 1.0;
        decaying_integral(&FourCoeffs::from_array(c), alpha, 1.0)
    };
    let (i_const, i_lin, i_sin, i_cos) = (unit(0), unit(1), unit(2), unit(3));
    let (s, c) = (OMEGA * t).sin_cos();
    [
        alpha * i_const,
        alpha * (t * i_const + i_lin),
        alpha * (s * i_cos + c * i_sin),
        alpha * (c * i_cos - s * i_sin),
    ]
}

fn transition_design(n: usize, alpha: f64) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, 4);
    for i in 0..n {
        let r = transition_regressors(i as f64, alpha);
        for j in 0..4 {
            x[(i, j)] = r[j];
        }
    }
    x
}

fn profile_rss(values: &[f64], alpha: f64) -> Result<(f64, OlsFit)> {
    let n = values.len() - 1;
    let decay = (-alpha).exp();
    let z: Vec<f64> = (0..n).map(|i| values[i + 1] - decay * values[i]).collect();
    let fit = ols(&transition_design(n, alpha), &z)?;
    let rss = fit.residuals.iter().map(|r| r * r).sum();
    Ok((rss, fit))
}

/// Conditional least squares for `(α, β)`, profiling `β` out and searching
/// `ln α` by golden section around `alpha_guess`.
pub fn fit_level_dynamics(values: &[f64], alpha_guess: f64) -> Result<LevelDynamicsFit> {
    let n = values.len();
    if n < 30 {
        return Err(Error::InvalidParameter(format!("level dynamics need n >= 30, got {n}")));
    }
    if !(alpha_guess > 0.0 && alpha_guess.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha guess must be positive, got {alpha_guess}")));
    }
    let rss = |log_alpha: f64| profile_rss(values, log_alpha.exp()).map(|r| r.0);

    // Coarse scan over a factor of 8 either way, then golden section.
    let centre = alpha_guess.ln();
    let grid: Vec<f64> = (0..=24).map(|k| centre - 8f64.ln() + k as f64 * 8f64.ln() / 12.0).collect();
    let values_on_grid = grid.iter().map(|g| rss(*g)).collect::<Result<Vec<_>>>()?;
    let best = values_on_grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (rss(x1)?, rss(x2)?);
    while hi - lo > 1e-10 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = rss(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = rss(x2)?;
        }
    }
    let alpha = (0.5 * (lo + hi)).exp();
    let (_, fit) = profile_rss(values, alpha)?;
    let m = n - 1;
    let beta: Vec<f64> = fit.coef.iter().copied().collect();

    // Jacobian of the one-step prediction in (α, β).
    let h = 1e-6 * alpha;
    let xp = transition_design(m, alpha + h);
    let xm = transition_design(m, alpha - h);
    let x = transition_design(m, alpha);
    let decay = (-alpha).exp();
    let jac = DMatrix::from_fn(m, 5, |i, j| {
        if j == 0 {
            let dx: f64 = (0..4).map(|k| (xp[(i, k)] - xm[(i, k)]) / (2.0 * h) * beta[k]).sum();
            -decay * values[i] + dx
        } else {
            x[(i, j - 1)]
        }
    });
    let jtj_inv = ols(&jac, &fit.residuals)?.xtx_inv;
    let mut meat = DMatrix::zeros(5, 5);
    for (i, e) in fit.residuals.iter().enumerate() {
        let row = jac.row(i);
        meat += row.transpose() * row * (e * e);
    }
    let dof_scale = m as f64 / (m - 5) as f64;
    let cov = &jtj_inv * meat * &jtj_inv * dof_scale;
    let dof = m - 5;
    let beta_effective = (0..4)
        .map(|k| CoefficientStat::new(SEASONAL_NAMES[k], beta[k], cov[(k + 1, k + 1)].sqrt(), dof))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelDynamicsFit {
        alpha,
        alpha_stderr: cov[(0, 0)].sqrt(),
        beta_effective,
        covariance: (0..5).map(|i| (0..5).map(|j| cov[(i, j)]).collect()).collect(),
        innovations: fit.residuals,
    })
}

/// Seasonal coefficients net of the noise drift: `β = β_eff − (κ₁/α)·c`.
/// `drift_sd` is the standard error of `κ₁` and is added in quadrature.
pub fn structural_seasonal(
    level: &LevelDynamicsFit,
    kappa1: f64,
    drift_sd: f64,
    vol: &FourCoeffs,
) -> Result<Vec<CoefficientStat>> {
    let c = vol.as_array();
    let dof = level.innovations.len().saturating_sub(5).max(1);
    level
        .beta_effective
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let shift = c[k] / level.alpha;
            let se = (b.std_error.powi(2) + (shift * drift_sd).powi(2)).sqrt();
            CoefficientStat::new(&b.name, b.estimate - shift * kappa1, se, dof)
        })
        .collect()
}
