//! Estimation of the Gamma time change from one-day innovations of the
//! deseasonalized series.
//!
//! The innovation over `[t, t+1]` is `ε_t = ∫₀¹ σ(t+v) e^{−α(1−v)} dV_v`.
//! Dividing by `σ(t+½)` leaves `z ≈ s·∫₀¹ e^{−α(1−v)} dV_v`, whose cumulants
//! are `κ_n(V)·sⁿ·w_n` with `w_n = (1 − e^{−nα})/(nα)`.
//!
//! `(σ, b, μ₁)` and `(σ√c, b·c, μ₁√c)` give the same law, so when the
//! volatility level is estimated the normalization `a = b` is imposed.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::optimize::{nelder_mead, NelderMeadOptions};
use super::regression::ols;
use crate::charfun::{cumulant_v, GammaTimeChange};
use crate::cos::{cos_coefficients, density_from_coefficients, CosGrid, DEFAULT_TERMS};
use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::seasonal::FourCoeffs;
use crate::simulator::path_rng;

pub const MIN_RESIDUALS: usize = 500;
const DENSITY_FLOOR: f64 = 1e-300;
const LIKELIHOOD_L: f64 = 10.0;
const MAX_RESTARTS: usize = 6;
/// Largest `μ₁²/b` the moment inversion returns.
const Y_MAX: f64 = 1e4;

/// How the volatility enters the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolShape {
    /// Volatility fixed; `(a, b, μ₁)` all free.
    Known(FourCoeffs),
    /// Constant volatility level estimated with `a = b`.
    Constant,
    /// Seasonal shape from a regression of `|ε|` on the harmonic basis, level
    /// estimated with `a = b`.
    Seasonal,
}

impl VolShape {
    fn normalized(&self) -> bool {
        !matches!(self, VolShape::Known(_))
    }
}

/// Starting point of the minimum-distance search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeChangeInit {
    #[default]
    MethodOfMoments,
    /// `scale` multiplies the volatility shape; ignored for a known volatility.
    User { a: f64, b: f64, mu1: f64, scale: f64 },
}

/// Law of the standardized innovation `s·∫₀¹ e^{−α(1−v)} dV_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnovationModel {
    pub alpha: f64,
    pub timechange: GammaTimeChange,
    pub scale: f64,
    /// Remove the mean, as when the drift is absorbed by the level regression.
    pub centered: bool,
}

/// `w_n = ∫₀¹ e^{−nα(1−v)} dv`.
pub fn innovation_cumulant_weight(n: u32, alpha: f64) -> f64 {
    let x = n as f64 * alpha;
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

impl InnovationModel {
    pub fn cumulants(&self) -> [f64; 4] {
        let k = self.timechange.cumulants();
        let mut out = [0.0; 4];
        for n in 1..=4 {
            out[n - 1] =
                k[n - 1] * self.scale.powi(n as i32) * innovation_cumulant_weight(n as u32, self.alpha);
        }
        if self.centered {
            out[0] = 0.0;
        }
        out
    }

    pub fn log_charfun(&self, u: f64) -> Result<Complex64> {
        innovation_log_charfun(u, self)
    }
}

pub fn innovation_log_charfun(u: f64, m: &InnovationModel) -> Result<Complex64> {
    if u == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let tc = &m.timechange;
    let integral = quad::integrate(
        |v: f64| cumulant_v(Complex64::new(0.0, u * m.scale * (-m.alpha * (1.0 - v)).exp()), tc, 0.0),
        0.0,
        1.0,
        Tolerance { abs: 1e-13, rel: 1e-12 },
        1 << 12,
    )?
    .value;
    let shift = if m.centered { m.cumulants_uncentered_mean() } else { 0.0 };
    Ok(integral - Complex64::new(0.0, u * shift))
}

impl InnovationModel {
    fn cumulants_uncentered_mean(&self) -> f64 {
        self.timechange.cumulants()[0] * self.scale * innovation_cumulant_weight(1, self.alpha)
    }
}

/// `ε_t = Y_{t+1} − e^{−α}Y_t`.
pub fn innovations(residuals: &[f64], alpha: f64) -> Vec<f64> {
    let decay = (-alpha).exp();
    residuals.windows(2).map(|w| w[1] - decay * w[0]).collect()
}

/// `ε_t / shape(t + ½)`; the shape must be positive at every midpoint.
pub fn standardize_innovations(eps: &[f64], shape: &FourCoeffs) -> Result<Vec<f64>> {
    eps.iter()
        .enumerate()
        .map(|(i, e)| {
            let s = shape.eval(i as f64 + 0.5);
            if s > 0.0 {
                Ok(e / s)
            } else {
                Err(Error::Domain(format!("volatility shape {s} is not positive at day {i}")))
            }
        })
        .collect()
}

/// Sample cumulants `k₁..k₄` (population-divisor central moments).
fn sample_cumulants(z: &[f64]) -> [f64; 4] {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in z {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    [mean, m2, m3, m4 - 3.0 * m2 * m2]
}

/// `F(y) = y(3+2y)²/((1+y)(3+12y+6y²))`: the ratio `κ₃²/(κ₂κ₄)` as a function
/// of `y = μ₁²/b`. Increasing from 0 towards 2/3.
fn skew_kurt_ratio(y: f64) -> f64 {
    y * (3.0 + 2.0 * y).powi(2) / ((1.0 + y) * (3.0 + 12.0 * y + 6.0 * y * y))
}

/// Exact inversion of the second to fourth cumulants of `z`.
/// Returns `(a, b, μ₁, scale)`; with `normalized`, `a = b` and the scale is
/// estimated, otherwise the scale is 1.
pub fn moment_match(z: &[f64], alpha: f64, normalized: bool) -> Result<(GammaTimeChange, f64)> {
    let k = sample_cumulants(z);
    let w = |n| innovation_cumulant_weight(n, alpha);
    let (k2, k3, k4) = (k[1] / w(2), k[2] / w(3), k[3] / w(4));
    if !(k2 > 0.0 && k4 > 0.0) {
        return Err(Error::Numerical(format!(
            "moment inversion needs positive variance and excess kurtosis (k2 = {k2:.4e}, k4 = {k4:.4e})"
        )));
    }
    let ratio = k3 * k3 / (k2 * k4);
    let y = if ratio >= skew_kurt_ratio(Y_MAX) {
        Y_MAX
    } else {
        let (mut lo, mut hi) = (0.0, Y_MAX);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if skew_kurt_ratio(mid) < ratio {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let poly = 3.0 + 12.0 * y + 6.0 * y * y;
    let sign = if k3 < 0.0 { -1.0 } else { 1.0 };
    if normalized {
        let b = poly / ((1.0 + y).powi(2) * k4 / (k2 * k2));
        let scale = (k2 / (1.0 + y)).sqrt();
        Ok((GammaTimeChange::new(b, b, sign * (y * b).sqrt())?, scale))
    } else {
        let b = poly / ((1.0 + y) * k4 / k2);
        let a = b * k2 / (1.0 + y);
        Ok((GammaTimeChange::new(a, b, sign * (y * b).sqrt())?, 1.0))
    }
}

/// Standard frequencies `0.05, 0.10, …, 2.00`.
pub fn default_cf_grid() -> Vec<f64> {
    (1..=40).map(|j| 0.05 * j as f64).collect()
}

/// Empirical characteristic function of a centered sample on a grid, with
/// weights `e^{−u²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfTarget {
    pub u: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl CfTarget {
    pub fn from_sample(z: &[f64], grid: &[f64]) -> Self {
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let values = grid
            .iter()
            .map(|u| {
                let (mut c, mut s) = (0.0, 0.0);
                for v in z {
                    let (si, co) = (u * (v - mean)).sin_cos();
                    c += co;
                    s += si;
                }
                Complex64::new(c / n, s / n)
            })
            .collect();
        Self { u: grid.to_vec(), weights: grid.iter().map(|u| (-u * u).exp()).collect(), values }
    }
}

/// `Σ_j w_j |φ̂(u_j) − φ(u_j)|²` against the centered model.
pub fn cf_distance(target: &CfTarget, model: &InnovationModel) -> Result<f64> {
    let model = InnovationModel { centered: true, ..*model };
    target
        .u
        .iter()
        .zip(&target.weights)
        .zip(&target.values)
        .map(|((u, w), v)| Ok(w * (v - model.log_charfun(*u)?.exp()).norm_sqr()))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeChangeFit {
    pub a: f64,
    pub b: f64,
    pub mu1: f64,
    pub vol: FourCoeffs,
    pub alpha: f64,
    pub objective: f64,
    pub init_source: String,
    pub init: GammaTimeChange,
    pub init_scale: f64,
    pub init_objective: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub n: usize,
    /// Sample cumulants of the standardized innovations.
    pub sample_cumulants: [f64; 4],
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub standardized: Vec<f64>,
    #[serde(skip)]
    pub standardizing_scale: f64,
}

impl TimeChangeFit {
    pub fn timechange(&self) -> GammaTimeChange {
        GammaTimeChange { a: self.a, b: self.b, mu1: self.mu1 }
    }

    /// Mean of `V` per day.
    pub fn kappa1(&self) -> f64 {
        self.a * self.mu1 / self.b
    }
}

/// Volatility shape from OLS of `|ε_t|` on the harmonic basis at day midpoints.
fn seasonal_shape(eps: &[f64]) -> Result<FourCoeffs> {
    let n = eps.len();
    let design = nalgebra::DMatrix::from_fn(n, 4, |i, j| FourCoeffs::basis(i as f64 + 0.5)[j]);
    let abs: Vec<f64> = eps.iter().map(|e| e.abs()).collect();
    let fit = ols(&design, &abs)?;
    Ok(FourCoeffs::new(fit.coef[0], fit.coef[1], fit.coef[2], fit.coef[3]))
}

/// Minimum-distance fit of the time change (and volatility level) to the
/// innovations of the deseasonalized `residuals`.
pub fn fit_timechange(
    residuals: &[f64],
    alpha: f64,
    init: TimeChangeInit,
    shape: VolShape,
) -> Result<TimeChangeFit> {
    if residuals.len() < MIN_RESIDUALS {
        return Err(Error::InvalidParameter(format!(
            "time-change fit needs at least {MIN_RESIDUALS} residuals, got {}",
            residuals.len()
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let eps = innovations(residuals, alpha);
    let mut warnings = Vec::new();
    let shape_coeffs = match shape {
        VolShape::Known(c) => c,
        VolShape::Constant => FourCoeffs::constant(1.0),
        VolShape::Seasonal => {
            let c = seasonal_shape(&eps)?;
            let positive = (0..=eps.len()).all(|i| c.eval(i as f64) > 0.0);
            if positive {
                c
            } else {
                warnings.push("seasonal volatility shape not positive; using a constant".into());
                FourCoeffs::constant(1.0)
            }
        }
    };
    let mut z = standardize_innovations(&eps, &shape_coeffs)?;
    let normalized = shape.normalized();
    let standardizing_scale = if normalized {
        let k = sample_cumulants(&z);
        let sd = k[1].sqrt();
        if !(sd > 0.0) {
            return Err(Error::Numerical("innovations have zero variance".into()));
        }
        z.iter_mut().for_each(|v| *v /= sd);
        sd
    } else {
        1.0
    };

    let (start, start_scale, init_source) = match init {
        TimeChangeInit::User { a, b, mu1, scale } => {
            let tc = GammaTimeChange::new(a, b, mu1)?;
            let scale = if normalized { scale / standardizing_scale } else { 1.0 };
            if normalized && !(scale > 0.0) {
                return Err(Error::InvalidParameter("user scale must be positive".into()));
            }
            (tc, scale, "user".to_string())
        }
        TimeChangeInit::MethodOfMoments => match moment_match(&z, alpha, normalized) {
            Ok((tc, s)) => (tc, s, "method_of_moments".to_string()),
            Err(e) => {
                warnings.push(format!("moment inversion failed ({e}); starting near the Gaussian limit"));
                let k2 = sample_cumulants(&z)[1] / innovation_cumulant_weight(2, alpha);
                if normalized {
                    (GammaTimeChange::new(50.0, 50.0, 0.0)?, k2.sqrt(), "fallback".to_string())
                } else {
                    (GammaTimeChange::new(50.0 * k2, 50.0, 0.0)?, 1.0, "fallback".to_string())
                }
            }
        },
    };

    let target = CfTarget::from_sample(&z, &default_cf_grid());
    let decode = |x: &[f64]| -> Option<(GammaTimeChange, f64)> {
        let (tc, scale) = if normalized {
            let a = x[0].exp();
            (GammaTimeChange { a, b: a, mu1: x[1] }, x[2].exp())
        } else {
            (GammaTimeChange { a: x[0].exp(), b: x[1].exp(), mu1: x[2] }, 1.0)
        };
        tc.validate().ok()?;
        (scale > 0.0 && scale.is_finite()).then_some((tc, scale))
    };
    let objective = |x: &[f64]| -> f64 {
        decode(x)
            .and_then(|(tc, scale)| {
                cf_distance(&target, &InnovationModel { alpha, timechange: tc, scale, centered: true }).ok()
            })
            .unwrap_or(f64::INFINITY)
    };
    let x0 = if normalized {
        vec![start.a.ln(), start.mu1, start_scale.ln()]
    } else {
        vec![start.a.ln(), start.b.ln(), start.mu1]
    };
    let init_objective = objective(&x0);

    let opts = NelderMeadOptions { max_evals: 3000, f_tol: 1e-15, x_tol: 1e-10, step: 0.3 };
    let mut best = nelder_mead(objective, &x0, opts);
    let mut evaluations = best.evals;
    let mut restarts = 0;
    while restarts < MAX_RESTARTS {
        restarts += 1;
        let next = nelder_mead(objective, &best.x, NelderMeadOptions { step: 0.1, ..opts });
        evaluations += next.evals;
        let improved = best.value - next.value > 1e-14 * (1.0 + best.value.abs());
        if next.value <= best.value {
            best = next;
        }
        if !improved && best.converged {
            break;
        }
    }
    if !best.converged || !best.value.is_finite() {
        return Err(Error::NonConvergence(format!(
            "minimum-distance search did not converge after {restarts} restarts ({evaluations} evaluations)"
        )));
    }
    let (tc, scale) = decode(&best.x).expect("finite objective implies valid parameters");
    let vol = if normalized { shape_coeffs.scaled(scale * standardizing_scale) } else { shape_coeffs };
    Ok(TimeChangeFit {
        a: tc.a,
        b: tc.b,
        mu1: tc.mu1,
        vol,
        alpha,
        objective: best.value,
        init_source,
        init: start,
        init_scale: start_scale * standardizing_scale,
        init_objective,
        evaluations,
        restarts,
        n: z.len(),
        sample_cumulants: sample_cumulants(&z),
        warnings,
        standardized: z,
        standardizing_scale,
    })
}

/// Standard deviation of the moment-matched `κ₁ = aμ₁/b` (known volatility)
/// over `reps` bootstrap resamples of the standardized innovations.
pub fn kappa1_bootstrap_sd(z: &[f64], alpha: f64, reps: usize, seed: u64) -> Result<f64> {
    if reps < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least 2 replicates".into()));
    }
    let n = z.len();
    let mut draws = Vec::with_capacity(reps);
    let mut sample = vec![0.0; n];
    for r in 0..reps {
        let mut rng = path_rng(seed, r as u64);
        for v in sample.iter_mut() {
            *v = z[rng.random_range(0..n)];
        }
        if let Ok((tc, _)) = moment_match(&sample, alpha, false) {
            draws.push(tc.cumulants()[0]);
        }
    }
    if draws.len() < 2 {
        return Err(Error::Numerical("bootstrap replicates all failed".into()));
    }
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    Ok(var.sqrt())
}

/// COS grid for the innovation law: `c₁ ± L·√(c₂ + √c₄)`.
pub fn innovation_grid(model: &InnovationModel, terms: usize) -> Result<CosGrid> {
    let c = model.cumulants();
    let half = LIKELIHOOD_L * (c[1] + c[3].abs().sqrt()).sqrt();
    CosGrid::new(c[0] - half, c[0] + half, terms, terms)
}

/// `Σ_j ln max(f(z_j), 10⁻³⁰⁰)` with `f` the COS density of the innovation
/// model. Without a grid one is built from the model cumulants with 256 terms.
pub fn log_likelihood(z: &[f64], model: &InnovationModel, grid: Option<&CosGrid>) -> Result<f64> {
    let grid = match grid {
        Some(g) => *g,
        None => innovation_grid(model, DEFAULT_TERMS)?,
    };
    let coeffs =
        cos_coefficients(|u| Ok(model.log_charfun(u)?.exp()), &grid, grid.n1.max(grid.n2))?;
    let mut total = 0.0;
    for x in z {
        let f = if *x >= grid.b1 && *x <= grid.b2 {
            density_from_coefficients(&coeffs, &grid, *x)?
        } else {
            0.0
        };
        total += f.max(DENSITY_FLOOR).ln();
    }
    Ok(total)
}
