//! Laplace exponents and characteristic functions of the Gamma time-changed
//! model, under the historical measure (θ = 0) and under Esscher transforms.
//!
//! Cumulant exponents follow `E[e^{zX_t}] = e^{t·l(z)}`, so the characteristic
//! function of a Wiener-type integral `∫ f dV` is `exp(∫ l_V(i·u·f(s)) ds)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::seasonal::{self, FourCoeffs};

/// Absolute tolerance of the time integrals inside characteristic functions.
pub const CHARFUN_TOL: f64 = 1e-10;
/// Node budget per characteristic-function evaluation.
pub const CHARFUN_BUDGET: usize = 1 << 16;

/// Gamma subordinator `R` (shape rate `a` per day, rate `b`) driving
/// `V_t = B_{R_t} + μ₁R_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaTimeChange {
    pub a: f64,
    pub b: f64,
    pub mu1: f64,
}

impl GammaTimeChange {
    pub fn new(a: f64, b: f64, mu1: f64) -> Result<Self> {
        let tc = Self { a, b, mu1 };
        tc.validate()?;
        Ok(tc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma time change needs a > 0 and b > 0, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if !self.mu1.is_finite() {
            return Err(Error::InvalidParameter("mu1 must be finite".into()));
        }
        Ok(())
    }

    /// `A₁(u) = 1 − μ₁u/b − u²/(2b)`.
    pub fn a1(&self, u: Complex64) -> Complex64 {
        1.0 - u * (self.mu1 / self.b) - u * u / (2.0 * self.b)
    }

    pub fn a1_real(&self, theta: f64) -> f64 {
        1.0 - self.mu1 * theta / self.b - theta * theta / (2.0 * self.b)
    }

    /// Open interval of θ with `A₁(θ) > 0`.
    pub fn admissible_interval(&self) -> (f64, f64) {
        let disc = (self.mu1 * self.mu1 + 2.0 * self.b).sqrt();
        (-self.mu1 - disc, -self.mu1 + disc)
    }

    pub fn is_admissible(&self, theta: f64) -> bool {
        theta.is_finite() && self.a1_real(theta) > 0.0
    }

    /// Parameters of `V` under the Esscher measure `Q^θ`: the law is again a
    /// Gamma time-changed Brownian motion, with drift `μ₁ + θ` and rate
    /// `b·A₁(θ)`.
    pub fn esscher_transformed(&self, theta: f64) -> Result<Self> {
        check_admissible(self, theta)?;
        if theta == 0.0 {
            return Ok(*self);
        }
        Self::new(self.a, self.b * self.a1_real(theta), self.mu1 + theta)
    }

    /// Cumulants `κ₁..κ₄` of `V₁` (derivatives of `l_V` at 0).
    pub fn cumulants(&self) -> [f64; 4] {
        let (a, b, m) = (self.a, self.b, self.mu1);
        [
            a * m / b,
            a / b + a * m * m / (b * b),
            3.0 * a * m / (b * b) + 2.0 * a * m.powi(3) / b.powi(3),
            3.0 * a / (b * b) + 12.0 * a * m * m / b.powi(3) + 6.0 * a * m.powi(4) / b.powi(4),
        ]
    }
}

/// Mean-reverting temperature model with Gamma time-changed noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Mean-reversion rate per day.
    pub alpha: f64,
    /// Initial temperature (°C).
    pub t0: f64,
    pub seasonal: FourCoeffs,
    pub vol: FourCoeffs,
    pub timechange: GammaTimeChange,
}

impl ModelParams {
    /// Builds and validates a model whose volatility must stay positive on
    /// `[0, horizon]`.
    pub fn new(
        alpha: f64,
        t0: f64,
        seasonal: FourCoeffs,
        vol: FourCoeffs,
        timechange: GammaTimeChange,
        horizon: f64,
    ) -> Result<Self> {
        let p = Self { alpha, t0, seasonal, vol, timechange };
        p.validate(horizon)?;
        Ok(p)
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mean-reversion rate must be positive, got {}",
                self.alpha
            )));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidParameter("initial temperature must be finite".into()));
        }
        self.timechange.validate()?;
        self.vol.check_volatility(horizon)
    }

    /// `E[T_t]` under P when the noise is centred; the deterministic part of
    /// the solution `e^{−αt}T₀ + αK₁(t, α)`.
    pub fn deterministic(&self, t: f64) -> f64 {
        seasonal::deterministic_level(t, self.alpha, self.t0, &self.seasonal)
    }

    /// `Σ_{k=1}^{T} (e^{−αk}T₀ + αK₁(k, α))`: the CAT index of the noiseless model.
    pub fn deterministic_cat(&self, horizon_days: u32) -> f64 {
        (1..=horizon_days).map(|k| self.deterministic(k as f64)).sum()
    }

    pub fn with_timechange(&self, timechange: GammaTimeChange) -> Self {
        Self { timechange, ..*self }
    }
}

fn check_admissible(tc: &GammaTimeChange, theta: f64) -> Result<()> {
    if tc.is_admissible(theta) {
        Ok(())
    } else {
        let (lo, hi) = tc.admissible_interval();
        Err(Error::Domain(format!(
            "Esscher parameter {theta} outside the admissible interval ({lo}, {hi})"
        )))
    }
}

/// Principal `ln(1 + z)`, accurate for small `z`.
pub(crate) fn ln_1p(z: Complex64) -> Result<Complex64> {
    let re1 = 1.0 + z.re;
    if z.im == 0.0 && re1 <= 0.0 {
        return Err(Error::Domain(format!("logarithm of non-positive real {re1}")));
    }
    let modulus = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    Ok(Complex64::new(modulus, z.im.atan2(re1)))
}

/// `l_R(u) = −a·Log(1 − u/b)`.
pub fn laplace_exponent_gamma(u: Complex64, tc: &GammaTimeChange) -> Result<Complex64> {
    Ok(-tc.a * ln_1p(-u / tc.b)?)
}

/// `A₁(u) = 1 − μ₁u/b − u²/(2b)`.
pub fn a1(u: Complex64, tc: &GammaTimeChange) -> Complex64 {
    tc.a1(u)
}

/// `l_V^θ(u) = l_V(u + θ) − l_V(θ) = −a·Log(A₁(u + θ)/A₁(θ))`; θ = 0 gives
/// `l_V(u) = l_R(μ₁u + u²/2)`.
pub fn cumulant_v(u: Complex64, tc: &GammaTimeChange, theta: f64) -> Result<Complex64> {
    Ok(-tc.a * ln_1p(cumulant_ratio_minus_one(u, tc, theta)?)?)
}

/// `A₁(u + θ)/A₁(θ) − 1`.
fn cumulant_ratio_minus_one(u: Complex64, tc: &GammaTimeChange, theta: f64) -> Result<Complex64> {
    check_admissible(tc, theta)?;
    let shift = -(u * tc.mu1 + (u * u + 2.0 * theta * u) * 0.5) / tc.b;
    Ok(shift / tc.a1_real(theta))
}

/// Guards the principal-branch logarithm along a quadrature sweep: adjacent
/// nodes must not differ in phase by more than π.
struct PhaseMonitor {
    last: Option<(f64, f64)>,
}

impl PhaseMonitor {
    fn new() -> Self {
        Self { last: None }
    }

    fn observe(&mut self, s: f64, ratio_minus_one: Complex64) -> Result<()> {
        let phase = ratio_minus_one.im.atan2(1.0 + ratio_minus_one.re);
        if let Some((last_s, last_phase)) = self.last {
            if s > last_s {
                let jump = (phase - last_phase).abs();
                if jump > std::f64::consts::PI {
                    return Err(Error::BranchJump { jump, at: s });
                }
            }
        }
        self.last = Some((s, phase));
        Ok(())
    }
}

/// `∫ l_V^θ(i·u·w(s)) ds` over `points`, with `w` the weight of the noise.
fn noise_exponent<W>(
    u: f64,
    tc: &GammaTimeChange,
    theta: f64,
    points: &[f64],
    weight: W,
) -> Result<Complex64>
where
    W: Fn(f64) -> f64,
{
    check_admissible(tc, theta)?;
    if u == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut monitor = PhaseMonitor::new();
    let integrand = |s: f64| -> Result<Complex64> {
        let z = Complex64::new(0.0, u * weight(s));
        let q = cumulant_ratio_minus_one(z, tc, theta)?;
        monitor.observe(s, q)?;
        Ok(-tc.a * ln_1p(q)?)
    };
    let tol = Tolerance::absolute(CHARFUN_TOL);
    Ok(quad::integrate_breakpoints(integrand, points, tol, CHARFUN_BUDGET)?.value)
}

/// Characteristic function of `T_t` under `Q^θ` (θ = 0: the measure P).
pub fn charfun_t(u: f64, t: f64, p: &ModelParams, theta: f64) -> Result<Complex64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    let drift = Complex64::new(0.0, u * p.deterministic(t));
    if p.vol.is_zero() {
        check_admissible(&p.timechange, theta)?;
        return Ok(drift.exp());
    }
    let (alpha, vol) = (p.alpha, p.vol);
    let noise = noise_exponent(u, &p.timechange, theta, &[0.0, t], |s| {
        vol.eval(s) * (-alpha * (t - s)).exp()
    })?;
    Ok((drift + noise).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CatMode {
    /// Product of per-day increment characteristic functions, each increment
    /// conditioned on the deterministic forecast of the previous day.
    Product,
    /// Exact evaluation after exchanging the day sum with the noise integral.
    #[default]
    ExactKernel,
}

/// `Σ_{k=j}^{T} e^{−α(k−j)}`.
fn geometric_tail(alpha: f64, j: u32, horizon: u32) -> f64 {
    let n = (horizon + 1 - j) as f64;
    (-alpha * n).exp_m1() / (-alpha).exp_m1()
}

fn day_breakpoints(horizon: u32) -> Vec<f64> {
    (0..=horizon).map(f64::from).collect()
}

/// Noise weight of the CAT index at time `s`: `σ_s·Σ_{k=⌈s⌉}^{T} e^{−α(k−s)}`.
fn cat_weight(p: &ModelParams, horizon: u32) -> impl Fn(f64) -> f64 + '_ {
    let tails: Vec<f64> = (1..=horizon).map(|j| geometric_tail(p.alpha, j, horizon)).collect();
    move |s: f64| {
        let j = (s.ceil() as u32).clamp(1, horizon);
        p.vol.eval(s) * (-p.alpha * (j as f64 - s)).exp() * tails[(j - 1) as usize]
    }
}

/// Characteristic function of the CAT index `ξ_T = Σ_{k=1}^{T} T_k` under `Q^θ`.
pub fn charfun_cat(
    u: f64,
    p: &ModelParams,
    theta: f64,
    horizon_days: u32,
    mode: CatMode,
) -> Result<Complex64> {
    Ok(cat_log_charfun(u, p, theta, horizon_days, mode)?.exp())
}

/// Logarithm of [`charfun_cat`], continuous in `u`.
pub fn cat_log_charfun(
    u: f64,
    p: &ModelParams,
    theta: f64,
    horizon_days: u32,
    mode: CatMode,
) -> Result<Complex64> {
    if horizon_days == 0 {
        return Err(Error::InvalidParameter("CAT horizon must be at least one day".into()));
    }
    let horizon = horizon_days;
    match mode {
        CatMode::ExactKernel => {
            let drift = Complex64::new(0.0, u * p.deterministic_cat(horizon));
            if p.vol.is_zero() {
                check_admissible(&p.timechange, theta)?;
                return Ok(drift);
            }
            let weight = cat_weight(p, horizon);
            let noise =
                noise_exponent(u, &p.timechange, theta, &day_breakpoints(horizon), weight)?;
            Ok(drift + noise)
        }
        CatMode::Product => {
            // ξ_T = T·T₀ + Σ_j γ_j ΔT_j with γ_j = T − j + 1 and
            // ΔT_j = T_j − T_{j−1} ≈ (m_j − m_{j−1}) + ∫_{j−1}^{j} σ_s e^{−α(j−s)} dV_s.
            let t0_term = horizon as f64 * p.t0;
            let mut drift = t0_term;
            let mut prev = p.t0;
            for j in 1..=horizon {
                let m = p.deterministic(j as f64);
                drift += (horizon - j + 1) as f64 * (m - prev);
                prev = m;
            }
            let drift = Complex64::new(0.0, u * drift);
            if p.vol.is_zero() {
                check_admissible(&p.timechange, theta)?;
                return Ok(drift);
            }
            let (alpha, vol) = (p.alpha, p.vol);
            let weight = move |s: f64| {
                let j = (s.ceil() as u32).clamp(1, horizon);
                let gamma = (horizon - j + 1) as f64;
                gamma * vol.eval(s) * (-alpha * (j as f64 - s)).exp()
            };
            let noise =
                noise_exponent(u, &p.timechange, theta, &day_breakpoints(horizon), weight)?;
            Ok(drift + noise)
        }
    }
}

/// Mean and variance of the CAT index under `Q^θ`, from central finite
/// differences of the exact-kernel log characteristic function.
///
/// The differences are taken inside the time integral, with the step scaled
/// so that the largest noise argument is about `1e−5`.
pub fn cat_cumulants(p: &ModelParams, theta: f64, horizon_days: u32) -> Result<(f64, f64)> {
    if horizon_days == 0 {
        return Err(Error::InvalidParameter("CAT horizon must be at least one day".into()));
    }
    check_admissible(&p.timechange, theta)?;
    let centre = p.deterministic_cat(horizon_days);
    if p.vol.is_zero() {
        return Ok((centre, 0.0));
    }
    let tc = p.timechange;
    let weight = cat_weight(p, horizon_days);
    let points = day_breakpoints(horizon_days);
    let scale = points
        .windows(2)
        .map(|w| weight(0.5 * (w[0] + w[1])).abs())
        .fold(0.0_f64, f64::max)
        * (1.0 + tc.mu1.abs() + theta.abs());
    let h = 1e-5 / scale.max(1e-300);

    let exponent = |z: f64, s: f64| -> Result<Complex64> {
        let arg = Complex64::new(0.0, z * weight(s));
        Ok(-tc.a * ln_1p(cumulant_ratio_minus_one(arg, &tc, theta)?)?)
    };
    let tol = Tolerance { abs: 0.0, rel: 1e-12 };
    let mean_shift = quad::integrate_breakpoints(
        |s| Ok((exponent(h, s)? - exponent(-h, s)?).im / (2.0 * h)),
        &points,
        tol,
        CHARFUN_BUDGET,
    )?
    .value;
    let variance = quad::integrate_breakpoints(
        |s| Ok(-(exponent(h, s)? + exponent(-h, s)?).re / (h * h)),
        &points,
        tol,
        CHARFUN_BUDGET,
    )?
    .value;
    if variance < -1e-8 {
        return Err(Error::Numerical(format!("negative CAT variance {variance:.3e}")));
    }
    Ok((centre + mean_shift, variance.max(0.0)))
}
