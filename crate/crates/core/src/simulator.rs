//! Path simulation of the temperature process under P and under Esscher
//! measures, and Monte Carlo estimators built on it.
//!
//! Each path owns a ChaCha8 stream selected by `(seed, path index)`, so results
//! do not depend on how paths are scheduled across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfun::{GammaTimeChange, ModelParams};
use crate::cos::ContractSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    P,
    /// Esscher measure with the given θ.
    Q(f64),
}

impl Measure {
    pub fn theta(&self) -> f64 {
        match self {
            Measure::P => 0.0,
            Measure::Q(theta) => *theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Output step in days.
    pub step: f64,
    /// Sub-steps per output step for the noise integral.
    pub substeps: u32,
    pub n_paths: usize,
    pub seed: u64,
    pub measure: Measure,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { step: 1.0, substeps: 4, n_paths: 1, seed: 0, measure: Measure::P }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.step)));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be at least 1".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        Ok(())
    }

    fn steps_for(&self, horizon: f64) -> Result<usize> {
        let n = (horizon / self.step).round();
        if horizon < 0.0 || ((n * self.step) - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} is not a multiple of the step {}",
                self.step
            )));
        }
        Ok(n as usize)
    }
}

/// Per-path random stream.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// One draw from Gamma(shape, rate).
pub fn gamma_increment<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParameter(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Noise sampler for one sub-step: `μ'·ΔR + √ΔR·Z` with `ΔR ~ Gamma(a·h, b')`.
struct NoiseSampler {
    clock: Gamma<f64>,
    drift: f64,
}

impl NoiseSampler {
    fn new(tc: &GammaTimeChange, h: f64) -> Result<Self> {
        let clock = Gamma::new(tc.a * h, 1.0 / tc.b)
            .map_err(|e| Error::InvalidParameter(format!("gamma clock: {e}")))?;
        Ok(Self { clock, drift: tc.mu1 })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let dr: f64 = self.clock.sample(rng);
        let z: f64 = rng.sample(StandardNormal);
        self.drift * dr + dr.sqrt() * z
    }
}

/// Shared state of a simulation: deterministic levels on the output grid and
/// the per-sub-step weights.
struct Engine {
    levels: Vec<f64>,
    decay: f64,
    /// `σ(mid)·e^{−αh/2}` for each sub-step, in time order.
    weights: Vec<f64>,
    substeps: usize,
    sampler: Option<NoiseSampler>,
}

impl Engine {
    fn new(p: &ModelParams, cfg: &SimConfig, horizon: f64) -> Result<Self> {
        cfg.validate()?;
        let steps = cfg.steps_for(horizon)?;
        p.validate(horizon)?;
        let tc = p.timechange.esscher_transformed(cfg.measure.theta())?;
        let substeps = cfg.substeps as usize;
        let h = cfg.step / substeps as f64;
        let levels = (0..=steps).map(|i| p.deterministic(i as f64 * cfg.step)).collect();
        let half_decay = (-0.5 * p.alpha * h).exp();
        let weights = (0..steps * substeps)
            .map(|j| p.vol.eval((j as f64 + 0.5) * h) * half_decay)
            .collect();
        let sampler = if p.vol.is_zero() { None } else { Some(NoiseSampler::new(&tc, h)?) };
        Ok(Self { levels, decay: (-p.alpha * h).exp(), weights, substeps, sampler })
    }

    /// Runs one path, handing `(step index, temperature)` to `visit` for every
    /// grid node including t = 0.
    fn run<F: FnMut(usize, f64)>(&self, rng: &mut ChaCha8Rng, mut visit: F) {
        let mut noise = 0.0;
        visit(0, self.levels[0]);
        for i in 1..self.levels.len() {
            if let Some(sampler) = &self.sampler {
                let base = (i - 1) * self.substeps;
                for w in &self.weights[base..base + self.substeps] {
                    noise = self.decay * noise + w * sampler.sample(rng);
                }
            }
            visit(i, self.levels[i] + noise);
        }
    }
}

/// Simulated path `(t, T_t)` on the grid `0, step, …, horizon`.
pub fn simulate_path(p: &ModelParams, cfg: &SimConfig, horizon: f64, path: u64) -> Result<Vec<(f64, f64)>> {
    let engine = Engine::new(p, cfg, horizon)?;
    let mut rng = path_rng(cfg.seed, path);
    let mut out = Vec::with_capacity(engine.levels.len());
    engine.run(&mut rng, |i, x| out.push((i as f64 * cfg.step, x)));
    Ok(out)
}

/// `cfg.n_paths` paths, path `i` drawn from stream `i`.
pub fn simulate_paths(p: &ModelParams, cfg: &SimConfig, horizon: f64) -> Result<Vec<Vec<(f64, f64)>>> {
    let engine = Engine::new(p, cfg, horizon)?;
    Ok((0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path);
            let mut out = Vec::with_capacity(engine.levels.len());
            engine.run(&mut rng, |i, x| out.push((i as f64 * cfg.step, x)));
            out
        })
        .collect())
}

/// Terminal values `T_horizon` of `cfg.n_paths` paths.
pub fn terminal_samples(p: &ModelParams, cfg: &SimConfig, horizon: f64) -> Result<Vec<f64>> {
    let engine = Engine::new(p, cfg, horizon)?;
    Ok((0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path);
            let mut last = 0.0;
            engine.run(&mut rng, |_, x| last = x);
            last
        })
        .collect())
}

/// CAT values `Σ_{k=1}^{T} T_k` of `cfg.n_paths` daily paths.
pub fn cat_samples(p: &ModelParams, cfg: &SimConfig, horizon_days: u32) -> Result<Vec<f64>> {
    if cfg.step != 1.0 {
        return Err(Error::InvalidParameter("CAT sampling needs a one-day step".into()));
    }
    let engine = Engine::new(p, cfg, horizon_days as f64)?;
    Ok((0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path);
            let mut cat = 0.0;
            engine.run(&mut rng, |i, x| {
                if i > 0 {
                    cat += x;
                }
            });
            cat
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

pub fn mean_and_stderr(samples: &[f64]) -> McEstimate {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return McEstimate { mean, stderr: 0.0 };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    McEstimate { mean, stderr: (var / n).sqrt() }
}

/// Monte Carlo strangle price under `Q^θ`: discounted sample mean of the payoff
/// and its standard error. The measure in `cfg` is replaced by `Q(θ)`.
pub fn mc_price_cat(
    contract: &ContractSpec,
    p: &ModelParams,
    theta: f64,
    cfg: &SimConfig,
) -> Result<McEstimate> {
    contract.validate()?;
    let cfg = SimConfig { measure: Measure::Q(theta), ..*cfg };
    if contract.d1 == 0.0 && contract.d2 == 0.0 {
        cfg.validate()?;
        return Ok(McEstimate { mean: 0.0, stderr: 0.0 });
    }
    let discount = contract.discount();
    let payoffs: Vec<f64> = cat_samples(p, &cfg, contract.horizon_t)?
        .into_iter()
        .map(|cat| discount * contract.payoff(cat))
        .collect();
    Ok(mean_and_stderr(&payoffs))
}

/// `(1/n) Σ e^{iux_j}`.
pub fn empirical_charfun(samples: &[f64], u: f64) -> Result<Complex64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empirical characteristic function of no samples".into()));
    }
    let (c, s) = samples.iter().fold((0.0, 0.0), |(c, s), x| {
        let (si, co) = (u * x).sin_cos();
        (c + co, s + si)
    });
    let n = samples.len() as f64;
    Ok(Complex64::new(c / n, s / n))
}

/// Standard errors of the real and imaginary parts of [`empirical_charfun`].
pub fn empirical_charfun_stderr(samples: &[f64], u: f64) -> Result<(f64, f64)> {
    let phi = empirical_charfun(samples, u)?;
    let n = samples.len() as f64;
    let (vc, vs) = samples.iter().fold((0.0, 0.0), |(vc, vs), x| {
        let (si, co) = (u * x).sin_cos();
        (vc + (co - phi.re).powi(2), vs + (si - phi.im).powi(2))
    });
    Ok(((vc / (n - 1.0) / n).sqrt(), (vs / (n - 1.0) / n).sqrt()))
}
