//! Random models and contracts shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weathercat::{ContractSpec, FourCoeffs, GammaTimeChange, ModelParams};

pub const REFERENCE_BETA: FourCoeffs = FourCoeffs::new(7.9733, 0.0008223, -5.8796, -12.866);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A model with seasonal level near the reference fit, volatility bounded away
/// from zero over `horizon` days and a moderately skewed time change.
pub fn random_model<R: Rng>(rng: &mut R, horizon: f64) -> ModelParams {
    let seasonal = FourCoeffs::new(
        REFERENCE_BETA.k0 + rng.random_range(-3.0..3.0),
        rng.random_range(-0.002..0.002),
        REFERENCE_BETA.k2 * rng.random_range(0.7..1.3),
        REFERENCE_BETA.k3 * rng.random_range(0.7..1.3),
    );
    let (c2, c3) = (rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
    let c1 = rng.random_range(-0.5..0.5) / horizon.max(1.0);
    let vol = FourCoeffs::new(rng.random_range(1.5..3.5), c1, c2, c3);
    let tc = GammaTimeChange::new(
        rng.random_range(0.8..3.0),
        rng.random_range(0.8..3.0),
        rng.random_range(-0.4..0.4),
    )
    .unwrap();
    ModelParams::new(
        rng.random_range(0.1..0.5),
        rng.random_range(-10.0..25.0),
        seasonal,
        vol,
        tc,
        horizon,
    )
    .unwrap()
}

/// Strangle with strikes about one CAT standard deviation either side of the
/// mean.
pub fn random_contract<R: Rng>(rng: &mut R, horizon: u32, mean: f64, sd: f64) -> ContractSpec {
    ContractSpec {
        horizon_t: horizon,
        k1_strike: mean + sd * rng.random_range(0.3..1.5),
        k2_strike: mean - sd * rng.random_range(0.3..1.5),
        d1: rng.random_range(0.5..2.0),
        d2: rng.random_range(0.5..2.0),
        rate_r: rng.random_range(0.0..0.06),
    }
}

/// Model used for the calibration experiments.
pub fn calibration_truth() -> ModelParams {
    ModelParams::new(
        0.25,
        REFERENCE_BETA.k0,
        REFERENCE_BETA,
        FourCoeffs::new(3.0, 0.0, 0.5, 0.5),
        GammaTimeChange::new(1.5, 1.0, 0.2).unwrap(),
        20_000.0,
    )
    .unwrap()
}

pub fn standard_normals(seed: u64, n: usize) -> Vec<f64> {
    use rand_distr::StandardNormal;
    let mut r = rng(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}
