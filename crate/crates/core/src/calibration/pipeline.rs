use serde::{Deserialize, Serialize};

use super::ingest::DailySeries;
use super::regression::{
    fit_alpha, fit_level_dynamics, fit_seasonal, structural_seasonal, AlphaEstimate,
    CoefficientStat, FitReport, LevelDynamicsFit,
};
use super::stats::{ks_normality, summary_stats, KsReference, KsResult, SummaryStats};
use super::timechange::{
    fit_timechange, kappa1_bootstrap_sd, standardize_innovations, TimeChangeFit, TimeChangeInit,
    VolShape,
};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    pub init: TimeChangeInit,
    pub vol_shape: VolShape,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { init: TimeChangeInit::MethodOfMoments, vol_shape: VolShape::Seasonal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub n: usize,
    pub repaired: usize,
    pub start_date: String,
    pub summary: SummaryStats,
    pub ks_raw: Option<KsResult>,
    pub ks_standardized: Option<KsResult>,
    pub seasonal: FitReport,
    pub alpha: AlphaEstimate,
    pub timechange: TimeChangeFit,
    /// Absent when the transition regression fails.
    pub structural: Option<StructuralSeasonal>,
    pub options: CalibrationOptions,
}

/// Summary statistics, seasonal regression, mean reversion, time change and
/// the drift-corrected seasonal coefficients, in that order.
pub fn calibrate(series: &DailySeries, options: CalibrationOptions) -> Result<CalibrationReport> {
    let summary = summary_stats(&series.values)?;
    let ks_raw = ks_normality(&series.values, KsReference::Raw).ok();
    let ks_standardized = ks_normality(&series.values, KsReference::Standardized).ok();
    let seasonal = fit_seasonal(series)?;
    let alpha = fit_alpha(&seasonal.residuals)?;
    let timechange =
        fit_timechange(&seasonal.residuals, alpha.alpha, options.init, options.vol_shape)?;
    let structural = fit_structural_seasonal(&series.values, alpha.alpha, &timechange, 0).ok();
    Ok(CalibrationReport {
        n: series.len(),
        repaired: series.repaired,
        start_date: series.dates[0].to_string(),
        summary,
        ks_raw,
        ks_standardized,
        seasonal,
        alpha,
        timechange,
        structural,
        options,
    })
}

/// Seasonal coefficients from the exact transition regression, net of the
/// noise drift implied by the time-change fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralSeasonal {
    pub level: LevelDynamicsFit,
    /// Daily mean of the driving noise, `aμ₁/b`.
    pub kappa1: f64,
    /// Bootstrap standard error of the moment-matched `κ₁`.
    pub kappa1_sd: f64,
    pub coefficients: Vec<CoefficientStat>,
}

pub const BOOTSTRAP_REPS: usize = 200;

pub fn fit_structural_seasonal(
    values: &[f64],
    alpha_guess: f64,
    timechange: &TimeChangeFit,
    seed: u64,
) -> Result<StructuralSeasonal> {
    let level = fit_level_dynamics(values, alpha_guess)?;
    let z = standardize_innovations(&level.innovations, &timechange.vol)?;
    let kappa1_sd = kappa1_bootstrap_sd(&z, level.alpha, BOOTSTRAP_REPS, seed)?;
    let kappa1 = timechange.kappa1();
    let coefficients = structural_seasonal(&level, kappa1, kappa1_sd, &timechange.vol)?;
    Ok(StructuralSeasonal { level, kappa1, kappa1_sd, coefficients })
}
