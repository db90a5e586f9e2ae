//! Data ingestion, descriptive statistics and parameter estimation.

mod ingest;
mod optimize;
mod pipeline;
mod regression;
mod stats;
mod timechange;

pub use ingest::{ingest_csv, ingest_csv_path, DailySeries};
pub use optimize::{nelder_mead, NelderMeadOptions, Minimum};
pub use pipeline::{
    calibrate, fit_structural_seasonal, CalibrationOptions, CalibrationReport, StructuralSeasonal,
    BOOTSTRAP_REPS,
};
pub use regression::{
    fit_alpha, fit_level_dynamics, fit_seasonal, fit_seasonal_values, log_returns, ols,
    structural_seasonal, AlphaEstimate, CoefficientStat, FitReport, LevelDynamicsFit, OlsFit,
};
pub use stats::{
    histogram, kde_silverman, kolmogorov_survival, ks_normality, summary_stats, Histogram,
    KdeEstimate, KsReference, KsResult, SummaryStats,
};
pub use timechange::{
    cf_distance, default_cf_grid, fit_timechange, innovation_cumulant_weight, innovation_grid,
    innovation_log_charfun, innovations, kappa1_bootstrap_sd, log_likelihood, moment_match,
    standardize_innovations, CfTarget, InnovationModel, TimeChangeFit, TimeChangeInit, VolShape,
};
