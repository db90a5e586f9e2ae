use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationOptions;
use crate::charfun::ModelParams;
use crate::cos::{ContractSpec, CosGrid, DEFAULT_L_MULT, DEFAULT_TERMS};
use crate::error::{Error, Result};
use crate::simulator::{Measure, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CosSettings {
    /// Fixed truncation grid; derived from the CAT cumulants when absent.
    pub grid: Option<CosGrid>,
    pub terms: usize,
    pub l_mult: f64,
}

impl Default for CosSettings {
    fn default() -> Self {
        Self { grid: None, terms: DEFAULT_TERMS, l_mult: DEFAULT_L_MULT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DensityMeasure {
    #[default]
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySettings {
    pub measure: DensityMeasure,
    pub points: usize,
}

impl Default for DensitySettings {
    fn default() -> Self {
        Self { measure: DensityMeasure::P, points: 401 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSettings {
    pub bins: usize,
    pub kde_points: usize,
}

impl Default for StatsSettings {
    fn default() -> Self {
        Self { bins: 40, kde_points: 256 }
    }
}

/// Everything a command needs; every field has a default so configs only
/// spell out what they use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelParams>,
    pub contract: Option<ContractSpec>,
    /// Esscher parameter; solved from the martingale condition when absent.
    pub theta: Option<f64>,
    pub cos: CosSettings,
    pub sim: SimConfig,
    /// Price with Monte Carlo as well.
    pub mc: bool,
    /// Mean-reversion rates to reprice at.
    pub sweep_alpha: Vec<f64>,
    /// Simulation and density horizon in days; defaults to the contract's.
    pub horizon_days: Option<u32>,
    /// Calendar date of `t = 0` for simulated paths.
    pub start_date: NaiveDate,
    pub density: DensitySettings,
    pub stats: StatsSettings,
    pub calibration: CalibrationOptions,
    pub input: Option<PathBuf>,
    /// Not echoed into reports, so a run's content is independent of where it
    /// is written.
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            contract: None,
            theta: None,
            cos: CosSettings::default(),
            sim: SimConfig::default(),
            mc: false,
            sweep_alpha: Vec::new(),
            horizon_days: None,
            start_date: NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date"),
            density: DensitySettings::default(),
            stats: StatsSettings::default(),
            calibration: CalibrationOptions::default(),
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn model(&self) -> Result<ModelParams> {
        self.model.ok_or_else(|| Error::InvalidParameter("config has no `model`".into()))
    }

    pub fn contract(&self) -> Result<ContractSpec> {
        let c = self.contract.ok_or_else(|| Error::InvalidParameter("config has no `contract`".into()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn horizon(&self) -> Result<u32> {
        self.horizon_days
            .or(self.contract.map(|c| c.horizon_t))
            .filter(|h| *h > 0)
            .ok_or_else(|| {
                Error::InvalidParameter("config needs `horizon_days` or a `contract`".into())
            })
    }

    pub fn measure_label(&self) -> &'static str {
        match self.sim.measure {
            Measure::P => "p",
            Measure::Q(_) => "q",
        }
    }
}
