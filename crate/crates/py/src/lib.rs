//! Python bindings: model types as classes, reports returned as plain dicts.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pythonize::pythonize;
use serde::Serialize;

use weathercat::calibration::{self, CalibrationOptions, DailySeries, KsReference, TimeChangeInit, VolShape};
use weathercat::cos::{auto_grid, DEFAULT_L_MULT, DEFAULT_TERMS};
use weathercat::simulator::SimConfig;
use weathercat::{charfun, esscher, seasonal, simulator, CatMode};

create_exception!(pyweathercat, WeathercatError, PyValueError);

fn to_py(e: weathercat::Error) -> PyErr {
    WeathercatError::new_err(e.to_string())
}

fn dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    Ok(pythonize(py, value)?)
}

#[pyclass(name = "FourCoeffs", module = "pyweathercat", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyFourCoeffs(seasonal::FourCoeffs);

#[pymethods]
impl PyFourCoeffs {
    /// Coefficients of `k0 + k1·t + k2·sin(ωt) + k3·cos(ωt)`, ω = 2π/365.
    #[new]
    fn new(k0: f64, k1: f64, k2: f64, k3: f64) -> Self {
        Self(seasonal::FourCoeffs::new(k0, k1, k2, k3))
    }

    #[getter]
    fn coeffs(&self) -> [f64; 4] {
        self.0.as_array()
    }

    fn eval(&self, t: f64) -> f64 {
        self.0.eval(t)
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d] = self.0.as_array();
        format!("FourCoeffs({a}, {b}, {c}, {d})")
    }
}

#[pyclass(name = "GammaTimeChange", module = "pyweathercat", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGammaTimeChange(charfun::GammaTimeChange);

#[pymethods]
impl PyGammaTimeChange {
    #[new]
    fn new(a: f64, b: f64, mu1: f64) -> PyResult<Self> {
        Ok(Self(charfun::GammaTimeChange::new(a, b, mu1).map_err(to_py)?))
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    #[getter]
    fn mu1(&self) -> f64 {
        self.0.mu1
    }

    /// First four cumulants of `V_1`.
    fn cumulants(&self) -> [f64; 4] {
        self.0.cumulants()
    }

    /// Open interval of θ with `A₁(θ) > 0`.
    fn admissible_interval(&self) -> (f64, f64) {
        self.0.admissible_interval()
    }

    fn esscher_transformed(&self, theta: f64) -> PyResult<Self> {
        Ok(Self(self.0.esscher_transformed(theta).map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        format!("GammaTimeChange(a={}, b={}, mu1={})", self.0.a, self.0.b, self.0.mu1)
    }
}

#[pyclass(name = "ModelParams", module = "pyweathercat", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyModelParams(charfun::ModelParams);

#[pymethods]
impl PyModelParams {
    /// Validates volatility positivity on `[0, horizon]`.
    #[new]
    #[pyo3(signature = (alpha, t0, seasonal, vol, timechange, horizon = 365.0))]
    fn new(
        alpha: f64,
        t0: f64,
        seasonal: &PyFourCoeffs,
        vol: &PyFourCoeffs,
        timechange: &PyGammaTimeChange,
        horizon: f64,
    ) -> PyResult<Self> {
        charfun::ModelParams::new(alpha, t0, seasonal.0, vol.0, timechange.0, horizon)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.0.t0
    }

    #[getter]
    fn seasonal(&self) -> PyFourCoeffs {
        PyFourCoeffs(self.0.seasonal)
    }

    #[getter]
    fn vol(&self) -> PyFourCoeffs {
        PyFourCoeffs(self.0.vol)
    }

    #[getter]
    fn timechange(&self) -> PyGammaTimeChange {
        PyGammaTimeChange(self.0.timechange)
    }

    /// Expected temperature at day `t` with the noise switched off.
    fn deterministic(&self, t: f64) -> f64 {
        self.0.deterministic(t)
    }

    fn with_alpha(&self, alpha: f64) -> Self {
        Self(charfun::ModelParams { alpha, ..self.0 })
    }
}

#[pyclass(name = "ContractSpec", module = "pyweathercat", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyContractSpec(weathercat::ContractSpec);

#[pymethods]
impl PyContractSpec {
    #[new]
    #[pyo3(signature = (horizon_t, k1_strike, k2_strike, d1 = 1.0, d2 = 1.0, rate_r = 0.0))]
    fn new(horizon_t: u32, k1_strike: f64, k2_strike: f64, d1: f64, d2: f64, rate_r: f64) -> PyResult<Self> {
        let c = weathercat::ContractSpec { horizon_t, k1_strike, k2_strike, d1, d2, rate_r };
        c.validate().map_err(to_py)?;
        Ok(Self(c))
    }

    #[getter]
    fn horizon_t(&self) -> u32 {
        self.0.horizon_t
    }

    fn payoff(&self, cat: f64) -> f64 {
        self.0.payoff(cat)
    }
}

#[pyfunction]
fn k1(t: f64, alpha: f64, seasonal: &PyFourCoeffs) -> PyResult<f64> {
    seasonal::k1(t, alpha, &seasonal.0).map_err(to_py)
}

#[pyfunction]
fn k2(horizon: f64, alpha: f64, vol: &PyFourCoeffs) -> PyResult<f64> {
    seasonal::k2(horizon, alpha, &vol.0).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (u, t, model, theta = 0.0))]
fn charfun_t(u: f64, t: f64, model: &PyModelParams, theta: f64) -> PyResult<Complex64> {
    charfun::charfun_t(u, t, &model.0, theta).map_err(to_py)
}

fn cat_mode(name: &str) -> PyResult<CatMode> {
    match name {
        "exact_kernel" => Ok(CatMode::ExactKernel),
        "product" => Ok(CatMode::Product),
        other => Err(PyValueError::new_err(format!("unknown CAT mode {other:?}"))),
    }
}

#[pyfunction]
#[pyo3(signature = (u, model, horizon_days, theta = 0.0, mode = "exact_kernel"))]
fn charfun_cat(u: f64, model: &PyModelParams, horizon_days: u32, theta: f64, mode: &str) -> PyResult<Complex64> {
    charfun::charfun_cat(u, &model.0, theta, horizon_days, cat_mode(mode)?).map_err(to_py)
}

/// Mean and variance of the CAT index.
#[pyfunction]
#[pyo3(signature = (model, horizon_days, theta = 0.0))]
fn cat_cumulants(model: &PyModelParams, horizon_days: u32, theta: f64) -> PyResult<(f64, f64)> {
    charfun::cat_cumulants(&model.0, theta, horizon_days).map_err(to_py)
}

#[pyfunction]
fn cumulant_v_prime(theta: f64, timechange: &PyGammaTimeChange) -> PyResult<f64> {
    esscher::cumulant_v_prime(theta, &timechange.0).map_err(to_py)
}

#[pyfunction]
fn solve_theta<'py>(py: Python<'py>, model: &PyModelParams, rate: f64, horizon: f64) -> PyResult<Bound<'py, PyAny>> {
    let s = py.detach(|| esscher::solve_theta(&model.0, rate, horizon)).map_err(to_py)?;
    dict(py, &s)
}

#[derive(Serialize)]
struct Priced {
    theta: f64,
    #[serde(flatten)]
    report: weathercat::cos::PriceReport,
}

/// COS price of the strangle; θ is solved from the martingale condition when omitted.
#[pyfunction]
#[pyo3(signature = (contract, model, theta = None, terms = DEFAULT_TERMS, l_mult = DEFAULT_L_MULT))]
fn price_strangle<'py>(
    py: Python<'py>,
    contract: &PyContractSpec,
    model: &PyModelParams,
    theta: Option<f64>,
    terms: usize,
    l_mult: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let (c, p) = (contract.0, model.0);
    let priced = py
        .detach(|| {
            let theta = match theta {
                Some(t) => t,
                None => esscher::solve_theta(&p, c.rate_r, c.horizon_t as f64)?.theta,
            };
            let grid = auto_grid(&p, theta, c.horizon_t, l_mult, terms, terms)?;
            let report = weathercat::cos::price_strangle(&c, &p, theta, &grid)?;
            Ok(Priced { theta, report })
        })
        .map_err(to_py)?;
    dict(py, &priced)
}

/// Monte Carlo strangle price under `Q^θ` as `(mean, stderr)`.
#[pyfunction]
#[pyo3(signature = (contract, model, theta, n_paths = 100_000, seed = 0, substeps = 4))]
fn mc_price_cat(
    py: Python<'_>,
    contract: &PyContractSpec,
    model: &PyModelParams,
    theta: f64,
    n_paths: usize,
    seed: u64,
    substeps: u32,
) -> PyResult<(f64, f64)> {
    let cfg = SimConfig { n_paths, seed, substeps, ..Default::default() };
    let (c, p) = (contract.0, model.0);
    let est = py.detach(|| simulator::mc_price_cat(&c, &p, theta, &cfg)).map_err(to_py)?;
    Ok((est.mean, est.stderr))
}

/// Daily temperatures for days `0..=horizon_days` of one path under `Q^θ`.
#[pyfunction]
#[pyo3(signature = (model, horizon_days, seed = 0, path = 0, theta = 0.0, substeps = 4))]
fn simulate_path(
    py: Python<'_>,
    model: &PyModelParams,
    horizon_days: u32,
    seed: u64,
    path: u64,
    theta: f64,
    substeps: u32,
) -> PyResult<Vec<f64>> {
    let measure = if theta == 0.0 { simulator::Measure::P } else { simulator::Measure::Q(theta) };
    let cfg = SimConfig { seed, substeps, measure, ..Default::default() };
    let p = model.0;
    let points = py
        .detach(|| simulator::simulate_path(&p, &cfg, horizon_days as f64, path))
        .map_err(to_py)?;
    Ok(points.into_iter().map(|(_, v)| v).collect())
}

#[pyfunction]
fn fit_seasonal<'py>(py: Python<'py>, values: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let fit = calibration::fit_seasonal_values(&values).map_err(to_py)?;
    let out = dict(py, &fit)?;
    out.set_item("residuals", fit.residuals)?;
    Ok(out)
}

#[pyfunction]
fn fit_alpha<'py>(py: Python<'py>, residuals: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    dict(py, &calibration::fit_alpha(&residuals).map_err(to_py)?)
}

/// Time-change fit of the seasonal residuals. Passing `vol` fixes the
/// volatility; otherwise `shape` is `"seasonal"` or `"constant"`.
#[pyfunction]
#[pyo3(signature = (residuals, alpha, vol = None, shape = "seasonal"))]
fn fit_timechange<'py>(
    py: Python<'py>,
    residuals: Vec<f64>,
    alpha: f64,
    vol: Option<&PyFourCoeffs>,
    shape: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let shape = match (vol, shape) {
        (Some(v), _) => VolShape::Known(v.0),
        (None, "seasonal") => VolShape::Seasonal,
        (None, "constant") => VolShape::Constant,
        (None, other) => return Err(PyValueError::new_err(format!("unknown volatility shape {other:?}"))),
    };
    let fit = py
        .detach(|| calibration::fit_timechange(&residuals, alpha, TimeChangeInit::MethodOfMoments, shape))
        .map_err(to_py)?;
    dict(py, &fit)
}

/// Full calibration of a gap-free daily series starting at `start` (ISO date).
#[pyfunction]
#[pyo3(signature = (values, start = "2013-01-01"))]
fn calibrate<'py>(py: Python<'py>, values: Vec<f64>, start: &str) -> PyResult<Bound<'py, PyAny>> {
    let start = start
        .parse()
        .map_err(|e| PyValueError::new_err(format!("bad start date {start:?}: {e}")))?;
    let series = DailySeries::from_values(start, values);
    let report = py
        .detach(|| calibration::calibrate(&series, CalibrationOptions::default()))
        .map_err(to_py)?;
    dict(py, &report)
}

/// Reads a `date,tavg` or `date,tmax,tmin` CSV, filling short gaps.
#[pyfunction]
fn ingest_csv<'py>(py: Python<'py>, path: std::path::PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let s = calibration::ingest_csv_path(path).map_err(to_py)?;
    let out = pyo3::types::PyDict::new(py);
    let dates: Vec<String> = s.dates.iter().map(|d| d.to_string()).collect();
    out.set_item("dates", dates)?;
    out.set_item("values", s.values)?;
    out.set_item("missing_mask", s.missing_mask)?;
    out.set_item("repaired", s.repaired)?;
    Ok(out.into_any())
}

#[pyfunction]
fn summary_stats<'py>(py: Python<'py>, values: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    dict(py, &calibration::summary_stats(&values).map_err(to_py)?)
}

/// KS normality test; `reference` is `"standardized"` or `"raw"`.
#[pyfunction]
#[pyo3(signature = (values, reference = "standardized"))]
fn ks_normality<'py>(py: Python<'py>, values: Vec<f64>, reference: &str) -> PyResult<Bound<'py, PyAny>> {
    let reference = match reference {
        "standardized" => KsReference::Standardized,
        "raw" => KsReference::Raw,
        other => return Err(PyValueError::new_err(format!("unknown KS reference {other:?}"))),
    };
    dict(py, &calibration::ks_normality(&values, reference).map_err(to_py)?)
}

#[pymodule]
fn pyweathercat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("WeathercatError", m.py().get_type::<WeathercatError>())?;
    m.add_class::<PyFourCoeffs>()?;
    m.add_class::<PyGammaTimeChange>()?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyContractSpec>()?;
    m.add_function(wrap_pyfunction!(k1, m)?)?;
    m.add_function(wrap_pyfunction!(k2, m)?)?;
    m.add_function(wrap_pyfunction!(charfun_t, m)?)?;
    m.add_function(wrap_pyfunction!(charfun_cat, m)?)?;
    m.add_function(wrap_pyfunction!(cat_cumulants, m)?)?;
    m.add_function(wrap_pyfunction!(cumulant_v_prime, m)?)?;
    m.add_function(wrap_pyfunction!(solve_theta, m)?)?;
    m.add_function(wrap_pyfunction!(price_strangle, m)?)?;
    m.add_function(wrap_pyfunction!(mc_price_cat, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(fit_seasonal, m)?)?;
    m.add_function(wrap_pyfunction!(fit_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(fit_timechange, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(ingest_csv, m)?)?;
    m.add_function(wrap_pyfunction!(summary_stats, m)?)?;
    m.add_function(wrap_pyfunction!(ks_normality, m)?)?;
    Ok(())
}
