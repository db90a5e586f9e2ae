use std::path::Path;

use chrono::Duration;
use serde::Serialize;

use super::config::{DensityMeasure, RunConfig};
use super::output::{emit, fmt_num, to_json};
use super::CliError;
use crate::calibration::{
    calibrate, histogram, ingest_csv_path, kde_silverman, ks_normality, summary_stats,
    CalibrationReport, DailySeries, Histogram, KdeEstimate, KsReference, KsResult, SummaryStats,
};
use crate::charfun::{self, CatMode, ModelParams};
use crate::cos::{self, auto_grid, price_strangle, price_strangle_with_mode, ContractSpec, CosGrid, PriceReport};
use crate::error::{Error, Result};
use crate::esscher::{solve_theta, ThetaSolution};
use crate::simulator::{mc_price_cat, simulate_paths, McEstimate};

fn input_path<'a>(config: &'a RunConfig, arg: Option<&'a Path>) -> Result<&'a Path> {
    arg.or(config.input.as_deref())
        .ok_or_else(|| Error::InvalidParameter("no input CSV given".into()))
}

fn ingest(config: &RunConfig, arg: Option<&Path>) -> std::result::Result<DailySeries, CliError> {
    let path = input_path(config, arg).map_err(CliError::input)?;
    ingest_csv_path(path).map_err(CliError::input)
}

fn write_json<T: Serialize>(config: &RunConfig, value: &T) -> std::result::Result<(), CliError> {
    let text = to_json(value).map_err(CliError::input)?;
    emit(config.output.as_deref(), &text).map_err(CliError::input)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    report: CalibrationReport,
}

pub fn fit(config: &RunConfig, csv: Option<&Path>) -> std::result::Result<(), CliError> {
    let series = ingest(config, csv)?;
    let report = calibrate(&series, config.calibration).map_err(CliError::fit)?;
    write_json(config, &FitOutput { config, report })
}

#[derive(Serialize)]
struct ThetaOutput {
    value: f64,
    /// `pinned` or `solved`.
    source: &'static str,
    solution: Option<ThetaSolution>,
}

#[derive(Serialize)]
struct Convergence {
    terms_doubled: f64,
    terms_doubled_rel_change: f64,
    l_mult_widened: f64,
    l_mult_widened_rel_change: f64,
}

#[derive(Serialize)]
struct McOutput {
    price: f64,
    stderr: f64,
    n_paths: usize,
    seed: u64,
    abs_diff: f64,
    within_3_stderr: bool,
}

/// The per-day product approximation of the CAT law, compared with the
/// exact kernel and, when simulated, with Monte Carlo.
#[derive(Serialize)]
struct ProductMode {
    price: f64,
    rel_diff_vs_exact: f64,
    /// Largest `|φ_product − φ_exact|` over the COS frequencies in use.
    max_charfun_gap: f64,
    mc_abs_diff: Option<f64>,
    mc_within_3_stderr: Option<bool>,
}

#[derive(Serialize)]
struct SweepRow {
    alpha: f64,
    theta: f64,
    price: f64,
}

#[derive(Serialize)]
struct Sweep {
    rows: Vec<SweepRow>,
    monotone: bool,
}

#[derive(Serialize)]
struct PriceOutput<'a> {
    config: &'a RunConfig,
    theta: ThetaOutput,
    grid: CosGrid,
    cat_mean: f64,
    cat_variance: f64,
    #[serde(flatten)]
    report: PriceReport,
    convergence: Convergence,
    product_mode: ProductMode,
    mc: Option<McOutput>,
    sweep_alpha: Option<Sweep>,
}

fn resolve_theta(config: &RunConfig, p: &ModelParams, contract: &ContractSpec) -> Result<ThetaOutput> {
    match config.theta {
        Some(theta) => {
            p.timechange.esscher_transformed(theta)?;
            Ok(ThetaOutput { value: theta, source: "pinned", solution: None })
        }
        None => {
            let s = solve_theta(p, contract.rate_r, contract.horizon_t as f64)?;
            Ok(ThetaOutput { value: s.theta, source: "solved", solution: Some(s) })
        }
    }
}

fn grid_for(config: &RunConfig, p: &ModelParams, theta: f64, horizon: u32, terms: usize, l_mult: f64) -> Result<CosGrid> {
    match config.cos.grid {
        Some(g) => CosGrid::new(g.b1, g.b2, terms, terms),
        None => auto_grid(p, theta, horizon, l_mult, terms, terms),
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 { 0.0 } else { (a - b).abs() / scale }
}

pub fn price(config: &RunConfig) -> std::result::Result<(), CliError> {
    let p = config.model().map_err(CliError::input)?;
    let contract = config.contract().map_err(CliError::input)?;
    p.validate(contract.horizon_t as f64).map_err(CliError::input)?;
    let horizon = contract.horizon_t;
    let (terms, l_mult) = (config.cos.terms, config.cos.l_mult);

    let theta = resolve_theta(config, &p, &contract).map_err(CliError::solver)?;
    let grid = grid_for(config, &p, theta.value, horizon, terms, l_mult).map_err(CliError::solver)?;
    let (cat_mean, cat_variance) =
        charfun::cat_cumulants(&p, theta.value, horizon).map_err(CliError::solver)?;
    let report = price_strangle(&contract, &p, theta.value, &grid).map_err(CliError::solver)?;

    let doubled = grid_for(config, &p, theta.value, horizon, 2 * terms, l_mult)
        .and_then(|g| price_strangle(&contract, &p, theta.value, &g))
        .map_err(CliError::solver)?
        .price;
    let widened = grid_for(config, &p, theta.value, horizon, terms, l_mult + 2.0)
        .and_then(|g| price_strangle(&contract, &p, theta.value, &g))
        .map_err(CliError::solver)?
        .price;
    let convergence = Convergence {
        terms_doubled: doubled,
        terms_doubled_rel_change: relative_change(doubled, report.price),
        l_mult_widened: widened,
        l_mult_widened_rel_change: relative_change(widened, report.price),
    };

    let product_price = price_strangle_with_mode(&contract, &p, theta.value, &grid, CatMode::Product)
        .map_err(CliError::solver)?
        .price;
    let max_charfun_gap = (0..grid.n1.max(grid.n2))
        .map(|k| {
            let u = k as f64 * std::f64::consts::PI / grid.width();
            let exact = charfun::charfun_cat(u, &p, theta.value, horizon, CatMode::ExactKernel)?;
            let product = charfun::charfun_cat(u, &p, theta.value, horizon, CatMode::Product)?;
            Ok((exact - product).norm())
        })
        .collect::<Result<Vec<f64>>>()
        .map_err(CliError::solver)?
        .into_iter()
        .fold(0.0, f64::max);
    let mut product_mode = ProductMode {
        price: product_price,
        rel_diff_vs_exact: relative_change(product_price, report.price),
        max_charfun_gap,
        mc_abs_diff: None,
        mc_within_3_stderr: None,
    };

    let mc = if config.mc {
        let McEstimate { mean, stderr } =
            mc_price_cat(&contract, &p, theta.value, &config.sim).map_err(CliError::solver)?;
        let abs_diff = (mean - report.price).abs();
        let product_diff = (mean - product_price).abs();
        product_mode.mc_abs_diff = Some(product_diff);
        product_mode.mc_within_3_stderr = Some(product_diff <= 3.0 * stderr);
        Some(McOutput {
            price: mean,
            stderr,
            n_paths: config.sim.n_paths,
            seed: config.sim.seed,
            abs_diff,
            within_3_stderr: abs_diff <= 3.0 * stderr,
        })
    } else {
        None
    };

    let sweep_alpha = if config.sweep_alpha.is_empty() {
        None
    } else {
        let mut alphas = config.sweep_alpha.clone();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let rows = alphas
            .iter()
            .map(|&alpha| {
                let q = ModelParams { alpha, ..p };
                q.validate(horizon as f64)?;
                let th = resolve_theta(config, &q, &contract)?.value;
                let g = grid_for(config, &q, th, horizon, terms, l_mult)?;
                Ok(SweepRow { alpha, theta: th, price: price_strangle(&contract, &q, th, &g)?.price })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(CliError::solver)?;
        let increasing = rows.windows(2).all(|w| w[1].price >= w[0].price);
        let decreasing = rows.windows(2).all(|w| w[1].price <= w[0].price);
        Some(Sweep { rows, monotone: increasing || decreasing })
    };

    write_json(
        config,
        &PriceOutput {
            config,
            theta,
            grid,
            cat_mean,
            cat_variance,
            report,
            convergence,
            product_mode,
            mc,
            sweep_alpha,
        },
    )
}

pub fn simulate(config: &RunConfig) -> std::result::Result<(), CliError> {
    let p = config.model().map_err(CliError::input)?;
    let horizon = config.horizon().map_err(CliError::input)?;
    if config.sim.step != 1.0 {
        return Err(CliError::input(Error::InvalidParameter(
            "simulate writes one row per day and needs `sim.step` = 1".into(),
        )));
    }
    let paths = simulate_paths(&p, &config.sim, horizon as f64).map_err(CliError::input)?;
    let mut text = String::with_capacity(paths.len() * (horizon as usize + 1) * 28);
    text.push_str("date,path_id,temperature\n");
    for (id, path) in paths.iter().enumerate() {
        for (day, (_, temp)) in path.iter().enumerate() {
            let date = config.start_date + Duration::days(day as i64);
            text.push_str(&format!("{date},{id},{}\n", fmt_num(*temp)));
        }
    }
    emit(config.output.as_deref(), &text).map_err(CliError::input)
}

pub fn density(config: &RunConfig) -> std::result::Result<(), CliError> {
    let p = config.model().map_err(CliError::input)?;
    let horizon = config.horizon().map_err(CliError::input)?;
    p.validate(horizon as f64).map_err(CliError::input)?;
    let points = config.density.points;
    if points < 2 {
        return Err(CliError::input(Error::InvalidParameter("density needs at least 2 points".into())));
    }
    let theta = match config.density.measure {
        DensityMeasure::P => 0.0,
        DensityMeasure::Q => {
            let contract = config.contract().map_err(CliError::input)?;
            resolve_theta(config, &p, &contract).map_err(CliError::solver)?.value
        }
    };
    let (terms, l_mult) = (config.cos.terms, config.cos.l_mult);
    let grid = grid_for(config, &p, theta, horizon, terms, l_mult).map_err(CliError::solver)?;
    let coeffs = cos::cos_coefficients_from_log(
        |u| charfun::cat_log_charfun(u, &p, theta, horizon, CatMode::ExactKernel),
        &grid,
        terms,
    )
    .map_err(CliError::solver)?;
    let mut text = String::from("x,density\n");
    let step = grid.width() / (points - 1) as f64;
    for i in 0..points {
        let x = if i + 1 == points { grid.b2 } else { grid.b1 + i as f64 * step };
        let f = cos::density_from_coefficients(&coeffs, &grid, x).map_err(CliError::solver)?;
        text.push_str(&format!("{},{}\n", fmt_num(x), fmt_num(f)));
    }
    emit(config.output.as_deref(), &text).map_err(CliError::input)
}

#[derive(Serialize)]
struct StatsOutput<'a> {
    config: &'a RunConfig,
    n: usize,
    repaired: usize,
    summary: SummaryStats,
    ks_raw: Option<KsResult>,
    ks_standardized: Option<KsResult>,
    histogram: Histogram,
    kde: Option<KdeEstimate>,
}

pub fn stats(config: &RunConfig, csv: Option<&Path>) -> std::result::Result<(), CliError> {
    let series = ingest(config, csv)?;
    let values = &series.values;
    let summary = summary_stats(values).map_err(CliError::input)?;
    let out = StatsOutput {
        config,
        n: series.len(),
        repaired: series.repaired,
        summary,
        ks_raw: ks_normality(values, KsReference::Raw).ok(),
        ks_standardized: ks_normality(values, KsReference::Standardized).ok(),
        histogram: histogram(values, config.stats.bins).map_err(CliError::input)?,
        kde: kde_silverman(values, config.stats.kde_points).ok(),
    };
    write_json(config, &out)
}
