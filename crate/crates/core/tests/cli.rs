mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use weathercat::simulator::{simulate_path, SimConfig};

const BIN: &str = env!("CARGO_BIN_EXE_weathercat");

fn model_json() -> Value {
    json!({
        "alpha": 0.25, "t0": 5.0,
        "seasonal": {"k0": 7.9733, "k1": 0.0008223, "k2": -5.8796, "k3": -12.866},
        "vol": {"k0": 3.0, "k1": 0.0, "k2": 0.5, "k3": 0.5},
        "timechange": {"a": 1.5, "b": 1.0, "mu1": 0.2}
    })
}

fn contract_json(d: f64) -> Value {
    json!({"horizon_t": 30, "k1_strike": 120.0, "k2_strike": 40.0, "d1": d, "d2": d, "rate_r": 0.03})
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_to(config: &Path, out: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn synthetic_csv(dir: &Path, days: usize) -> PathBuf {
    let p = common::calibration_truth();
    let path = simulate_path(&p, &SimConfig { seed: 4, ..Default::default() }, (days - 1) as f64, 0).unwrap();
    let start = chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let mut text = String::from("date,tavg\n");
    for (i, (_, v)) in path.iter().enumerate() {
        text.push_str(&format!("{},{v}\n", start + chrono::Duration::days(i as i64)));
    }
    let file = dir.join("obs.csv");
    fs::write(&file, text).unwrap();
    file
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn fit_reports_seasonal_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synthetic_csv(dir.path(), 2000);
    let out = dir.path().join("fit.json");
    let cfg = write_config(dir.path(), "cfg.json", &json!({}));
    let res = run_to(&cfg, &out, &["fit", csv.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(&out);
    let coefs = report["seasonal"]["coefficients"].as_array().unwrap();
    assert_eq!(coefs.len(), 4);
    for c in coefs {
        for key in ["estimate", "std_error", "ci_low", "ci_high"] {
            assert!(c[key].is_number(), "{key} missing in {c}");
        }
    }
    assert!(report["alpha"]["alpha"].is_number());
    assert!(report["timechange"]["a"].is_number());
    assert!(report["config"].is_object());
}

#[test]
fn fit_rejects_long_gap() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("date,tavg\n");
    let start = chrono::NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    for i in (0..40).chain(48..100) {
        text.push_str(&format!("{},{}\n", start + chrono::Duration::days(i), 5.0 + (i % 7) as f64));
    }
    let csv = dir.path().join("gap.csv");
    fs::write(&csv, text).unwrap();
    let res = run(&["fit", csv.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("gap"), "{err}");
}

#[test]
fn missing_input_is_an_input_error() {
    let res = run(&["fit", "/nonexistent/file.csv"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run(&["--config", "/nonexistent/cfg.json", "price"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn zero_tick_prices_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &json!({"model": model_json(), "contract": contract_json(0.0)}));
    let out = dir.path().join("price.json");
    let res = run_to(&cfg, &out, &["price"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(&out);
    assert_eq!(report["price"].as_f64(), Some(0.0));
    assert_eq!(report["theta"]["source"], "solved");
}

#[test]
fn price_with_monte_carlo_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &json!({
            "model": model_json(),
            "contract": contract_json(1.0),
            "sweep_alpha": [0.5, 0.1, 0.25]
        }),
    );
    let out = dir.path().join("price.json");
    let res = run_to(&cfg, &out, &["--mc", "--paths", "20000", "--seed", "11", "price"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(&out);
    let mc = &report["mc"];
    assert_eq!(mc["n_paths"], 20000);
    assert_eq!(mc["seed"], 11);
    assert_eq!(mc["within_3_stderr"], true, "{mc}");
    let product = &report["product_mode"];
    for key in ["price", "rel_diff_vs_exact", "max_charfun_gap", "mc_abs_diff"] {
        assert!(product[key].is_number(), "{key} missing in {product}");
    }
    let rows = report["sweep_alpha"]["rows"].as_array().unwrap();
    let alphas: Vec<f64> = rows.iter().map(|r| r["alpha"].as_f64().unwrap()).collect();
    assert_eq!(alphas, vec![0.1, 0.25, 0.5]);
    assert_eq!(report["sweep_alpha"]["monotone"], true);
    assert!(report["convergence"]["terms_doubled_rel_change"].as_f64().unwrap() < 1e-6);
}

#[test]
fn pinned_theta_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &json!({"model": model_json(), "contract": contract_json(1.0), "theta": 0.0}),
    );
    let out = dir.path().join("price.json");
    assert_eq!(run_to(&cfg, &out, &["price"]).status.code(), Some(0));
    let report = read_json(&out);
    assert_eq!(report["theta"]["source"], "pinned");
    assert_eq!(report["theta"]["value"].as_f64(), Some(0.0));
}

#[test]
fn unreachable_martingale_target_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = model_json();
    model["t0"] = json!(1.0e9);
    let cfg = write_config(dir.path(), "cfg.json", &json!({"model": model, "contract": contract_json(1.0)}));
    let res = run_to(&cfg, &dir.path().join("p.json"), &["price"]);
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!dir.path().join("p.json").exists());
}

#[test]
fn simulate_shapes_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &json!({"model": model_json(), "horizon_days": 20, "sim": {"n_paths": 100}}),
    );
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let res = run_to(&cfg, out, &["--seed", "5", "simulate"]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let rows = csv_rows(&a);
    assert_eq!(rows.len(), 100 * 21);
    assert_eq!(rows[0][0], "2018-01-01");
    assert_eq!(rows[21][1], "1");

    let c = dir.path().join("c.csv");
    run_to(&cfg, &c, &["--seed", "6", "simulate"]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn zero_volatility_follows_deterministic_curve() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = model_json();
    model["vol"] = json!({"k0": 0.0, "k1": 0.0, "k2": 0.0, "k3": 0.0});
    let cfg = write_config(dir.path(), "cfg.json", &json!({"model": model.clone(), "horizon_days": 30}));
    let out = dir.path().join("sim.csv");
    let res = run_to(&cfg, &out, &["simulate"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let p: weathercat::ModelParams = serde_json::from_value(model).unwrap();
    for (day, row) in csv_rows(&out).iter().enumerate() {
        let v: f64 = row[2].parse().unwrap();
        let m = p.deterministic(day as f64);
        assert!((v - m).abs() <= 1e-8 * m.abs().max(1.0), "day {day}: {v} vs {m}");
    }
}

#[test]
fn simulate_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &json!({"horizon_days": 30}));
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "simulate"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "bad.json", &json!({"model": model_json(), "unknown_key": 1}));
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "simulate"]).status.code(), Some(2));
}

fn trapezoid(rows: &[Vec<String>]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

#[test]
fn density_integrates_to_one_under_both_measures() {
    let dir = tempfile::tempdir().unwrap();
    for measure in ["p", "q"] {
        let cfg = write_config(
            dir.path(),
            "cfg.json",
            &json!({
                "model": model_json(),
                "contract": contract_json(1.0),
                "horizon_days": 30,
                "density": {"measure": measure}
            }),
        );
        let out = dir.path().join(format!("{measure}.csv"));
        let res = run_to(&cfg, &out, &["density"]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        let rows = csv_rows(&out);
        assert_eq!(rows.len(), 401);
        let mass = trapezoid(&rows);
        assert!((mass - 1.0).abs() < 1e-3, "{measure}: {mass}");
    }
}

#[test]
fn stats_on_constant_and_varying_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("date,tmax,tmin\n");
    for d in 1..=31 {
        text.push_str(&format!("2017-01-{d:02},4.0,2.0\n"));
    }
    let flat = dir.path().join("flat.csv");
    fs::write(&flat, text).unwrap();
    let out = dir.path().join("flat.json");
    let cfg = write_config(dir.path(), "cfg.json", &json!({}));
    let res = run_to(&cfg, &out, &["stats", flat.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(&out);
    assert_eq!(report["summary"]["sd"].as_f64(), Some(0.0));
    assert_eq!(report["summary"]["mean"].as_f64(), Some(3.0));
    assert!(report["summary"]["skewness"].is_null());
    let counts: u64 = report["histogram"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 31);

    let csv = synthetic_csv(dir.path(), 800);
    let out = dir.path().join("stats.json");
    assert_eq!(run_to(&cfg, &out, &["stats", csv.to_str().unwrap()]).status.code(), Some(0));
    let report = read_json(&out);
    assert_eq!(report["n"], 800);
    let counts: u64 = report["histogram"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 800);
    assert!(report["ks_raw"]["statistic"].is_number());
    assert_eq!(report["kde"]["x"].as_array().unwrap().len(), 256);
}

#[test]
fn numbers_carry_ten_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &json!({"model": model_json(), "contract": contract_json(1.0)}));
    let out = dir.path().join("price.json");
    assert_eq!(run_to(&cfg, &out, &["price"]).status.code(), Some(0));
    let price = read_json(&out)["price"].as_f64().unwrap();
    let rounded: f64 = format!("{price:.9e}").parse().unwrap();
    assert_eq!(price, rounded);
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
