use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Asymptotic 5% critical value of `√n·D`.
pub const KS_CRITICAL_5PCT: f64 = 1.3581;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation (divisor `n − 1`).
    pub sd: f64,
    /// Standardized third central moment; `None` for a constant series.
    pub skewness: Option<f64>,
    /// Standardized fourth central moment (3 for a normal law).
    pub kurtosis: Option<f64>,
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("summary needs n >= 2, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("series contains non-finite values".into()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    // Relative threshold so rounding noise around a constant is not reported
    // as a tiny but defined dispersion.
    let degenerate = m2.sqrt() <= 1e-14 * mean.abs().max(f64::MIN_POSITIVE);
    let (skewness, kurtosis) =
        if degenerate { (None, None) } else { (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2))) };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryStats {
        n,
        mean,
        min,
        max,
        sd: if degenerate { 0.0 } else { sd },
        skewness,
        kurtosis,
    })
}

/// What the empirical distribution is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsReference {
    /// Values standardized by the sample mean and sd, against N(0, 1).
    Standardized,
    /// Raw values against N(0, 1).
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsResult {
    pub reference: KsReference,
    pub n: usize,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject_5pct: bool,
}

/// One-sample Kolmogorov–Smirnov test of normality with asymptotic critical
/// value and p-value.
pub fn ks_normality(values: &[f64], reference: KsReference) -> Result<KsResult> {
    let n = values.len();
    if n < 30 {
        return Err(Error::InvalidParameter(format!("KS test needs n >= 30, got {n}")));
    }
    let mut sorted: Vec<f64> = match reference {
        KsReference::Raw => values.to_vec(),
        KsReference::Standardized => {
            let s = summary_stats(values)?;
            if s.sd == 0.0 {
                return Err(Error::InvalidParameter(
                    "cannot standardize a constant series".into(),
                ));
            }
            values.iter().map(|v| (v - s.mean) / s.sd).collect()
        }
    };
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("series contains non-finite values".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let nf = n as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = normal.cdf(*x);
            (((i + 1) as f64 / nf) - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let critical_value = KS_CRITICAL_5PCT / nf.sqrt();
    Ok(KsResult {
        reference,
        n,
        statistic,
        critical_value,
        p_value: kolmogorov_survival(nf.sqrt() * statistic),
        reject_5pct: statistic > critical_value,
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Theta-transformed series converges fast for small λ.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (c * j * j).exp()
            })
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 || values.is_empty() {
        return Err(Error::InvalidParameter("histogram needs data and at least one bin".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::InvalidParameter("series contains non-finite values".into()));
    }
    let (lo, hi) = if max > min { (min, max) } else { (min - 0.5, max + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0; bins];
    for v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeEstimate {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

/// Gaussian kernel density on an even grid of `points` nodes spanning the data
/// plus three bandwidths, with Silverman's rule-of-thumb bandwidth.
pub fn kde_silverman(values: &[f64], points: usize) -> Result<KdeEstimate> {
    let s = summary_stats(values)?;
    if points < 2 {
        return Err(Error::InvalidParameter("KDE grid needs at least two points".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { s.sd.min(iqr / 1.34) } else { s.sd };
    if spread <= 0.0 {
        return Err(Error::InvalidParameter("KDE undefined for a constant series".into()));
    }
    let bandwidth = 0.9 * spread * (s.n as f64).powf(-0.2);
    let (lo, hi) = (s.min - 3.0 * bandwidth, s.max + 3.0 * bandwidth);
    let step = (hi - lo) / (points - 1) as f64;
    let norm = 1.0 / (s.n as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let x: Vec<f64> = (0..points).map(|i| lo + i as f64 * step).collect();
    let density = x
        .iter()
        .map(|xi| {
            norm * sorted
                .iter()
                .map(|v| {
                    let z = (xi - v) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(KdeEstimate { bandwidth, x, density })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_undefined_shape() {
        let s = summary_stats(&[4.2; 10]).unwrap();
        assert_eq!(s.sd, 0.0);
        assert!(s.skewness.is_none() && s.kurtosis.is_none());
    }

    #[test]
    fn shape_is_affine_invariant() {
        let x: Vec<f64> = (0..50).map(|i| ((i * i) % 17) as f64 + 0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let (a, b) = (summary_stats(&x).unwrap(), summary_stats(&y).unwrap());
        assert!((a.skewness.unwrap() - b.skewness.unwrap()).abs() < 1e-12);
        assert!((a.kurtosis.unwrap() - b.kurtosis.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn critical_value_at_2145() {
        let cv = KS_CRITICAL_5PCT / (2145f64).sqrt();
        assert!((cv - 0.0293).abs() < 5e-4);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // Both series are valid near λ = 1.
        let lam: f64 = 1.0;
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lam * lam);
        let small: f64 = 1.0
            - (1..=20).map(|k| (c * ((2 * k - 1) as f64).powi(2)).exp()).sum::<f64>()
                * (2.0 * std::f64::consts::PI).sqrt()
                / lam;
        assert!((small - kolmogorov_survival(1.0)).abs() < 1e-12);
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(0.5) - 0.9639).abs() < 1e-4);
    }

    #[test]
    fn histogram_counts_everything() {
        let x: Vec<f64> = (0..101).map(|i| i as f64 / 7.0).collect();
        let h = histogram(&x, 9).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 101);
        assert_eq!(h.edges.len(), 10);
    }

    #[test]
    fn kde_integrates_to_one() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
        let k = kde_silverman(&x, 512).unwrap();
        let dx = k.x[1] - k.x[0];
        let area: f64 = k.density.iter().sum::<f64>() * dx;
        assert!((area - 1.0).abs() < 1e-3, "{area}");
    }
}
