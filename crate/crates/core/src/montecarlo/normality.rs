//! Distributional distance to the standard normal and replicate summaries.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{CoreError, Result};

/// Standard normal CDF.
pub fn normal_cdf(t: f64) -> f64 {
    Normal::standard().cdf(t)
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// One-sample Kolmogorov–Smirnov distance to the standard normal:
/// `sup_t |F_M(t) - Phi(t)|` via the order-statistic formula
/// `max_i max(i/M - Phi(v_(i)), Phi(v_(i)) - (i-1)/M)`.
pub fn ks_normal_distance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(CoreError::InvalidArgument(
            "KS distance needs at least two values".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite {
            what: "KS input value".into(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let m = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &v) in sorted.iter().enumerate() {
        let phi = normal_cdf(v);
        let upper = (i + 1) as f64 / m - phi;
        let lower = phi - i as f64 / m;
        sup = sup.max(upper).max(lower);
    }
    Ok(sup)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_threshold_alpha01(m: usize) -> f64 {
    1.63 / (m as f64).sqrt()
}

/// Aggregate of standardized replicate statistics against the standard
/// normal: moments, KS distance with its 1% critical value, and the QQ grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalityReport {
    pub m: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_distance: f64,
    pub ks_threshold_alpha01: f64,
    /// All replicate values collapsed to a point (zero sample variance); the
    /// KS distance is then 0.5 and the report is unusable as a normality
    /// check.
    pub degenerate: bool,
    /// `(Phi^-1((i - 0.5)/M), v_(i))` pairs; both columns are sorted.
    pub qq_pairs: Vec<(f64, f64)>,
    pub stats: Vec<f64>,
}

impl NormalityReport {
    pub fn from_values(stats: Vec<f64>) -> Result<Self> {
        let m = stats.len();
        if m < 2 {
            return Err(CoreError::InvalidArgument(
                "normality report needs at least two replicates".into(),
            ));
        }
        let mf = m as f64;
        let mean = stats.iter().sum::<f64>() / mf;
        let central = |p: i32| stats.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / mf;
        let m2 = central(2);
        let variance = stats.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (mf - 1.0);
        let degenerate = m2 == 0.0;
        let (skewness, excess_kurtosis) = if degenerate {
            (0.0, 0.0)
        } else {
            (central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0)
        };
        let ks_distance = ks_normal_distance(&stats)?;
        let mut sorted = stats.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let qq_pairs = sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| (normal_quantile((i as f64 + 0.5) / mf), v))
            .collect();
        Ok(Self {
            m,
            mean,
            variance,
            skewness,
            excess_kurtosis,
            ks_distance,
            ks_threshold_alpha01: ks_threshold_alpha01(m),
            degenerate,
            qq_pairs,
            stats,
        })
    }
}
