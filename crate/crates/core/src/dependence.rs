//! Dependence coefficients and the empirical covariance-inequality checker.
//!
//! For a stationary pair process the pairwise coefficient `lambda_{ij}`
//! depends only on the lag, written `Lambda(s)`. The tail coefficient is
//! implemented in per-index form, `lambda_k = 2 * sum_{t >= k} Lambda(t)`:
//! the unnormalized double sum over all pairs at lag >= s grows with the
//! sample length for any fixed positive `Lambda`, while every bound that
//! consumes `lambda_k` uses it per index, so the per-index tail is the
//! computable object.
//!
//! The checker draws random bounded Lipschitz probes (affine maps clipped to
//! `[-1, 1]`), estimates `|Cov(f(Z_I), g(Z_J))|` over Monte Carlo sample
//! paths, and compares it against `Lip(f) Lip(g) sum_{I x J} lambda_{ij}`
//! with a three-standard-error slack.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng;
use crate::simulate::{simulate_with_rng, LinearProcessModel, RegressionModel};

/// Stationary dependence coefficients: per-lag `Lambda(s)` and per-index
/// tails `lambda_k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DependenceCoefficients {
    lag_lambda: Vec<f64>,
    lambda_k: Vec<f64>,
}

impl DependenceCoefficients {
    pub fn new(lag_lambda: Vec<f64>, lambda_k: Vec<f64>) -> Result<Self> {
        for v in lag_lambda.iter().chain(&lambda_k) {
            if !v.is_finite() {
                return Err(CoreError::NonFinite {
                    what: "dependence coefficient".into(),
                });
            }
            if *v < 0.0 {
                return Err(CoreError::InvalidArgument(
                    "dependence coefficients must be nonnegative".into(),
                ));
            }
        }
        for w in lambda_k.windows(2) {
            if w[1] > w[0] + 1e-12 {
                return Err(CoreError::InvalidArgument(
                    "lambda_k must be nonincreasing".into(),
                ));
            }
        }
        Ok(Self { lag_lambda, lambda_k })
    }

    /// `Lambda(s)`, zero beyond the stored horizon.
    pub fn lag(&self, s: usize) -> f64 {
        self.lag_lambda.get(s).copied().unwrap_or(0.0)
    }

    /// Per-index tail `lambda_k`, zero beyond the stored horizon.
    pub fn tail(&self, k: usize) -> f64 {
        self.lambda_k.get(k).copied().unwrap_or(0.0)
    }

    pub fn lag_lambda(&self) -> &[f64] {
        &self.lag_lambda
    }

    pub fn lambda_k(&self) -> &[f64] {
        &self.lambda_k
    }
}

/// Per-index tail `lambda_k = 2 * sum_{t >= k} Lambda(t)` for `k = 0..=horizon`.
///
/// `Lambda(t)` is taken as zero beyond the input sequence.
pub fn lambda_tail(lag_lambda: &[f64], horizon: usize) -> Result<Vec<f64>> {
    for v in lag_lambda {
        if !v.is_finite() {
            return Err(CoreError::NonFinite {
                what: "lag coefficient".into(),
            });
        }
        if *v < 0.0 {
            return Err(CoreError::InvalidArgument(
                "lag coefficients must be nonnegative".into(),
            ));
        }
    }
    let mut tails = vec![0.0; horizon + 1];
    // Accumulate the suffix sums back to front to keep them exact-ish.
    let mut suffix = 0.0;
    let top = lag_lambda.len().max(horizon + 1);
    let mut store: Vec<f64> = vec![0.0; top];
    for t in (0..top).rev() {
        suffix += lag_lambda.get(t).copied().unwrap_or(0.0);
        store[t] = suffix;
    }
    for (k, tail) in tails.iter_mut().enumerate() {
        *tail = 2.0 * store.get(k).copied().unwrap_or(0.0);
    }
    Ok(tails)
}

/// Bounded Lipschitz probe: a random affine functional of the stacked blocks
/// clipped to `[-1, 1]`.
///
/// The recorded constant is the operator norm of the affine part with respect
/// to the sum-of-block-norms metric on the product space: the max over blocks
/// of the Euclidean norm of that block's weights. Clipping is 1-Lipschitz, so
/// the constant is valid for the composite map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzProbe {
    weights: Vec<Vec<f64>>,
    offset: f64,
    lip: f64,
}

impl LipschitzProbe {
    /// Draws a probe over `blocks` blocks of `block_len` coordinates each,
    /// with weights uniform on `[-1, 1]` and offset uniform on `[-1/2, 1/2]`.
    pub fn random<R: Rng>(blocks: usize, block_len: usize, rng: &mut R) -> Self {
        let weights: Vec<Vec<f64>> = (0..blocks)
            .map(|_| (0..block_len).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let offset = rng.gen_range(-0.5..0.5);
        let lip = weights
            .iter()
            .map(|w| w.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Self { weights, offset, lip }
    }

    /// Evaluates the probe on the stacked block values.
    pub fn eval(&self, blocks: &[&[f64]]) -> f64 {
        debug_assert_eq!(blocks.len(), self.weights.len());
        let mut acc = self.offset;
        for (w, b) in self.weights.iter().zip(blocks) {
            acc += crate::hilbert::dot(w, b);
        }
        acc.clamp(-1.0, 1.0)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lip
    }
}

/// Settings for one covariance-inequality check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QaCheckSettings {
    /// First index set (1-based time indices).
    pub set_i: Vec<usize>,
    /// Second index set, disjoint from the first.
    pub set_j: Vec<usize>,
    /// Number of random probe pairs.
    pub probes: usize,
    /// Monte Carlo sample paths per probe.
    pub paths: usize,
    pub seed: u64,
}

/// Result of checking one probe pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    pub lip_f: f64,
    pub lip_g: f64,
    pub bound: f64,
    pub cov_hat: f64,
    pub se: f64,
    /// `bound + 3*se - |cov_hat|`; negative means a violation.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub probes: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub per_probe: Vec<ProbeResult>,
}

/// Empirically checks the covariance inequality
/// `|Cov(f(Z_i, i in I), g(Z_j, j in J))| <= Lip(f) Lip(g) sum lambda_{ij}`
/// on random bounded Lipschitz probe pairs.
///
/// Each probe draws its parameters and its Monte Carlo paths from its own
/// derived stream, so the report is deterministic given the settings and
/// probes can run in parallel.
pub fn qa_inequality_check(
    model: &LinearProcessModel,
    reg: &RegressionModel,
    settings: &QaCheckSettings,
) -> Result<CheckReport> {
    if settings.set_i.is_empty() || settings.set_j.is_empty() {
        return Err(CoreError::InvalidArgument("index sets must be non-empty".into()));
    }
    if settings.set_i.iter().any(|i| settings.set_j.contains(i)) {
        return Err(CoreError::InvalidArgument("index sets must be disjoint".into()));
    }
    if settings.set_i.iter().chain(&settings.set_j).any(|&i| i == 0) {
        return Err(CoreError::InvalidArgument("time indices are 1-based".into()));
    }
    if settings.probes < 1 || settings.paths < 2 {
        return Err(CoreError::InvalidArgument(
            "need at least one probe and two paths".into(),
        ));
    }

    let horizon = *settings
        .set_i
        .iter()
        .chain(&settings.set_j)
        .max()
        .expect("non-empty");
    let lambda = crate::simulate::theoretical_lambda(model, reg, horizon);
    let lambda_sum: f64 = settings
        .set_i
        .iter()
        .flat_map(|&i| settings.set_j.iter().map(move |&j| i.abs_diff(j)))
        .map(|s| lambda.lag(s))
        .sum();

    let block_len = model.dim() + 1;
    let per_probe: Vec<ProbeResult> = (0..settings.probes)
        .into_par_iter()
        .map(|p| {
            let mut rng = rng::derived(settings.seed, p as u64);
            let f = LipschitzProbe::random(settings.set_i.len(), block_len, &mut rng);
            let g = LipschitzProbe::random(settings.set_j.len(), block_len, &mut rng);

            let m = settings.paths;
            let mut fs = Vec::with_capacity(m);
            let mut gs = Vec::with_capacity(m);
            for _ in 0..m {
                let sample = simulate_with_rng(model, reg, horizon, &mut rng)
                    .expect("horizon >= 1 and model validated");
                let block_of = |idx: usize| {
                    let mut b = sample.x(idx - 1).coeffs().to_vec();
                    b.push(sample.y(idx - 1));
                    b
                };
                let f_blocks: Vec<Vec<f64>> =
                    settings.set_i.iter().map(|&i| block_of(i)).collect();
                let g_blocks: Vec<Vec<f64>> =
                    settings.set_j.iter().map(|&j| block_of(j)).collect();
                fs.push(f.eval(&f_blocks.iter().map(|b| b.as_slice()).collect::<Vec<_>>()));
                gs.push(g.eval(&g_blocks.iter().map(|b| b.as_slice()).collect::<Vec<_>>()));
            }

            let mf = fs.iter().sum::<f64>() / m as f64;
            let mg = gs.iter().sum::<f64>() / m as f64;
            let products: Vec<f64> = fs
                .iter()
                .zip(&gs)
                .map(|(a, b)| (a - mf) * (b - mg))
                .collect();
            let cov_hat = products.iter().sum::<f64>() / (m - 1) as f64;
            let mean_p = products.iter().sum::<f64>() / m as f64;
            let var_p = products.iter().map(|v| (v - mean_p) * (v - mean_p)).sum::<f64>()
                / (m - 1) as f64;
            let se = (var_p / m as f64).sqrt();

            let bound = f.lipschitz() * g.lipschitz() * lambda_sum;
            let margin = bound + 3.0 * se - cov_hat.abs();
            ProbeResult {
                lip_f: f.lipschitz(),
                lip_g: g.lipschitz(),
                bound,
                cov_hat,
                se,
                margin,
            }
        })
        .collect();

    let violations = per_probe.iter().filter(|p| p.margin < 0.0).count();
    let worst_margin = per_probe
        .iter()
        .map(|p| p.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(CheckReport {
        probes: settings.probes,
        violations,
        worst_margin,
        per_probe,
    })
}
