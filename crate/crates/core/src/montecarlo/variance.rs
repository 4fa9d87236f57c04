//! Replicated verification of the variance limit: `n phi(h) Var(g_n(x))`
//! approaches `sigma_1^2(x)`, and the same for the centered statistic
//! `g_n - r(x) f_n` against `sigma_2^2(x)`.
//!
//! The numerator/denominator pair is normalized by the oracle value of
//! `E K(D/h)`; the reference variances are the conditional-moment limits of
//! the oracle module. Uncertainty on each ratio comes from a replicate
//! bootstrap, which is assumption-free because replicates are independent by
//! construction.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::estimator::{numerator_denominator, EstimatorConfig};
use crate::montecarlo::{Experiment, NormalizationMode, OracleQuantities};
use crate::rng;
use crate::simulate::simulate_with_rng;

const BOOTSTRAP_RESAMPLES: usize = 200;

/// Result for one entry of the n-schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceRun {
    pub n: usize,
    pub h: f64,
    pub phi_h: f64,
    /// `n * phi_h * Var_hat(g_n)`.
    pub scaled_var_g: f64,
    /// `n * phi_h * Var_hat(g_n - r(x) f_n)`.
    pub scaled_var_centered: f64,
    pub sigma1_sq_limit: f64,
    pub sigma2_sq_limit: f64,
    pub ratio_sigma1: f64,
    pub ratio_sigma2: f64,
    /// Bootstrap percentile intervals (2.5%, 97.5%) for the ratios.
    pub ci_sigma1: (f64, f64),
    pub ci_sigma2: (f64, f64),
    pub replicates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceConvergenceReport {
    pub runs: Vec<VarianceRun>,
    pub bootstrap_resamples: usize,
}

fn sample_variance(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
}

/// Runs the variance-convergence experiment over the n-schedule.
pub fn run_variance_experiment(exp: &Experiment) -> Result<VarianceConvergenceReport> {
    exp.validate()?;
    if exp.normalization != NormalizationMode::Oracle {
        return Err(CoreError::Experiment(
            "the variance experiment needs oracle normalization".into(),
        ));
    }
    let mut runs = Vec::with_capacity(exp.n_schedule.len());
    for (idx, &n) in exp.n_schedule.iter().enumerate() {
        let h = exp.bandwidths.bandwidth(idx, n)?;
        let cfg = EstimatorConfig::new(h, exp.kernel, exp.transform.clone())?.with_b0(exp.b0)?;
        let oracle = OracleQuantities::compute(
            &exp.model,
            &exp.regression,
            &exp.query,
            &cfg,
            exp.oracle_draws,
            exp.seed,
            rng::oracle_stream(idx),
        )?;
        if oracle.e_delta <= 0.0 || oracle.phi_h <= 0.0 {
            return Err(CoreError::Experiment(format!(
                "oracle normalizer vanished at h = {h}; enlarge the bandwidth"
            )));
        }
        if oracle.sigma1_sq_limit <= 0.0 {
            return Err(CoreError::Experiment(
                "limit variance is zero; the ratio is undefined".into(),
            ));
        }

        let pairs: Vec<(f64, f64)> = (0..exp.replicates)
            .into_par_iter()
            .map(|rep| -> Result<(f64, f64)> {
                let mut path_rng = rng::derived(exp.seed, rng::replicate_stream(idx, rep));
                let sample = simulate_with_rng(&exp.model, &exp.regression, n, &mut path_rng)?;
                let (g, f) = numerator_denominator(&sample, &exp.query, &cfg, oracle.e_delta)?;
                Ok((g, g - oracle.r_at_x * f))
            })
            .collect::<Result<Vec<_>>>()?;

        let gs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let gcs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let scale = n as f64 * oracle.phi_h;
        let scaled_var_g = scale * sample_variance(&gs);
        let scaled_var_centered = scale * sample_variance(&gcs);
        let ratio_sigma1 = scaled_var_g / oracle.sigma1_sq_limit;
        let ratio_sigma2 = if oracle.sigma2_sq_limit > 0.0 {
            scaled_var_centered / oracle.sigma2_sq_limit
        } else {
            f64::NAN
        };

        // Paired replicate bootstrap for both ratios.
        let mut boot_rng = rng::derived(exp.seed, rng::oracle_stream(idx).wrapping_sub(1));
        let m = pairs.len();
        let mut boot1 = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        let mut boot2 = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        for _ in 0..BOOTSTRAP_RESAMPLES {
            let mut g_res = Vec::with_capacity(m);
            let mut gc_res = Vec::with_capacity(m);
            for _ in 0..m {
                let j = boot_rng.gen_range(0..m);
                g_res.push(gs[j]);
                gc_res.push(gcs[j]);
            }
            boot1.push(scale * sample_variance(&g_res) / oracle.sigma1_sq_limit);
            if oracle.sigma2_sq_limit > 0.0 {
                boot2.push(scale * sample_variance(&gc_res) / oracle.sigma2_sq_limit);
            }
        }
        let ci = |mut v: Vec<f64>| -> (f64, f64) {
            if v.is_empty() {
                return (f64::NAN, f64::NAN);
            }
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let lo = ((v.len() as f64) * 0.025).floor() as usize;
            let hi = (((v.len() as f64) * 0.975).ceil() as usize).min(v.len()) - 1;
            (v[lo], v[hi])
        };

        runs.push(VarianceRun {
            n,
            h,
            phi_h: oracle.phi_h,
            scaled_var_g,
            scaled_var_centered,
            sigma1_sq_limit: oracle.sigma1_sq_limit,
            sigma2_sq_limit: oracle.sigma2_sq_limit,
            ratio_sigma1,
            ratio_sigma2,
            ci_sigma1: ci(boot1),
            ci_sigma2: ci(boot2),
            replicates: exp.replicates,
        });
    }
    Ok(VarianceConvergenceReport {
        runs,
        bootstrap_resamples: BOOTSTRAP_RESAMPLES,
    })
}
