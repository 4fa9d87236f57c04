//! Replicated verification of the asymptotic normality of the standardized
//! regression estimator.
//!
//! Per replicate: simulate a path, evaluate the estimator at the query
//! point, and standardize by `sqrt(n phi(h)) / sigma_2`. The headline column
//! standardizes with oracle quantities (true regression value, oracle
//! small-ball value, oracle variance at the experiment's bandwidth); the
//! plug-in column standardizes with the sample's own variance estimate to
//! show Slutsky-level agreement.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::sigma_plugin;
use crate::error::{CoreError, Result};
use crate::estimator::{regression_estimate, small_ball_empirical, EstimatorConfig};
use crate::montecarlo::{
    Experiment, NormalityReport, NormalizationMode, OracleQuantities, MAX_FAILURE_RATE,
};
use crate::rng;
use crate::simulate::simulate_with_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateStatus {
    Ok,
    NoNeighbors,
    DegeneratePlugin,
}

/// One row of the per-replicate output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub n: usize,
    pub h: f64,
    pub r_hat: Option<f64>,
    pub statistic_oracle: Option<f64>,
    pub statistic_plugin: Option<f64>,
    pub status: ReplicateStatus,
}

/// Result for one entry of the n-schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltRun {
    pub n: usize,
    pub h: f64,
    /// Absent in self-test mode.
    pub oracle: Option<OracleQuantities>,
    /// Oracle-standardized column.
    pub report: NormalityReport,
    /// Plug-in-standardized column (absent in self-test mode).
    pub plugin_report: Option<NormalityReport>,
    pub rows: Vec<ReplicateRow>,
    pub failed_replicates: usize,
    /// The oracle variance itself collapsed; the statistics are all zero and
    /// the run cannot check normality.
    pub degenerate_experiment: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltResult {
    pub runs: Vec<CltRun>,
}

/// Runs the normality experiment over the n-schedule. Deterministic given
/// the experiment seed; replicates run in parallel on derived streams.
pub fn run_clt_experiment(exp: &Experiment) -> Result<CltResult> {
    exp.validate()?;
    let mut runs = Vec::with_capacity(exp.n_schedule.len());
    for (idx, &n) in exp.n_schedule.iter().enumerate() {
        let h = exp.bandwidths.bandwidth(idx, n)?;
        let run = if exp.self_test {
            self_test_run(exp, idx, n, h)?
        } else {
            experiment_run(exp, idx, n, h)?
        };
        runs.push(run);
    }
    Ok(CltResult { runs })
}

fn self_test_run(exp: &Experiment, idx: usize, n: usize, h: f64) -> Result<CltRun> {
    let stats: Vec<f64> = (0..exp.replicates)
        .map(|rep| {
            let mut r = rng::derived(exp.seed, rng::replicate_stream(idx, rep));
            r.sample(StandardNormal)
        })
        .collect();
    let rows = stats
        .iter()
        .enumerate()
        .map(|(rep, &s)| ReplicateRow {
            replicate: rep,
            n,
            h,
            r_hat: None,
            statistic_oracle: Some(s),
            statistic_plugin: None,
            status: ReplicateStatus::Ok,
        })
        .collect();
    Ok(CltRun {
        n,
        h,
        oracle: None,
        report: NormalityReport::from_values(stats)?,
        plugin_report: None,
        rows,
        failed_replicates: 0,
        degenerate_experiment: false,
    })
}

fn experiment_run(exp: &Experiment, idx: usize, n: usize, h: f64) -> Result<CltRun> {
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
    if oracle.phi_h <= 0.0 {
        return Err(CoreError::Experiment(format!(
            "oracle ball probability is zero at h = {h}; enlarge the bandwidth"
        )));
    }

    // A collapsed oracle variance means every replicate estimates a constant
    // exactly: report all-zero statistics and flag the run as degenerate.
    let degenerate_scale = 1e-12 * oracle.g2_at_x.abs().max(1.0);
    if oracle.sigma2_sq_finite <= degenerate_scale {
        let stats = vec![0.0; exp.replicates];
        let rows = (0..exp.replicates)
            .map(|rep| ReplicateRow {
                replicate: rep,
                n,
                h,
                r_hat: Some(oracle.r_at_x),
                statistic_oracle: Some(0.0),
                statistic_plugin: None,
                status: ReplicateStatus::Ok,
            })
            .collect();
        return Ok(CltRun {
            n,
            h,
            oracle: Some(oracle),
            report: NormalityReport::from_values(stats)?,
            plugin_report: None,
            rows,
            failed_replicates: 0,
            degenerate_experiment: true,
        });
    }

    let sigma2 = oracle.sigma2_sq_finite.sqrt();
    let rows: Vec<ReplicateRow> = (0..exp.replicates)
        .into_par_iter()
        .map(|rep| -> Result<ReplicateRow> {
            let mut path_rng = rng::derived(exp.seed, rng::replicate_stream(idx, rep));
            let sample = simulate_with_rng(&exp.model, &exp.regression, n, &mut path_rng)?;
            let r_hat = match regression_estimate(&sample, &exp.query, &cfg) {
                Ok(r) => r,
                Err(CoreError::NoNeighbors { .. }) => {
                    return Ok(ReplicateRow {
                        replicate: rep,
                        n,
                        h,
                        r_hat: None,
                        statistic_oracle: None,
                        statistic_plugin: None,
                        status: ReplicateStatus::NoNeighbors,
                    })
                }
                Err(e) => return Err(e),
            };
            let stat_oracle =
                (n as f64 * oracle.phi_h).sqrt() * (r_hat - oracle.r_at_x) / sigma2;

            let phi_plugin = match exp.normalization {
                NormalizationMode::Oracle => oracle.phi_h,
                NormalizationMode::Empirical => {
                    small_ball_empirical(&sample, &exp.query, &[h])?.f_hat[0]
                }
            };
            let plugin = if phi_plugin > 0.0 {
                sigma_plugin(
                    &sample,
                    &exp.query,
                    &cfg,
                    oracle.c1_at_h,
                    oracle.c2_at_h,
                    phi_plugin,
                    Some(r_hat),
                )
                .ok()
            } else {
                None
            };
            let (stat_plugin, status) = match plugin {
                Some(v) if !v.degenerate && v.sigma2_sq > 0.0 => (
                    Some(
                        (n as f64 * phi_plugin).sqrt() * (r_hat - oracle.r_at_x)
                            / v.sigma2_sq.sqrt(),
                    ),
                    ReplicateStatus::Ok,
                ),
                _ => (None, ReplicateStatus::DegeneratePlugin),
            };
            Ok(ReplicateRow {
                replicate: rep,
                n,
                h,
                r_hat: Some(r_hat),
                statistic_oracle: Some(stat_oracle),
                statistic_plugin: stat_plugin,
                status,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let failed = rows
        .iter()
        .filter(|r| r.status != ReplicateStatus::Ok)
        .count();
    if failed as f64 > MAX_FAILURE_RATE * exp.replicates as f64 {
        return Err(CoreError::Experiment(format!(
            "{failed} of {} replicates unusable (no neighbors or degenerate plug-in variance); \
             the bandwidth is too small at n = {n}",
            exp.replicates
        )));
    }

    let oracle_stats: Vec<f64> = rows.iter().filter_map(|r| r.statistic_oracle).collect();
    let plugin_stats: Vec<f64> = rows.iter().filter_map(|r| r.statistic_plugin).collect();
    let report = NormalityReport::from_values(oracle_stats)?;
    let plugin_report = if plugin_stats.len() >= 2 {
        Some(NormalityReport::from_values(plugin_stats)?)
    } else {
        None
    };
    Ok(CltRun {
        n,
        h,
        oracle: Some(oracle),
        report,
        plugin_report,
        rows,
        failed_replicates: failed,
        degenerate_experiment: false,
    })
}
