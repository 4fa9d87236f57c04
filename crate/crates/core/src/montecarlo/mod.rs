//! Replicated experiments that test the variance limit and the asymptotic
//! normality of the standardized estimator at desk scale.

mod clt;
mod normality;
mod oracle;
mod variance;

pub use clt::{run_clt_experiment, CltResult, CltRun, ReplicateRow, ReplicateStatus};
pub use normality::{
    ks_normal_distance, ks_threshold_alpha01, normal_cdf, normal_quantile, NormalityReport,
};
pub use oracle::{oracle_small_ball, OracleQuantities};
pub use variance::{run_variance_experiment, VarianceConvergenceReport, VarianceRun};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::estimator::KernelSpec;
use crate::hilbert::{HilbertVector, Transform};
use crate::simulate::{LinearProcessModel, RegressionModel};

/// Bandwidth as a function of the sample size.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BandwidthRule {
    /// The same bandwidth at every sample size.
    Fixed { h: f64 },
    /// `h = c * n^(-kappa)`.
    Power { c: f64, kappa: f64 },
    /// Explicit bandwidths aligned with the n-schedule.
    Schedule { h: Vec<f64> },
}

impl BandwidthRule {
    pub fn bandwidth(&self, schedule_idx: usize, n: usize) -> Result<f64> {
        let h = match self {
            BandwidthRule::Fixed { h } => *h,
            BandwidthRule::Power { c, kappa } => c * (n as f64).powf(-kappa),
            BandwidthRule::Schedule { h } => *h.get(schedule_idx).ok_or_else(|| {
                CoreError::InvalidArgument("bandwidth schedule shorter than n-schedule".into())
            })?,
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(CoreError::InvalidArgument(format!(
                "bandwidth rule produced h = {h} at n = {n}"
            )));
        }
        Ok(h)
    }
}

/// Provenance of the quantities used for standardization and normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    /// Model-derived truths from large Monte Carlo (the theory-facing mode).
    Oracle,
    /// Sample-derived values `F_hat(h, x)`; available to the plug-in column
    /// of the CLT experiment and to data-facing estimation.
    Empirical,
}

/// Full description of a replicated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: LinearProcessModel,
    pub regression: RegressionModel,
    pub query: HilbertVector,
    pub kernel: KernelSpec,
    pub transform: Transform,
    pub b0: f64,
    pub n_schedule: Vec<usize>,
    pub bandwidths: BandwidthRule,
    pub replicates: usize,
    pub seed: u64,
    pub normalization: NormalizationMode,
    /// Marginal draws for the oracle pre-computation.
    pub oracle_draws: usize,
    /// Replace the replicate statistics by pure standard normal draws —
    /// calibrates the KS instrument itself.
    pub self_test: bool,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(CoreError::InvalidArgument("need at least two replicates".into()));
        }
        if self.n_schedule.is_empty() {
            return Err(CoreError::InvalidArgument("n-schedule must be non-empty".into()));
        }
        if self.n_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidArgument("n-schedule must be increasing".into()));
        }
        if self.query.dim() != self.model.dim() {
            return Err(CoreError::DimensionMismatch {
                left: self.query.dim(),
                right: self.model.dim(),
            });
        }
        if self.oracle_draws < 1000 {
            return Err(CoreError::InvalidArgument(
                "oracle pre-computation needs at least 1000 draws".into(),
            ));
        }
        if !(self.b0 > 0.0) {
            return Err(CoreError::InvalidArgument("b0 must be positive".into()));
        }
        Ok(())
    }
}

/// Fraction of replicates allowed to fail (no neighbors in window, or a
/// collapsed plug-in variance) before the experiment itself errors out.
pub(crate) const MAX_FAILURE_RATE: f64 = 0.05;
