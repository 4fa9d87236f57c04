//! Config-file schema for the batch CLI.
//!
//! One TOML file describes one run. The structs here are the parsed form;
//! `build` methods turn them into the runtime types. Unknown keys are
//! rejected so typos surface as config errors, and every struct serializes
//! back to canonical TOML for the run manifest's config echo.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{RateParams, SchedulePoint};
use crate::dependence::QaCheckSettings;
use crate::error::{CoreError, Result};
use crate::estimator::KernelSpec;
use crate::hilbert::{HilbertVector, Transform};
use crate::montecarlo::{BandwidthRule, Experiment, NormalizationMode};
use crate::simulate::{LinearProcessModel, NoiseMode, RegressionFn, RegressionModel};

/// Parses a TOML config, preserving the parser's line/field diagnostics.
pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| CoreError::InvalidArgument(format!("config error: {e}")))
}

/// Canonical re-serialization used for the manifest's config echo.
pub fn to_canonical_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value)
        .map_err(|e| CoreError::InvalidArgument(format!("config serialization error: {e}")))
}

/// Covariate process.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    /// Independent standard Gaussian covariates in dimension `dim`.
    Iid { dim: usize },
    /// Moving average of order `order` with weights `rho^m I`.
    Geometric { dim: usize, rho: f64, order: usize },
    /// Explicit weight matrices, one `dim x dim` row-major matrix per lag.
    Ma { weights: Vec<Vec<Vec<f64>>> },
}

impl ModelConfig {
    pub fn build(&self) -> Result<LinearProcessModel> {
        match self {
            ModelConfig::Iid { dim } => LinearProcessModel::iid(*dim),
            ModelConfig::Geometric { dim, rho, order } => {
                LinearProcessModel::geometric(*dim, *rho, *order)
            }
            ModelConfig::Ma { weights } => {
                let mut mats = Vec::with_capacity(weights.len());
                for w in weights {
                    let d = w.len();
                    if w.iter().any(|row| row.len() != d) {
                        return Err(CoreError::InvalidArgument(
                            "weight matrices must be square".into(),
                        ));
                    }
                    let flat: Vec<f64> = w.iter().flatten().copied().collect();
                    mats.push(nalgebra::DMatrix::from_row_slice(d, d, &flat));
                }
                LinearProcessModel::new(mats)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionFnConfig {
    Zero,
    SinFirst,
    SquareFirstClipped,
    Constant { value: f64 },
}

impl RegressionFnConfig {
    fn build(&self) -> RegressionFn {
        match self {
            RegressionFnConfig::Zero => RegressionFn::Zero,
            RegressionFnConfig::SinFirst => RegressionFn::SinFirst,
            RegressionFnConfig::SquareFirstClipped => RegressionFn::SquareFirstClipped,
            RegressionFnConfig::Constant { value } => RegressionFn::Constant(*value),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseConfig {
    Independent,
    SharedInnovation { theta: f64 },
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::Independent
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionConfig {
    pub r: RegressionFnConfig,
    pub noise_sd: f64,
    #[serde(default)]
    pub noise: NoiseConfig,
}

impl RegressionConfig {
    pub fn build(&self) -> Result<RegressionModel> {
        let mode = match self.noise {
            NoiseConfig::Independent => NoiseMode::Independent,
            NoiseConfig::SharedInnovation { theta } => NoiseMode::SharedInnovation { theta },
        };
        RegressionModel::new(self.r.build(), self.noise_sd, mode)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformConfig {
    Identity,
    Clip { bound: f64 },
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig::Identity
    }
}

impl TransformConfig {
    pub fn build(&self) -> Transform {
        match self {
            TransformConfig::Identity => Transform::Identity,
            TransformConfig::Clip { bound } => Transform::Clip { bound: *bound },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSettings {
    pub kernel: KernelSpec,
    pub transform: TransformConfig,
    pub b0: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::Box,
            transform: TransformConfig::Identity,
            b0: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub x: Vec<f64>,
}

fn default_oracle_draws() -> usize {
    1_000_000
}

fn default_normalization() -> NormalizationMode {
    NormalizationMode::Oracle
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    pub n_schedule: Vec<usize>,
    pub bandwidth: BandwidthRule,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_normalization")]
    pub normalization: NormalizationMode,
    #[serde(default = "default_oracle_draws")]
    pub oracle_draws: usize,
    #[serde(default)]
    pub self_test: bool,
}

/// Config root for the `clt` and `variance` subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub model: ModelConfig,
    pub regression: RegressionConfig,
    pub query: QueryConfig,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    pub experiment: ExperimentSettings,
}

impl ExperimentFile {
    pub fn build(&self) -> Result<Experiment> {
        let exp = Experiment {
            model: self.model.build()?,
            regression: self.regression.build()?,
            query: HilbertVector::new(self.query.x.clone())?,
            kernel: self.estimator.kernel,
            transform: self.estimator.transform.build(),
            b0: self.estimator.b0,
            n_schedule: self.experiment.n_schedule.clone(),
            bandwidths: self.experiment.bandwidth.clone(),
            replicates: self.experiment.replicates,
            seed: self.experiment.seed,
            normalization: self.experiment.normalization,
            oracle_draws: self.experiment.oracle_draws,
            self_test: self.experiment.self_test,
        };
        exp.validate()?;
        Ok(exp)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSettings {
    pub n: usize,
    pub seed: u64,
}

/// Config root for the `simulate` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub model: ModelConfig,
    pub regression: RegressionConfig,
    pub simulate: SimulateSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSettings {
    /// Path to a sample CSV (header `y,x1,...,xd`), relative to the config
    /// file's directory unless absolute.
    pub sample: String,
    pub h: f64,
    /// Query points, one coefficient vector each.
    pub queries: Vec<Vec<f64>>,
}

/// Config root for the `estimate` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateFile {
    pub estimate: EstimateSettings,
    #[serde(default)]
    pub estimator: EstimatorSettings,
}

/// Config root for the `qa-check` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaFile {
    pub model: ModelConfig,
    pub regression: RegressionConfig,
    pub qa: QaCheckSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSettings {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub beta: f64,
    pub schedule: Vec<SchedulePoint>,
}

/// Config root for the `rates` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesFile {
    pub rates: RatesSettings,
}

impl RatesFile {
    pub fn params(&self) -> Result<RateParams> {
        RateParams::new(self.rates.a, self.rates.b, self.rates.delta, self.rates.beta)
    }
}
