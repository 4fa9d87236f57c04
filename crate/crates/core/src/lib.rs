//! Kernel-type nonparametric regression for Hilbert-space-valued covariates
//! observed as a stationary time series, together with the machinery needed
//! to study the estimator empirically:
//!
//! - [`hilbert`]: coefficient-space representation of the covariate space,
//!   samples, and response transforms.
//! - [`simulate`]: Gaussian linear-process simulators with exactly computable
//!   dependence coefficients and regression ground truth.
//! - [`dependence`]: dependence-coefficient tails and an empirical checker
//!   for the covariance inequality that defines quasi-association.
//! - [`estimator`]: the kernel regression estimator, its numerator/denominator
//!   decomposition, truncation, small-ball probabilities, and bandwidth CV.
//! - [`asymptotics`]: kernel constants from the small-ball calculus, plug-in
//!   asymptotic variances, the standardized statistic, and rate conditions.
//! - [`montecarlo`]: replicated experiments verifying the variance limit and
//!   asymptotic normality, plus the Kolmogorov–Smirnov instrument.
//! - [`config`]: serde types for the batch CLI's experiment config files.

pub mod asymptotics;
pub mod config;
pub mod dependence;
pub mod error;
pub mod estimator;
pub mod hilbert;
pub mod montecarlo;
pub mod quad;
pub mod rng;
pub mod simulate;

pub use error::{CoreError, Result};
