//! Asymptotic constants, plug-in variances, the standardized statistic, and
//! the rate-condition checker.
//!
//! The kernel constants are limits of
//! `I(u) = (u / phi(u)) * integral_0^1 K^j(y) phi'(u y) dy` as `u` shrinks;
//! they enter the asymptotic variances as `C_2 / C_1^2`. The variances are
//!
//! ```text
//! sigma_1^2 = (C2/C1^2) * g2(x) / f1(x)
//! sigma_2^2 = (C2/C1^2) * (g2(x) - r(x)^2) / f1(x)
//! ```
//!
//! with `g2` the conditional second moment of the transformed response. The
//! standardized statistic `sqrt(n phi(h)) (r_n(x) - r(x)) / sigma_2` is the
//! quantity whose limiting law the Monte Carlo experiments test.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::estimator::{
    regression_estimate, small_ball_empirical, EstimatorConfig, KernelSpec,
};
use crate::hilbert::{FunctionalSample, HilbertVector};
use crate::quad::adaptive_simpson;

/// Small-ball rate functions with analytic derivatives, for the kernel
/// constant calculus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SmallBallCurve {
    /// `phi(u) = u^b`, `b > 0`.
    Power { b: f64 },
    /// `phi(u) = u (1 + u)`.
    PowerTimesLinear,
}

impl SmallBallCurve {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            SmallBallCurve::Power { b } => u.powf(*b),
            SmallBallCurve::PowerTimesLinear => u * (1.0 + u),
        }
    }

    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            SmallBallCurve::Power { b } => b * u.powf(b - 1.0),
            SmallBallCurve::PowerTimesLinear => 1.0 + 2.0 * u,
        }
    }

    pub fn name(&self) -> String {
        match self {
            SmallBallCurve::Power { b } => format!("u^{b}"),
            SmallBallCurve::PowerTimesLinear => "u(1+u)".into(),
        }
    }
}

/// Limit estimate for one kernel constant, with its convergence diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CjLimit {
    pub value: f64,
    /// `|I(u_last) - I(u_prev)|`.
    pub last_diff: f64,
    /// The evaluated `(u, I(u))` pairs, in the supplied order.
    pub evals: Vec<(f64, f64)>,
}

/// Default evaluation grid: `10^-1 .. 10^-6`.
pub fn default_u_sequence() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-k)).collect()
}

const QUAD_TOL: f64 = 1e-9;
const CJ_CONVERGENCE_TOL: f64 = 1e-6;

/// Evaluates `I(u) = (u/phi(u)) * integral_0^1 K^j(y) phi'(uy) dy` along a
/// decreasing sequence of radii and returns the last value as the limit.
///
/// Fails if `phi` vanishes on the grid or if the last two evaluations differ
/// by more than `1e-6`. For `phi(u) = u^b` the substituted integrand is
/// radius-free, so every evaluation coincides.
pub fn compute_cj(
    kernel: KernelSpec,
    phi: SmallBallCurve,
    j: u32,
    u_sequence: &[f64],
) -> Result<CjLimit> {
    if !(j == 1 || j == 2) {
        return Err(CoreError::InvalidArgument("j must be 1 or 2".into()));
    }
    if u_sequence.len() < 2 {
        return Err(CoreError::InvalidArgument(
            "need at least two radii to diagnose convergence".into(),
        ));
    }
    for w in u_sequence.windows(2) {
        if w[1] >= w[0] {
            return Err(CoreError::InvalidArgument("radii must be decreasing".into()));
        }
    }
    if u_sequence.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(CoreError::InvalidArgument("radii must be positive".into()));
    }

    let mut evals = Vec::with_capacity(u_sequence.len());
    for &u in u_sequence {
        let denom = phi.value(u);
        if denom == 0.0 || !denom.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "phi({u}) is not positive on the grid"
            )));
        }
        let integral = adaptive_simpson(
            |y| kernel.evaluate(y).powi(j as i32) * phi.deriv(u * y),
            0.0,
            1.0,
            QUAD_TOL,
        )?;
        evals.push((u, u / denom * integral));
    }
    let last = evals[evals.len() - 1].1;
    let prev = evals[evals.len() - 2].1;
    let last_diff = (last - prev).abs();
    if last_diff > CJ_CONVERGENCE_TOL {
        return Err(CoreError::Convergence(format!(
            "kernel constant did not settle: |I(u_last) - I(u_prev)| = {last_diff}"
        )));
    }
    Ok(CjLimit { value: last, last_diff, evals })
}

/// Plug-in asymptotic variance estimate at a query point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub c1: f64,
    pub c2: f64,
    pub g2_hat: f64,
    pub f1_hat: f64,
    pub r_hat: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    /// Set when `g2_hat <= r_hat^2` (conditional variance collapsed); the
    /// standardized statistic is unusable at this point.
    pub degenerate: bool,
}

/// Assembles the displayed variance formulas from their ingredients.
pub fn assemble_variance(c1: f64, c2: f64, g2: f64, f1: f64, r: f64) -> Result<VarianceEstimate> {
    if !(c1 > 0.0 && c2 > 0.0 && f1 > 0.0) {
        return Err(CoreError::InvalidArgument(
            "kernel constants and f1 must be positive".into(),
        ));
    }
    let factor = c2 / (c1 * c1);
    let sigma1_sq = factor * g2 / f1;
    let cond_var = g2 - r * r;
    let degenerate = cond_var <= 1e-12 * g2.abs().max(1.0);
    let sigma2_sq = if degenerate { 0.0 } else { factor * cond_var / f1 };
    Ok(VarianceEstimate {
        c1,
        c2,
        g2_hat: g2,
        f1_hat: f1,
        r_hat: r,
        sigma1_sq,
        sigma2_sq,
        degenerate,
    })
}

/// Plug-in variance estimate: kernel regression of `phi(y)^2` for `g2`,
/// `F_hat(h, x) / phi_h` for `f1`, and the regression estimate (or a caller
/// reference value) for `r`.
///
/// `phi_h` is the caller's value of the small-ball rate at the bandwidth —
/// a model oracle, or `F_hat(h, x)` itself in fully empirical mode (making
/// `f1_hat = 1`). A collapsed conditional variance is clamped to zero and
/// flagged rather than reported negative.
pub fn sigma_plugin(
    sample: &FunctionalSample,
    x: &HilbertVector,
    cfg: &EstimatorConfig,
    c1: f64,
    c2: f64,
    phi_h: f64,
    r_ref: Option<f64>,
) -> Result<VarianceEstimate> {
    if !(phi_h > 0.0 && phi_h.is_finite()) {
        return Err(CoreError::InvalidArgument("phi_h must be positive".into()));
    }
    let g2_hat = crate::estimator::weighted_response_mean(sample, x, cfg, |y| {
        let v = cfg.transform.eval(y);
        v * v
    })?;
    let r_hat = match r_ref {
        Some(r) => r,
        None => regression_estimate(sample, x, cfg)?,
    };
    let f_hat = small_ball_empirical(sample, x, &[cfg.h])?.f_hat[0];
    let f1_hat = f_hat / phi_h;
    if f1_hat <= 0.0 {
        return Err(CoreError::NoNeighbors {
            min_distance: f64::NAN,
        });
    }
    assemble_variance(c1, c2, g2_hat, f1_hat, r_hat)
}

/// `sqrt(n * phi_h) * (r_n(x) - truth) / sigma_2`.
pub fn standardized_statistic(
    sample: &FunctionalSample,
    x: &HilbertVector,
    cfg: &EstimatorConfig,
    truth: f64,
    phi_h: f64,
    variance: &VarianceEstimate,
) -> Result<f64> {
    if variance.degenerate || !(variance.sigma2_sq > 0.0) {
        return Err(CoreError::DegenerateVariance);
    }
    if !(phi_h > 0.0 && phi_h.is_finite()) {
        return Err(CoreError::InvalidArgument("phi_h must be positive".into()));
    }
    let r_n = regression_estimate(sample, x, cfg)?;
    let n = sample.len() as f64;
    let stat = (n * phi_h).sqrt() * (r_n - truth) / variance.sigma2_sq.sqrt();
    if !stat.is_finite() {
        return Err(CoreError::NonFinite {
            what: "standardized statistic".into(),
        });
    }
    Ok(stat)
}

/// Exponents governing the dependence/smoothing trade-off: covariance decay
/// `lambda_k = O(k^-a)`, small-ball rate `phi(h) = O(h^b)`, block exponent
/// `delta`, and regression smoothness `beta`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateParams {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub beta: f64,
}

impl RateParams {
    pub fn new(a: f64, b: f64, delta: f64, beta: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && beta > 0.0) {
            return Err(CoreError::InvalidArgument(
                "a, b, beta must be positive".into(),
            ));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CoreError::InvalidArgument("delta must lie in (0, 1)".into()));
        }
        Ok(Self { a, b, delta, beta })
    }

    /// Threshold in the exponent condition `a > (2 + b) / (delta * b)`.
    pub fn exponent_threshold(&self) -> f64 {
        (2.0 + self.b) / (self.delta * self.b)
    }

    /// The scale-free exponent condition itself.
    pub fn exponent_condition(&self) -> bool {
        self.a > self.exponent_threshold()
    }
}

/// One evaluation point of the finite-n rate terms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub n: usize,
    pub h: f64,
    pub phi_h: f64,
}

/// The three finite-n magnitudes behind the theorem's side conditions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateTerms {
    /// `(log n)^2 * phi_h^(a*delta - (1 + 2/b))` — must tend to zero.
    pub covariance_tail: f64,
    /// `n * phi_h^(1 + 2*delta)` — must tend to infinity.
    pub effective_sample: f64,
    /// `n * h^(2*beta) * phi_h` — must tend to zero for the centered result.
    pub bias_term: f64,
}

/// Evaluates the finite-n rate terms at a single `(n, h, phi_h)`.
pub fn rate_terms(params: &RateParams, point: &SchedulePoint) -> Result<RateTerms> {
    if point.n < 2 || !(point.h > 0.0) || !(point.phi_h > 0.0 && point.phi_h < 1.0) {
        return Err(CoreError::InvalidArgument(
            "need n >= 2, h > 0, and phi_h in (0, 1)".into(),
        ));
    }
    let logn = (point.n as f64).ln();
    Ok(RateTerms {
        covariance_tail: logn
            * logn
            * point
                .phi_h
                .powf(params.a * params.delta - (1.0 + 2.0 / params.b)),
        effective_sample: point.n as f64 * point.phi_h.powf(1.0 + 2.0 * params.delta),
        bias_term: point.n as f64 * point.h.powf(2.0 * params.beta) * point.phi_h,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionRow {
    pub n: usize,
    pub h: f64,
    pub phi_h: f64,
    pub covariance_tail: f64,
    pub effective_sample: f64,
    pub bias_term: f64,
}

/// Structured report on the theorem's side conditions over an n-schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub params: RateParams,
    pub exponent_threshold: f64,
    /// Condition (scale-free): `a > (2 + b) / (delta * b)`.
    pub exponent_pass: bool,
    pub rows: Vec<ConditionRow>,
    /// Monotone-trend heuristics over the schedule (vacuously true for a
    /// single point).
    pub covariance_tail_decreasing: bool,
    pub effective_sample_increasing: bool,
    pub bias_term_decreasing: bool,
}

/// Checks the rate conditions: the exponent inequality exactly, and the
/// finite-n magnitudes with a monotone-trend heuristic over the schedule.
pub fn check_rate_conditions(
    params: &RateParams,
    schedule: &[SchedulePoint],
) -> Result<ConditionReport> {
    if schedule.is_empty() {
        return Err(CoreError::InvalidArgument("schedule must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(schedule.len());
    for point in schedule {
        let terms = rate_terms(params, point)?;
        rows.push(ConditionRow {
            n: point.n,
            h: point.h,
            phi_h: point.phi_h,
            covariance_tail: terms.covariance_tail,
            effective_sample: terms.effective_sample,
            bias_term: terms.bias_term,
        });
    }
    let decreasing = |f: fn(&ConditionRow) -> f64| rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]));
    let increasing = |f: fn(&ConditionRow) -> f64| rows.windows(2).all(|w| f(&w[1]) >= f(&w[0]));
    Ok(ConditionReport {
        params: *params,
        exponent_threshold: params.exponent_threshold(),
        exponent_pass: params.exponent_condition(),
        covariance_tail_decreasing: decreasing(|r| r.covariance_tail),
        effective_sample_increasing: increasing(|r| r.effective_sample),
        bias_term_decreasing: decreasing(|r| r.bias_term),
        rows,
    })
}
