//! Model-derived oracle quantities for theory-facing experiments.
//!
//! These isolate the asymptotic claims from plug-in estimation error: the
//! small-ball value, kernel moments, and variance constants are computed
//! from the known simulator by large Monte Carlo, and the regression truth
//! and conditional moments come from the model itself.
//!
//! Normalization convention: the small-ball rate is identified with the ball
//! probability at the query point, `phi(u) := F(u, x)`, which fixes the
//! location factor at one. Under that convention the kernel-moment constants
//! are `C_j = lim E K^j(D/h) / F(h, x)` — identically 1 for the box kernel —
//! and the limiting variances reduce to conditional moments:
//! `sigma_1^2 = (C2/C1^2) g2(x)` and `sigma_2^2 = (C2/C1^2) (g2(x) - r(x)^2)`.
//!
//! Two variance flavors are reported. The `finite` values are the exact
//! single-pair variances at the experiment's own bandwidth,
//! `phi(h) Var(Gamma - r(x) Delta) / [E Delta]^2`; they standardize the CLT
//! statistic. The `limit` values are the conditional-moment limits above;
//! they are the reference points for the variance-convergence experiment.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::EstimatorConfig;
use crate::hilbert::{sq_dist, HilbertVector};
use crate::rng;
use crate::simulate::{
    conditional_second_moment, marginal_draw, LinearProcessModel, RegressionModel,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleQuantities {
    pub h: f64,
    /// Ball probability `F(h, x)`, the small-ball rate at the bandwidth.
    pub phi_h: f64,
    /// `E K(D/h)`.
    pub e_delta: f64,
    /// `E K^2(D/h)`.
    pub e_delta_sq: f64,
    /// Kernel-moment ratios at this bandwidth: `E K^j(D/h) / F(h, x)`.
    pub c1_at_h: f64,
    pub c2_at_h: f64,
    /// True regression value at the query point.
    pub r_at_x: f64,
    /// Conditional second moment `E[phi(Y)^2 | X = x]`.
    pub g2_at_x: f64,
    pub sigma1_sq_finite: f64,
    pub sigma2_sq_finite: f64,
    pub sigma1_sq_limit: f64,
    pub sigma2_sq_limit: f64,
    pub draws: usize,
}

impl OracleQuantities {
    /// Monte Carlo pre-computation over `draws` marginal samples of `(X, Y)`.
    pub fn compute(
        model: &LinearProcessModel,
        reg: &RegressionModel,
        x: &HilbertVector,
        cfg: &EstimatorConfig,
        draws: usize,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        let r_at_x = reg.r.eval(x);
        let g2_at_x = conditional_second_moment(model, reg, &cfg.transform, x)?;

        let mut rng = rng::derived(seed, stream);
        let xc = x.coeffs();
        let h = cfg.h;
        let mut inside = 0usize;
        let mut sum_delta = 0.0;
        let mut sum_delta_sq = 0.0;
        let mut sum_gamma = 0.0;
        let mut sum_gamma_sq = 0.0;
        let mut sum_centered = 0.0;
        let mut sum_centered_sq = 0.0;
        for _ in 0..draws {
            let (xv, y) = marginal_draw(model, reg, &mut rng);
            let d = sq_dist(xv.coeffs(), xc).sqrt();
            if d <= h {
                inside += 1;
            }
            let w = cfg.kernel.evaluate(d / h);
            if w > 0.0 {
                let phi_y = cfg.transform.eval(y);
                let gamma = phi_y * w;
                let centered = (phi_y - r_at_x) * w;
                sum_delta += w;
                sum_delta_sq += w * w;
                sum_gamma += gamma;
                sum_gamma_sq += gamma * gamma;
                sum_centered += centered;
                sum_centered_sq += centered * centered;
            }
        }
        let mf = draws as f64;
        let phi_h = inside as f64 / mf;
        let e_delta = sum_delta / mf;
        let e_delta_sq = sum_delta_sq / mf;
        let var_gamma = sum_gamma_sq / mf - (sum_gamma / mf).powi(2);
        let var_centered = sum_centered_sq / mf - (sum_centered / mf).powi(2);

        let (c1_at_h, c2_at_h, sigma1_sq_finite, sigma2_sq_finite) = if phi_h > 0.0 && e_delta > 0.0
        {
            (
                e_delta / phi_h,
                e_delta_sq / phi_h,
                phi_h * var_gamma / (e_delta * e_delta),
                phi_h * var_centered / (e_delta * e_delta),
            )
        } else {
            (0.0, 0.0, 0.0, 0.0)
        };
        let (sigma1_sq_limit, sigma2_sq_limit) = if c1_at_h > 0.0 {
            let factor = c2_at_h / (c1_at_h * c1_at_h);
            (
                factor * g2_at_x,
                factor * (g2_at_x - r_at_x * r_at_x).max(0.0),
            )
        } else {
            (0.0, 0.0)
        };

        Ok(Self {
            h,
            phi_h,
            e_delta,
            e_delta_sq,
            c1_at_h,
            c2_at_h,
            r_at_x,
            g2_at_x,
            sigma1_sq_finite,
            sigma2_sq_finite,
            sigma1_sq_limit,
            sigma2_sq_limit,
            draws,
        })
    }
}

/// Model Monte Carlo values of `F(u, x)` on a radius grid, for small-ball
/// diagnostics.
pub fn oracle_small_ball(
    model: &LinearProcessModel,
    reg: &RegressionModel,
    x: &HilbertVector,
    u_grid: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = rng::derived(seed, 0);
    let xc = x.coeffs();
    let mut dists: Vec<f64> = (0..draws)
        .map(|_| {
            let (xv, _) = marginal_draw(model, reg, &mut rng);
            sq_dist(xv.coeffs(), xc).sqrt()
        })
        .collect();
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(u_grid
        .iter()
        .map(|&u| dists.partition_point(|&d| d <= u) as f64 / draws as f64)
        .collect())
}
