//! Gaussian linear-process simulators with exactly computable ground truth.
//!
//! The canonical covariate family is the finite moving average
//! `X_i = sum_{m=0..q} a_m e_{i-m}` with i.i.d. standard Gaussian innovation
//! vectors `e_i` in `R^d` and `d x d` weight matrices `a_m`. Stationarity
//! holds by construction, every lag covariance has the closed form
//! `Cov(X_i, X_{i+s}) = sum_m a_m a_{m+s}^T`, and the process is independent
//! beyond lag `q`. Gaussian processes satisfy the covariance inequality the
//! dependence module checks; with entrywise nonnegative weights the process
//! is also positively associated, giving a second verification path.
//!
//! Responses follow `Y_i = r(X_i) + noise`, where the noise is either an
//! independent `N(0, sd^2)` sequence or, in shared-innovation mode,
//! `theta * e_i[0] + N(0, sd^2)` so that `(X, Y)` carry cross-dependence
//! with exactly computable covariance terms.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dependence::{lambda_tail, DependenceCoefficients};
use crate::error::{CoreError, Result};
use crate::hilbert::{FunctionalSample, HilbertVector, Transform};
use crate::quad;
use crate::rng;

/// Finite moving-average model for the covariate process.
#[derive(Debug, Clone)]
pub struct LinearProcessModel {
    /// Weight matrices `a_0, ..., a_q`, each `d x d`.
    weights: Vec<DMatrix<f64>>,
    dim: usize,
}

impl LinearProcessModel {
    pub fn new(weights: Vec<DMatrix<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(CoreError::InvalidArgument(
                "model needs at least the lag-0 weight matrix".into(),
            ));
        }
        let d = weights[0].nrows();
        if d == 0 {
            return Err(CoreError::InvalidArgument("dimension must be >= 1".into()));
        }
        for w in &weights {
            if w.nrows() != d || w.ncols() != d {
                return Err(CoreError::InvalidArgument(format!(
                    "all weight matrices must be {d}x{d}"
                )));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::NonFinite {
                    what: "weight matrix entry".into(),
                });
            }
        }
        Ok(Self { weights, dim: d })
    }

    /// i.i.d. model: `q = 0`, `a_0 = I`.
    pub fn iid(d: usize) -> Result<Self> {
        Self::new(vec![DMatrix::identity(d, d)])
    }

    /// Moving average of order `q` with `a_m = rho^m I`, giving geometric
    /// covariance decay truncated at lag `q`.
    pub fn geometric(d: usize, rho: f64, q: usize) -> Result<Self> {
        if !rho.is_finite() {
            return Err(CoreError::NonFinite { what: "rho".into() });
        }
        let weights = (0..=q)
            .map(|m| DMatrix::identity(d, d) * rho.powi(m as i32))
            .collect();
        Self::new(weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Moving-average order `q`.
    pub fn order(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    /// Closed-form lag covariance `Cov(X_i, X_{i+s}) = sum_m a_m a_{m+s}^T`.
    pub fn lag_covariance(&self, s: usize) -> DMatrix<f64> {
        let d = self.dim;
        let q = self.order();
        let mut cov = DMatrix::zeros(d, d);
        if s > q {
            return cov;
        }
        for m in 0..=(q - s) {
            cov += &self.weights[m] * self.weights[m + s].transpose();
        }
        cov
    }
}

/// Regression functions with declared Hoelder smoothness `|r(u) - r(v)| <=
/// c7 ||u - v||^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressionFn {
    Zero,
    Constant(f64),
    /// `r(x) = sin(<x, e_1>)`; beta = 1, c7 = 1.
    SinFirst,
    /// `r(x) = <x, e_1>^2` clipped to `[-10, 10]`; beta = 1 with c7 = 2*sqrt(10)
    /// (the clip caps the active range of the first coordinate).
    SquareFirstClipped,
}

impl RegressionFn {
    pub fn eval(&self, x: &HilbertVector) -> f64 {
        match self {
            RegressionFn::Zero => 0.0,
            RegressionFn::Constant(c) => *c,
            RegressionFn::SinFirst => x.coeffs()[0].sin(),
            RegressionFn::SquareFirstClipped => (x.coeffs()[0] * x.coeffs()[0]).clamp(-10.0, 10.0),
        }
    }

    pub fn holder_beta(&self) -> f64 {
        1.0
    }

    pub fn holder_constant(&self) -> f64 {
        match self {
            RegressionFn::Zero | RegressionFn::Constant(_) => 0.0,
            RegressionFn::SinFirst => 1.0,
            RegressionFn::SquareFirstClipped => 2.0 * 10.0_f64.sqrt(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            RegressionFn::Zero => "zero".into(),
            RegressionFn::Constant(c) => format!("constant({c})"),
            RegressionFn::SinFirst => "sin_first".into(),
            RegressionFn::SquareFirstClipped => "square_first_clipped".into(),
        }
    }
}

/// How the response noise is wired to the covariate innovations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode {
    /// `Y_i = r(X_i) + eta_i`, `eta_i ~ N(0, sd^2)` independent of everything.
    Independent,
    /// `Y_i = r(X_i) + theta * e_i[0] + eta_i`, coupling the response to the
    /// time-`i` innovation's first coordinate.
    SharedInnovation { theta: f64 },
}

#[derive(Debug, Clone)]
pub struct RegressionModel {
    pub r: RegressionFn,
    pub noise_sd: f64,
    pub noise_mode: NoiseMode,
}

impl RegressionModel {
    pub fn new(r: RegressionFn, noise_sd: f64, noise_mode: NoiseMode) -> Result<Self> {
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "noise_sd must be nonnegative and finite".into(),
            ));
        }
        if let NoiseMode::SharedInnovation { theta } = noise_mode {
            if !theta.is_finite() {
                return Err(CoreError::NonFinite { what: "theta".into() });
            }
        }
        Ok(Self { r, noise_sd, noise_mode })
    }
}

fn standard_normal_vec<R: Rng>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Simulates `n` observations of the stationary pair process.
///
/// Deterministic given the generator state; all innovation vectors are drawn
/// first (times `1-q .. n`), then the response noise, so the stream layout is
/// stable across releases.
pub fn simulate_with_rng<R: Rng>(
    model: &LinearProcessModel,
    reg: &RegressionModel,
    n: usize,
    rng: &mut R,
) -> Result<FunctionalSample> {
    if n < 1 {
        return Err(CoreError::InvalidArgument("n must be >= 1".into()));
    }
    let d = model.dim();
    let q = model.order();
    let innovations: Vec<DVector<f64>> =
        (0..n + q).map(|_| standard_normal_vec(d, rng)).collect();
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        // time t = i+1 uses innovations e_{t-q} .. e_t = innovations[i .. i+q]
        let mut x = DVector::zeros(d);
        for (m, a) in model.weights.iter().enumerate() {
            x += a * &innovations[i + q - m];
        }
        let xv = HilbertVector::new(x.iter().copied().collect())?;
        let mut y = reg.r.eval(&xv);
        if let NoiseMode::SharedInnovation { theta } = reg.noise_mode {
            y += theta * innovations[i + q][0];
        }
        records.push((xv, y));
    }
    for rec in records.iter_mut() {
        let eta: f64 = rng.sample(StandardNormal);
        rec.1 += reg.noise_sd * eta;
    }
    FunctionalSample::new(records)
}

/// Seeded wrapper around [`simulate_with_rng`].
pub fn simulate(
    model: &LinearProcessModel,
    reg: &RegressionModel,
    n: usize,
    seed: u64,
) -> Result<FunctionalSample> {
    simulate_with_rng(model, reg, n, &mut rng::derived(seed, 0))
}

/// One draw from the marginal law of `(X_i, Y_i)`.
///
/// Uses fresh innovations `e_0 .. e_q` with `X = sum_m a_m e_m`; the
/// shared-innovation term couples to `e_0`, the time-`i` innovation.
pub fn marginal_draw<R: Rng>(
    model: &LinearProcessModel,
    reg: &RegressionModel,
    rng: &mut R,
) -> (HilbertVector, f64) {
    let d = model.dim();
    let mut x = DVector::zeros(d);
    let mut shared = 0.0;
    for (m, a) in model.weights.iter().enumerate() {
        let eps = standard_normal_vec(d, rng);
        if m == 0 {
            shared = eps[0];
        }
        x += a * eps;
    }
    let xv = HilbertVector::new(x.iter().copied().collect()).expect("finite by construction");
    let mut y = reg.r.eval(&xv);
    if let NoiseMode::SharedInnovation { theta } = reg.noise_mode {
        y += theta * shared;
    }
    y += reg.noise_sd * rng.sample::<f64, _>(StandardNormal);
    (xv, y)
}

/// Exact dependence coefficients of the Gaussian linear model.
///
/// The `X`-block of every lag coefficient is the entrywise absolute sum of
/// the closed-form lag covariance. The response terms cover the noise
/// structure implied by `noise_mode` (exact when `r` is zero; for a nonzero
/// `r` the regression-induced cross-covariances are not included, but they
/// too vanish beyond lag `q`). Coefficients are zero for lags beyond `q`.
pub fn theoretical_lambda(
    model: &LinearProcessModel,
    reg: &RegressionModel,
    max_lag: usize,
) -> DependenceCoefficients {
    let q = model.order();
    let theta = match reg.noise_mode {
        NoiseMode::Independent => 0.0,
        NoiseMode::SharedInnovation { theta } => theta,
    };
    let mut lag_lambda = Vec::with_capacity(max_lag + 1);
    for s in 0..=max_lag {
        let mut lam = 0.0;
        if s <= q {
            let cov = model.lag_covariance(s);
            lam += cov.iter().map(|v| v.abs()).sum::<f64>();
            // Cov(Y_i, X_{i+s}^l) from the shared innovation: theta * a_s[l, 0].
            let a_s = &model.weights[s];
            lam += (0..model.dim()).map(|l| (theta * a_s[(l, 0)]).abs()).sum::<f64>();
            if s == 0 {
                // Same-index terms: Cov(X^k, Y) appears once more, plus Var(Y).
                let a_0 = &model.weights[0];
                lam += (0..model.dim()).map(|k| (theta * a_0[(k, 0)]).abs()).sum::<f64>();
                lam += theta * theta + reg.noise_sd * reg.noise_sd;
            }
        }
        lag_lambda.push(lam);
    }
    let lambda_k = lambda_tail(&lag_lambda, max_lag).expect("nonnegative by construction");
    DependenceCoefficients::new(lag_lambda, lambda_k).expect("valid by construction")
}

/// Conditional law of the response at a fixed covariate value:
/// `Y | X = x ~ N(mean, var)`.
///
/// Requires the marginal covariance of `X` to be invertible when the noise
/// couples to the innovations (Gaussian conditioning of `e_i[0]` on `X_i`).
pub fn conditional_response_law(
    model: &LinearProcessModel,
    reg: &RegressionModel,
    x: &HilbertVector,
) -> Result<(f64, f64)> {
    if x.dim() != model.dim() {
        return Err(CoreError::DimensionMismatch {
            left: x.dim(),
            right: model.dim(),
        });
    }
    let base = reg.r.eval(x);
    match reg.noise_mode {
        NoiseMode::Independent => Ok((base, reg.noise_sd * reg.noise_sd)),
        NoiseMode::SharedInnovation { theta } => {
            // (e_0[0], X) is jointly Gaussian with Cov(e_0[0], X) = a_0[:, 0].
            let cov_x = model.lag_covariance(0);
            let cross = model.weights[0].column(0).clone_owned();
            let chol = cov_x.cholesky().ok_or_else(|| {
                CoreError::InvalidArgument(
                    "covariate covariance is singular; conditional law unavailable".into(),
                )
            })?;
            let solved = chol.solve(&cross);
            let xv = DVector::from_column_slice(x.coeffs());
            let cond_mean = solved.dot(&xv);
            let cond_var = (1.0 - solved.dot(&cross)).max(0.0);
            Ok((
                base + theta * cond_mean,
                theta * theta * cond_var + reg.noise_sd * reg.noise_sd,
            ))
        }
    }
}

/// Conditional second moment `E[phi(Y)^2 | X = x]`.
///
/// Closed form for the identity transform; otherwise a Gaussian expectation
/// evaluated by adaptive quadrature over eight conditional standard
/// deviations.
pub fn conditional_second_moment(
    model: &LinearProcessModel,
    reg: &RegressionModel,
    transform: &Transform,
    x: &HilbertVector,
) -> Result<f64> {
    let (mean, var) = conditional_response_law(model, reg, x)?;
    if let Transform::Identity = transform {
        return Ok(mean * mean + var);
    }
    if var == 0.0 {
        let t = transform.eval(mean);
        return Ok(t * t);
    }
    let sd = var.sqrt();
    let density = |y: f64| {
        let z = (y - mean) / sd;
        (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    quad::adaptive_simpson(
        |y| {
            let t = transform.eval(y);
            t * t * density(y)
        },
        mean - 8.0 * sd,
        mean + 8.0 * sd,
        1e-10,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn iid_reg(sd: f64) -> RegressionModel {
        RegressionModel::new(RegressionFn::Zero, sd, NoiseMode::Independent).unwrap()
    }

    fn lag_cov_1d(xs: &[f64], lag: usize) -> f64 {
        let n = xs.len() - lag;
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        (0..n).map(|i| (xs[i] - mean) * (xs[i + lag] - mean)).sum::<f64>() / n as f64
    }

    #[test]
    fn zero_regression_and_zero_noise_gives_zero_responses() {
        let model = LinearProcessModel::iid(2).unwrap();
        let sample = simulate(&model, &iid_reg(0.0), 3, 99).unwrap();
        assert_eq!(sample.len(), 3);
        for (_, y) in sample.iter() {
            assert_eq!(y, 0.0);
        }
    }

    #[test]
    fn simulate_is_deterministic_given_seed() {
        let model = LinearProcessModel::geometric(2, 0.5, 1).unwrap();
        let reg = RegressionModel::new(RegressionFn::SinFirst, 0.5, NoiseMode::Independent).unwrap();
        let a = simulate(&model, &reg, 20, 7).unwrap();
        let b = simulate(&model, &reg, 20, 7).unwrap();
        for i in 0..20 {
            assert_eq!(a.y(i), b.y(i));
            assert_eq!(a.x(i).coeffs(), b.x(i).coeffs());
        }
        let c = simulate(&model, &reg, 20, 8).unwrap();
        assert_ne!(a.y(0), c.y(0));
    }

    #[test]
    fn iid_model_has_negligible_lag_one_covariance() {
        let n = 100_000;
        let model = LinearProcessModel::iid(1).unwrap();
        let sample = simulate(&model, &iid_reg(0.0), n, 11).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| sample.x(i).coeffs()[0]).collect();
        let cov = lag_cov_1d(&xs, 1);
        // Var(X) = 1; the lag-1 sample covariance has sd ~ 1/sqrt(n).
        let se = 1.0 / (n as f64).sqrt();
        assert!(cov.abs() <= 3.0 * se, "cov = {cov}, 3se = {}", 3.0 * se);
    }

    #[test]
    fn ma1_lag_one_covariance_matches_closed_form() {
        let n = 100_000;
        let rho = 0.6;
        let model = LinearProcessModel::geometric(1, rho, 1).unwrap();
        let sample = simulate(&model, &iid_reg(0.0), n, 13).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| sample.x(i).coeffs()[0]).collect();
        let cov = lag_cov_1d(&xs, 1);
        // Closed form Cov(X_i, X_{i+1}) = a_0 a_1 = rho; MC standard error of a
        // lag covariance of an MA(1) is of order sqrt(Var(X)^2 + Cov^2)/sqrt(n).
        let var = 1.0 + rho * rho;
        let se = ((var * var + rho * rho) / n as f64).sqrt();
        assert!(
            (cov - rho).abs() <= 3.0 * se,
            "cov = {cov}, expected {rho} +- {}",
            3.0 * se
        );
    }

    #[test]
    fn theoretical_lambda_iid_is_zero_off_diagonal() {
        let model = LinearProcessModel::iid(3).unwrap();
        let coeffs = theoretical_lambda(&model, &iid_reg(1.0), 5);
        for s in 1..=5 {
            assert_eq!(coeffs.lag(s), 0.0);
        }
        assert!(coeffs.lag(0) > 0.0);
    }

    #[test]
    fn theoretical_lambda_ma1_matches_hand_sum() {
        let model = LinearProcessModel::geometric(1, 0.5, 1).unwrap();
        let coeffs = theoretical_lambda(&model, &iid_reg(0.0), 3);
        assert_relative_eq!(coeffs.lag(1), 0.5, max_relative = 1e-12);
        assert_eq!(coeffs.lag(2), 0.0);
        assert_eq!(coeffs.lag(3), 0.0);
    }

    #[test]
    fn shared_innovation_adds_cross_term() {
        let model = LinearProcessModel::geometric(1, 0.5, 1).unwrap();
        let reg =
            RegressionModel::new(RegressionFn::Zero, 0.0, NoiseMode::SharedInnovation { theta: 0.3 })
                .unwrap();
        let coeffs = theoretical_lambda(&model, &reg, 2);
        // X-block 0.5 plus |Cov(Y_i, X_{i+1})| = 0.3 * 0.5 = 0.15.
        assert_relative_eq!(coeffs.lag(1), 0.65, max_relative = 1e-12);
    }

    #[test]
    fn empirical_covariances_match_theoretical_building_blocks() {
        // Monte Carlo oracle cross-check of the closed-form lambda terms.
        let n = 1_000_000;
        let theta = 0.3;
        let model = LinearProcessModel::geometric(1, 0.5, 1).unwrap();
        let reg =
            RegressionModel::new(RegressionFn::Zero, 0.0, NoiseMode::SharedInnovation { theta })
                .unwrap();
        let sample = simulate(&model, &reg, n, 17).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| sample.x(i).coeffs()[0]).collect();
        let ys: Vec<f64> = (0..n).map(|i| sample.y(i)).collect();

        let sd_x = lag_cov_1d(&xs, 0).sqrt();
        let sd_y = lag_cov_1d(&ys, 0).sqrt();
        let tol = 4.0 / (n as f64).sqrt();

        let cov_xx1 = lag_cov_1d(&xs, 1);
        assert!((cov_xx1 - 0.5).abs() <= tol * sd_x * sd_x);

        // Cov(Y_i, X_{i+1}) = theta * a_1.
        let mean_x = xs.iter().sum::<f64>() / n as f64;
        let mean_y = ys.iter().sum::<f64>() / n as f64;
        let cov_yx1 = (0..n - 1)
            .map(|i| (ys[i] - mean_y) * (xs[i + 1] - mean_x))
            .sum::<f64>()
            / (n - 1) as f64;
        assert!((cov_yx1 - theta * 0.5).abs() <= tol * sd_y * sd_x);

        // X_i sees no future innovations: Cov(X_i, Y_{i+1}) = 0.
        let cov_xy1 = (0..n - 1)
            .map(|i| (xs[i] - mean_x) * (ys[i + 1] - mean_y))
            .sum::<f64>()
            / (n - 1) as f64;
        assert!(cov_xy1.abs() <= tol * sd_y * sd_x);
    }

    #[test]
    fn conditional_law_independent_noise() {
        let model = LinearProcessModel::iid(2).unwrap();
        let reg = RegressionModel::new(RegressionFn::SinFirst, 0.5, NoiseMode::Independent).unwrap();
        let x = HilbertVector::new(vec![0.7, -0.1]).unwrap();
        let (mean, var) = conditional_response_law(&model, &reg, &x).unwrap();
        assert_relative_eq!(mean, 0.7_f64.sin(), max_relative = 1e-12);
        assert_relative_eq!(var, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn conditional_law_shared_innovation_iid_case() {
        // q = 0, a_0 = I: X = e exactly, so e[0] | X = x is degenerate at x_1.
        let model = LinearProcessModel::iid(2).unwrap();
        let theta = 0.4;
        let reg =
            RegressionModel::new(RegressionFn::Zero, 0.3, NoiseMode::SharedInnovation { theta })
                .unwrap();
        let x = HilbertVector::new(vec![1.5, 0.0]).unwrap();
        let (mean, var) = conditional_response_law(&model, &reg, &x).unwrap();
        assert_relative_eq!(mean, theta * 1.5, max_relative = 1e-10);
        assert_relative_eq!(var, 0.09, max_relative = 1e-10, epsilon = 1e-12);
    }

    #[test]
    fn conditional_second_moment_closed_form_vs_quadrature() {
        let model = LinearProcessModel::iid(1).unwrap();
        let reg = RegressionModel::new(RegressionFn::SinFirst, 0.5, NoiseMode::Independent).unwrap();
        let x = HilbertVector::new(vec![0.3]).unwrap();
        let id = conditional_second_moment(&model, &reg, &Transform::Identity, &x).unwrap();
        assert_relative_eq!(id, 0.3_f64.sin().powi(2) + 0.25, max_relative = 1e-12);
        // A wide clip behaves like the identity.
        let clipped =
            conditional_second_moment(&model, &reg, &Transform::Clip { bound: 50.0 }, &x).unwrap();
        assert_relative_eq!(clipped, id, max_relative = 1e-6);
    }

    #[test]
    fn marginal_draw_matches_model_variance() {
        let model = LinearProcessModel::geometric(2, 0.5, 3).unwrap();
        let reg = iid_reg(0.0);
        let mut rng = crate::rng::derived(5, 0);
        let m = 200_000;
        let mut sum_sq = 0.0;
        for _ in 0..m {
            let (x, _) = marginal_draw(&model, &reg, &mut rng);
            sum_sq += x.coeffs()[0] * x.coeffs()[0];
        }
        let var = sum_sq / m as f64;
        let expected: f64 = (0..=3).map(|k| 0.25_f64.powi(k)).sum();
        assert!((var - expected).abs() < 0.02, "var = {var}, expected {expected}");
    }

    #[test]
    fn n_zero_is_rejected() {
        let model = LinearProcessModel::iid(1).unwrap();
        assert!(simulate(&model, &iid_reg(0.0), 0, 1).is_err());
    }
}
