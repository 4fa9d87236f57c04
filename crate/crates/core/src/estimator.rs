//! The kernel regression estimator and its building blocks.
//!
//! The estimate at a query point `x` is the weight-normalized average
//! `sum_i phi(y_i) K(||x - X_i|| / h) / sum_i K(||x - X_i|| / h)`. Both
//! kernels are bounded above and below by positive constants on `[0, 1]`
//! and vanish outside it; the support is closed at `dist/h = 1`, matching
//! the `<=` convention of the small-ball probability `F(u, x) = P(D <= u)`.
//!
//! The numerator/denominator pair `(g_n, f_n)` shares a normalizing constant
//! that cancels in the ratio, so the estimate itself never needs it. Two
//! normalization modes exist for theory-facing work: an oracle value of
//! `E K(D/h)` supplied by the caller, or the self-normalization
//! `F_hat(h, x) * mean integral of K`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hilbert::{sq_dist, FunctionalSample, HilbertVector, Transform};

/// Kernel on `[0, 1]`, bounded between positive constants and Lipschitz on
/// the interior of its support.
///
/// Kernels vanishing at the origin or at 1 (Epanechnikov-type) are excluded:
/// the positive lower bound must hold on all of `[0, 1]`. Both menu entries
/// jump at the right endpoint; the Lipschitz constant refers to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    /// `K(y) = 1` on `[0, 1]`.
    Box,
    /// `K(y) = 2 - y` on `[0, 1]`.
    Slope,
}

impl KernelSpec {
    /// Kernel value at `y >= 0`; zero outside `[0, 1]`, endpoint included.
    pub fn evaluate(&self, y: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        match self {
            KernelSpec::Box => 1.0,
            KernelSpec::Slope => 2.0 - y,
        }
    }

    /// Lower bound `c5` on `[0, 1]`.
    pub fn lower_bound(&self) -> f64 {
        1.0
    }

    /// Upper bound `c6` on `[0, 1]`.
    pub fn upper_bound(&self) -> f64 {
        match self {
            KernelSpec::Box => 1.0,
            KernelSpec::Slope => 2.0,
        }
    }

    /// Lipschitz constant on `[0, 1]`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            KernelSpec::Box => 0.0,
            KernelSpec::Slope => 1.0,
        }
    }

    /// `integral of K over [0, 1]`, used by the self-normalization mode.
    pub fn mean_integral(&self) -> f64 {
        match self {
            KernelSpec::Box => 1.0,
            KernelSpec::Slope => 1.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Box => "box",
            KernelSpec::Slope => "slope",
        }
    }
}

/// Configuration of one estimation run.
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Bandwidth `h > 0`.
    pub h: f64,
    /// Truncation scale: the truncated numerator drops responses with
    /// `|phi(y)| > b0 * ln(n)`. Default 5, large enough that truncation is
    /// inactive with overwhelming probability for Lipschitz transforms of
    /// Gaussian-driven responses at desk scale.
    pub b0: f64,
    pub transform: Transform,
    pub kernel: KernelSpec,
}

impl EstimatorConfig {
    pub fn new(h: f64, kernel: KernelSpec, transform: Transform) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CoreError::InvalidArgument("bandwidth must be positive".into()));
        }
        Ok(Self { h, b0: 5.0, transform, kernel })
    }

    pub fn with_b0(mut self, b0: f64) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(CoreError::InvalidArgument("b0 must be positive".into()));
        }
        self.b0 = b0;
        Ok(self)
    }

    /// Truncation level `b_n = b0 * ln(n)`; requires `n >= 2`.
    pub fn truncation_level(&self, n: usize) -> Result<f64> {
        if n < 2 {
            return Err(CoreError::InvalidArgument(
                "truncation level needs n >= 2".into(),
            ));
        }
        Ok(self.b0 * (n as f64).ln())
    }
}

/// `K(dist / h)`.
pub fn kernel_weight(kernel: KernelSpec, dist: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(CoreError::InvalidArgument("bandwidth must be positive".into()));
    }
    if !(dist >= 0.0) {
        return Err(CoreError::InvalidArgument("distance must be nonnegative".into()));
    }
    Ok(kernel.evaluate(dist / h))
}

fn check_query(sample: &FunctionalSample, x: &HilbertVector) -> Result<()> {
    if sample.dim() != x.dim() {
        return Err(CoreError::DimensionMismatch {
            left: sample.dim(),
            right: x.dim(),
        });
    }
    Ok(())
}

fn distances(sample: &FunctionalSample, x: &HilbertVector) -> Vec<f64> {
    let xc = x.coeffs();
    (0..sample.len())
        .map(|i| sq_dist(sample.x(i).coeffs(), xc).sqrt())
        .collect()
}

/// Weighted-average estimate of the regression transform at `x`.
///
/// Lies between the min and max of `phi(y_i)` over in-window points. Fails
/// with [`CoreError::NoNeighbors`] (carrying the smallest observed distance)
/// when no point falls within the bandwidth, rather than returning a silent
/// 0/0.
pub fn regression_estimate(
    sample: &FunctionalSample,
    x: &HilbertVector,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    weighted_response_mean(sample, x, cfg, |y| cfg.transform.eval(y))
}

/// Kernel-weighted mean of an arbitrary function of the responses, sharing
/// the estimator's weights. Backs the plug-in conditional moments.
pub(crate) fn weighted_response_mean(
    sample: &FunctionalSample,
    x: &HilbertVector,
    cfg: &EstimatorConfig,
    value: impl Fn(f64) -> f64,
) -> Result<f64> {
    check_query(sample, x)?;
    let dists = distances(sample, x);
    weighted_average(sample, &dists, cfg, value)
}

fn weighted_average(
    sample: &FunctionalSample,
    dists: &[f64],
    cfg: &EstimatorConfig,
    value: impl Fn(f64) -> f64,
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut min_dist = f64::INFINITY;
    for (i, &d) in dists.iter().enumerate() {
        min_dist = min_dist.min(d);
        let w = cfg.kernel.evaluate(d / cfg.h);
        if w > 0.0 {
            num += value(sample.y(i)) * w;
            den += w;
        }
    }
    if den == 0.0 {
        return Err(CoreError::NoNeighbors { min_distance: min_dist });
    }
    Ok(num / den)
}

/// Normalized numerator/denominator pair `(g_n, f_n)` with
/// `g_n = (1/(n*norm)) sum phi(y_i) K(d_i/h)` and
/// `f_n = (1/(n*norm)) sum K(d_i/h)`.
///
/// `norm` is the caller's value for `E K(D/h)`: a model oracle for
/// theory-facing experiments, or `F_hat(h,x) * mean integral of K` in
/// empirical mode. The ratio `g_n/f_n` equals [`regression_estimate`]
/// whenever the denominator is positive, independent of `norm`.
pub fn numerator_denominator(
    sample: &FunctionalSample,
    x: &HilbertVector,
    cfg: &EstimatorConfig,
    norm: f64,
) -> Result<(f64, f64)> {
    check_query(sample, x)?;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(CoreError::InvalidArgument("norm must be positive".into()));
    }
    let n = sample.len() as f64;
    let mut g = 0.0;
    let mut f = 0.0;
    for (i, &d) in distances(sample, x).iter().enumerate() {
        let w = cfg.kernel.evaluate(d / cfg.h);
        if w > 0.0 {
            g += cfg.transform.eval(sample.y(i)) * w;
            f += w;
        }
    }
    Ok((g / (n * norm), f / (n * norm)))
}

/// Truncated numerator: terms with `|phi(y_i)| > b0 * ln(n)` are dropped.
/// Equals `g_n` exactly once the truncation level exceeds `max |phi(y_i)|`.
pub fn truncated_numerator(
    sample: &FunctionalSample,
    x: &HilbertVector,
    cfg: &EstimatorConfig,
    norm: f64,
) -> Result<f64> {
    check_query(sample, x)?;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(CoreError::InvalidArgument("norm must be positive".into()));
    }
    let level = cfg.truncation_level(sample.len())?;
    let n = sample.len() as f64;
    let mut g = 0.0;
    for (i, &d) in distances(sample, x).iter().enumerate() {
        let w = cfg.kernel.evaluate(d / cfg.h);
        let phi = cfg.transform.eval(sample.y(i));
        if w > 0.0 && phi.abs() <= level {
            g += phi * w;
        }
    }
    Ok(g / (n * norm))
}

/// Empirical small-ball distribution on a grid of radii.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmallBallEstimate {
    pub u_grid: Vec<f64>,
    /// `F_hat(u, x) = (1/n) #{i : ||x - X_i|| <= u}`.
    pub f_hat: Vec<f64>,
    /// Optional model Monte Carlo values of `F(u, x)` on the same grid.
    pub f_oracle: Option<Vec<f64>>,
}

impl SmallBallEstimate {
    /// `F_hat(u)/phi(u)` on the grid — the empirical proxy for the local
    /// scaling function; the split between rate and location factors is not
    /// identified, so this is a diagnostic, not an estimate of either alone.
    pub fn ratio_to(&self, phi: impl Fn(f64) -> f64) -> Vec<f64> {
        self.u_grid
            .iter()
            .zip(&self.f_hat)
            .map(|(&u, &f)| f / phi(u))
            .collect()
    }
}

/// Empirical small-ball probabilities at `x` over an increasing grid of
/// positive radii.
pub fn small_ball_empirical(
    sample: &FunctionalSample,
    x: &HilbertVector,
    u_grid: &[f64],
) -> Result<SmallBallEstimate> {
    check_query(sample, x)?;
    if u_grid.is_empty() {
        return Err(CoreError::InvalidArgument("radius grid must be non-empty".into()));
    }
    for w in u_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(CoreError::InvalidArgument("radius grid must be increasing".into()));
        }
    }
    if u_grid[0] <= 0.0 {
        return Err(CoreError::InvalidArgument("radii must be positive".into()));
    }
    let mut dists = distances(sample, x);
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let n = dists.len() as f64;
    let f_hat = u_grid
        .iter()
        .map(|&u| dists.partition_point(|&d| d <= u) as f64 / n)
        .collect();
    Ok(SmallBallEstimate {
        u_grid: u_grid.to_vec(),
        f_hat,
        f_oracle: None,
    })
}

/// Empirical joint small-ball probability: the sup over gaps `s = 1..=max_gap`
/// of the frequency of `D_i <= u` and `D_{i+s} <= u`.
///
/// Diagnostic for the joint-concentration assumption: the ratio of this
/// quantity to `F_hat(u, x)^2` should stay bounded as `u` shrinks.
pub fn joint_small_ball(
    sample: &FunctionalSample,
    x: &HilbertVector,
    u: f64,
    max_gap: usize,
) -> Result<f64> {
    check_query(sample, x)?;
    if !(u > 0.0) {
        return Err(CoreError::InvalidArgument("radius must be positive".into()));
    }
    if max_gap < 1 {
        return Err(CoreError::InvalidArgument("max_gap must be >= 1".into()));
    }
    if sample.len() <= max_gap {
        return Err(CoreError::InvalidArgument(format!(
            "need n > max_gap, got n = {} and max_gap = {max_gap}",
            sample.len()
        )));
    }
    let inside: Vec<bool> = distances(sample, x).iter().map(|&d| d <= u).collect();
    let n = inside.len();
    let mut sup = 0.0f64;
    for s in 1..=max_gap {
        let count = (0..n - s).filter(|&i| inside[i] && inside[i + s]).count();
        sup = sup.max(count as f64 / (n - s) as f64);
    }
    Ok(sup)
}

/// Outcome of leave-one-out bandwidth selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub h: f64,
    /// Leave-one-out squared error summed over predictable indices, per grid
    /// value (same order as the input grid); `None` where nothing was
    /// predictable.
    pub losses: Vec<Option<f64>>,
    /// Number of indices skipped for lack of neighbors, per grid value.
    pub skipped: Vec<usize>,
}

/// Selects a bandwidth from `h_grid` by leave-one-out cross-validation of the
/// transformed responses, over the indices in `eval_indices` (all of the
/// sample when `None`).
///
/// The loss for a grid value is the sum of squared leave-one-out errors over
/// the indices where the estimator is defined; indices without neighbors are
/// skipped and counted. Ties break toward the smaller bandwidth. Fails if
/// every grid value leaves every index without neighbors.
pub fn cross_validate_bandwidth(
    sample: &FunctionalSample,
    eval_indices: Option<&[usize]>,
    h_grid: &[f64],
    cfg: &EstimatorConfig,
) -> Result<BandwidthSelection> {
    if h_grid.is_empty() {
        return Err(CoreError::InvalidArgument("bandwidth grid must be non-empty".into()));
    }
    if h_grid.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(CoreError::InvalidArgument("bandwidths must be positive".into()));
    }
    let owned: Vec<usize>;
    let indices: &[usize] = match eval_indices {
        Some(idx) => {
            if idx.iter().any(|&i| i >= sample.len()) {
                return Err(CoreError::InvalidArgument("evaluation index out of range".into()));
            }
            idx
        }
        None => {
            owned = (0..sample.len()).collect();
            &owned
        }
    };

    // Pairwise distances once; the grid only changes the window.
    let n = sample.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(sample.x(i).coeffs(), sample.x(j).coeffs()).sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut losses = Vec::with_capacity(h_grid.len());
    let mut skipped = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let mut loss = 0.0;
        let mut used = 0usize;
        let mut skip = 0usize;
        for &i in indices {
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let w = cfg.kernel.evaluate(dist[i * n + j] / h);
                if w > 0.0 {
                    num += cfg.transform.eval(sample.y(j)) * w;
                    den += w;
                }
            }
            if den > 0.0 {
                let resid = cfg.transform.eval(sample.y(i)) - num / den;
                loss += resid * resid;
                used += 1;
            } else {
                skip += 1;
            }
        }
        losses.push(if used > 0 { Some(loss) } else { None });
        skipped.push(skip);
    }

    let mut best: Option<(f64, f64)> = None;
    for (&h, loss) in h_grid.iter().zip(&losses) {
        if let Some(l) = loss {
            let better = match best {
                None => true,
                Some((_, bl)) => *l < bl || (*l == bl && h < best.expect("set").0),
            };
            if better {
                best = Some((h, *l));
            }
        }
    }
    match best {
        Some((h, _)) => Ok(BandwidthSelection { h, losses, skipped }),
        None => Err(CoreError::Selection(
            "every bandwidth in the grid left all evaluation points without neighbors".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::HilbertVector;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn v(c: &[f64]) -> HilbertVector {
        HilbertVector::new(c.to_vec()).unwrap()
    }

    fn sample(points: &[(&[f64], f64)]) -> FunctionalSample {
        FunctionalSample::new(points.iter().map(|(x, y)| (v(x), *y)).collect()).unwrap()
    }

    fn cfg(h: f64, kernel: KernelSpec) -> EstimatorConfig {
        EstimatorConfig::new(h, kernel, Transform::Identity).unwrap()
    }

    #[test]
    fn kernel_weight_examples() {
        assert_eq!(kernel_weight(KernelSpec::Box, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(kernel_weight(KernelSpec::Box, 1.5, 1.0).unwrap(), 0.0);
        assert_eq!(kernel_weight(KernelSpec::Slope, 0.5, 1.0).unwrap(), 1.5);
        // Closed right endpoint.
        assert_eq!(kernel_weight(KernelSpec::Box, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(kernel_weight(KernelSpec::Slope, 1.0, 1.0).unwrap(), 1.0);
        assert!(kernel_weight(KernelSpec::Box, 0.5, 0.0).is_err());
        assert!(kernel_weight(KernelSpec::Box, 0.5, -1.0).is_err());
    }

    #[test]
    fn single_point_estimate_returns_its_response() {
        let s = sample(&[(&[0.1, 0.0], 4.5)]);
        let r = regression_estimate(&s, &v(&[0.0, 0.0]), &cfg(1.0, KernelSpec::Box)).unwrap();
        assert_eq!(r, 4.5);
    }

    #[test]
    fn box_kernel_averages_in_window_points() {
        let s = sample(&[(&[0.1], 1.0), (&[0.2], 3.0), (&[5.0], 100.0)]);
        let r = regression_estimate(&s, &v(&[0.0]), &cfg(1.0, KernelSpec::Box)).unwrap();
        assert_eq!(r, 2.0);
    }

    #[test]
    fn slope_kernel_weights_by_distance() {
        // dists {0, h}, responses {0, 1}: (2*0 + 1*1) / (2 + 1) = 1/3.
        let s = sample(&[(&[0.0], 0.0), (&[1.0], 1.0)]);
        let r = regression_estimate(&s, &v(&[0.0]), &cfg(1.0, KernelSpec::Slope)).unwrap();
        assert_relative_eq!(r, 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn no_neighbors_reports_closest_distance() {
        let s = sample(&[(&[3.0, 4.0], 1.0), (&[6.0, 8.0], 2.0)]);
        let err = regression_estimate(&s, &v(&[0.0, 0.0]), &cfg(1.0, KernelSpec::Box)).unwrap_err();
        match err {
            CoreError::NoNeighbors { min_distance } => assert_relative_eq!(min_distance, 5.0),
            other => panic!("expected NoNeighbors, got {other:?}"),
        }
    }

    #[test]
    fn numerator_denominator_single_point() {
        let s = sample(&[(&[0.0], 7.0), (&[9.0], 1.0)]);
        let (g, f) = numerator_denominator(&s, &v(&[0.0]), &cfg(1.0, KernelSpec::Box), 1.0).unwrap();
        assert_eq!(g, 7.0 / 2.0);
        assert_eq!(f, 1.0 / 2.0);
    }

    #[test]
    fn ratio_matches_regression_estimate_for_any_norm() {
        let mut rng = crate::rng::derived(41, 0);
        for _ in 0..100 {
            let n = rng.gen_range(1..30);
            let pts: Vec<(HilbertVector, f64)> = (0..n)
                .map(|_| {
                    (
                        v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]),
                        rng.gen_range(-5.0..5.0),
                    )
                })
                .collect();
            let s = FunctionalSample::new(pts).unwrap();
            let x = v(&[rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]);
            let c = cfg(rng.gen_range(0.5..2.0), KernelSpec::Slope);
            let norm1 = rng.gen_range(0.01..10.0);
            let norm2 = rng.gen_range(0.01..10.0);
            let (g1, f1) = numerator_denominator(&s, &x, &c, norm1).unwrap();
            let (g2, f2) = numerator_denominator(&s, &x, &c, norm2).unwrap();
            match regression_estimate(&s, &x, &c) {
                Ok(r) => {
                    assert_relative_eq!(g1 / f1, r, max_relative = 1e-12);
                    assert_relative_eq!(g1 / f1, g2 / f2, max_relative = 1e-12);
                }
                Err(CoreError::NoNeighbors { .. }) => {
                    assert_eq!(f1, 0.0);
                    assert_eq!(f2, 0.0);
                }
                Err(other) => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn oracle_normalized_denominator_has_unit_mean() {
        // E f_n = E Delta / norm = 1 when norm is the true E Delta.
        use crate::simulate::{LinearProcessModel, NoiseMode, RegressionFn, RegressionModel};
        let model = LinearProcessModel::iid(2).unwrap();
        let reg = RegressionModel::new(RegressionFn::Zero, 0.0, NoiseMode::Independent).unwrap();
        let x = v(&[0.0, 0.0]);
        let c = cfg(1.0, KernelSpec::Box);

        let mut rng = crate::rng::derived(55, 0);
        let draws = 100_000;
        let mut mean_delta = 0.0;
        let mut dist_samples = Vec::with_capacity(draws);
        for _ in 0..draws {
            let (xv, _) = crate::simulate::marginal_draw(&model, &reg, &mut rng);
            let d = xv.distance(&x).unwrap();
            dist_samples.push(d);
            mean_delta += c.kernel.evaluate(d / c.h);
        }
        mean_delta /= draws as f64;

        let reps = 300;
        let n = 50;
        let mut sum_f = 0.0;
        let mut sum_f2 = 0.0;
        for r in 0..reps {
            let s = crate::simulate::simulate(&model, &reg, n, 1000 + r).unwrap();
            let (_, f) = numerator_denominator(&s, &x, &c, mean_delta).unwrap();
            sum_f += f;
            sum_f2 += f * f;
        }
        let mean_f = sum_f / reps as f64;
        let var_f = sum_f2 / reps as f64 - mean_f * mean_f;
        let se = (var_f / reps as f64).sqrt();
        assert!(
            (mean_f - 1.0).abs() <= 3.0 * se + 0.01,
            "mean f_n = {mean_f}, se = {se}"
        );
    }

    #[test]
    fn truncation_matches_untruncated_when_inactive() {
        let s = sample(&[(&[0.0], 1.0), (&[0.2], -2.0), (&[0.4], 0.5)]);
        let c = cfg(1.0, KernelSpec::Slope);
        let x = v(&[0.0]);
        let (g, _) = numerator_denominator(&s, &x, &c, 2.0).unwrap();
        let gt = truncated_numerator(&s, &x, &c, 2.0).unwrap();
        assert_eq!(g, gt);
    }

    #[test]
    fn truncation_drops_large_responses() {
        // Single in-window point far above the truncation level.
        let c = cfg(1.0, KernelSpec::Box).with_b0(1.0).unwrap();
        let level = 1.0 * (2.0f64).ln();
        let s = sample(&[(&[0.0], 10.0 * level), (&[9.0], 0.0)]);
        let gt = truncated_numerator(&s, &v(&[0.0]), &c, 1.0).unwrap();
        assert_eq!(gt, 0.0);
    }

    #[test]
    fn truncation_matches_brute_force_on_mixed_sample() {
        let c = cfg(1.0, KernelSpec::Slope).with_b0(0.5).unwrap();
        let pts: Vec<(&[f64], f64)> = vec![
            (&[0.0], 0.2),
            (&[0.3], 5.0),
            (&[0.6], -0.4),
            (&[0.9], -7.0),
            (&[2.0], 1.0),
        ];
        let s = sample(&pts);
        let level = 0.5 * (5.0f64).ln();
        let norm = 1.7;
        // Independent re-summation over kept indices.
        let mut expected = 0.0;
        for (x, y) in &pts {
            let d = x[0].abs();
            let w = c.kernel.evaluate(d / c.h);
            if w > 0.0 && y.abs() <= level {
                expected += y * w;
            }
        }
        expected /= 5.0 * norm;
        let gt = truncated_numerator(&s, &v(&[0.0]), &c, norm).unwrap();
        assert_relative_eq!(gt, expected, max_relative = 1e-14);
    }

    #[test]
    fn truncation_needs_two_points() {
        let s = sample(&[(&[0.0], 1.0)]);
        assert!(truncated_numerator(&s, &v(&[0.0]), &cfg(1.0, KernelSpec::Box), 1.0).is_err());
    }

    #[test]
    fn small_ball_examples() {
        let s = sample(&[(&[0.1], 0.0), (&[0.2], 0.0), (&[0.3], 0.0)]);
        let x = v(&[0.0]);
        let est = small_ball_empirical(&s, &x, &[0.25]).unwrap();
        assert_relative_eq!(est.f_hat[0], 2.0 / 3.0);
        let est = small_ball_empirical(&s, &x, &[0.05]).unwrap();
        assert_eq!(est.f_hat[0], 0.0);
        let est = small_ball_empirical(&s, &x, &[0.5]).unwrap();
        assert_eq!(est.f_hat[0], 1.0);
        // Closed ball: a radius equal to a distance counts the point.
        let est = small_ball_empirical(&s, &x, &[0.2]).unwrap();
        assert_relative_eq!(est.f_hat[0], 2.0 / 3.0);
    }

    #[test]
    fn small_ball_is_monotone_and_validates_grid() {
        let s = sample(&[(&[0.1], 0.0), (&[0.9], 0.0), (&[0.4], 0.0)]);
        let x = v(&[0.0]);
        let est = small_ball_empirical(&s, &x, &[0.2, 0.5, 1.0]).unwrap();
        for w in est.f_hat.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(small_ball_empirical(&s, &x, &[]).is_err());
        assert!(small_ball_empirical(&s, &x, &[0.5, 0.2]).is_err());
        assert!(small_ball_empirical(&s, &x, &[0.0, 0.2]).is_err());
    }

    #[test]
    fn joint_small_ball_brute_force_and_bounds() {
        use crate::simulate::{LinearProcessModel, NoiseMode, RegressionFn, RegressionModel};
        let model = LinearProcessModel::geometric(1, 0.8, 1).unwrap();
        let reg = RegressionModel::new(RegressionFn::Zero, 0.0, NoiseMode::Independent).unwrap();
        let s = crate::simulate::simulate(&model, &reg, 20_000, 77).unwrap();
        let x = v(&[0.0]);
        let u = 0.5;
        let joint = joint_small_ball(&s, &x, u, 1).unwrap();

        // Brute-force count oracle for gap 1.
        let dists: Vec<f64> = (0..s.len()).map(|i| s.x(i).distance(&x).unwrap()).collect();
        let count = (0..s.len() - 1)
            .filter(|&i| dists[i] <= u && dists[i + 1] <= u)
            .count();
        assert_relative_eq!(joint, count as f64 / (s.len() - 1) as f64);

        // Positively dependent MA(1): between F_hat^2 and F_hat (with slack
        // for sampling noise).
        let f_hat = small_ball_empirical(&s, &x, &[u]).unwrap().f_hat[0];
        assert!(joint >= f_hat * f_hat * 0.9);
        assert!(joint <= f_hat * 1.1);
    }

    #[test]
    fn joint_small_ball_factorizes_for_iid_design() {
        use crate::simulate::{LinearProcessModel, NoiseMode, RegressionFn, RegressionModel};
        let model = LinearProcessModel::iid(1).unwrap();
        let reg = RegressionModel::new(RegressionFn::Zero, 0.0, NoiseMode::Independent).unwrap();
        let s = crate::simulate::simulate(&model, &reg, 50_000, 81).unwrap();
        let x = v(&[0.0]);
        let u = 0.6;
        let joint = joint_small_ball(&s, &x, u, 3).unwrap();
        let f_hat = small_ball_empirical(&s, &x, &[u]).unwrap().f_hat[0];
        // Independence: joint probability factorizes; the sup over 3 gaps of
        // a binomial frequency sits within a few standard errors of F^2.
        let se = (f_hat * f_hat * (1.0 - f_hat * f_hat) / s.len() as f64).sqrt();
        assert!(
            (joint - f_hat * f_hat).abs() <= 4.0 * se,
            "joint = {joint}, F^2 = {}",
            f_hat * f_hat
        );
    }

    #[test]
    fn small_ball_ratio_diagnostic() {
        let s = sample(&[(&[0.1], 0.0), (&[0.2], 0.0), (&[0.4], 0.0), (&[0.8], 0.0)]);
        let est = small_ball_empirical(&s, &v(&[0.0]), &[0.2, 0.4, 0.8]).unwrap();
        let ratios = est.ratio_to(|u| u);
        for (r, (&u, &f)) in ratios.iter().zip(est.u_grid.iter().zip(&est.f_hat)) {
            assert_relative_eq!(*r, f / u, max_relative = 1e-15);
        }
    }

    #[test]
    fn joint_small_ball_zero_when_no_pairs_inside() {
        let s = sample(&[(&[5.0], 0.0), (&[6.0], 0.0), (&[7.0], 0.0)]);
        assert_eq!(joint_small_ball(&s, &v(&[0.0]), 1e-6, 2).unwrap(), 0.0);
        assert!(joint_small_ball(&s, &v(&[0.0]), 1e-6, 3).is_err());
    }

    #[test]
    fn cv_single_grid_value_is_selected() {
        let s = sample(&[(&[0.0], 1.0), (&[0.5], 2.0)]);
        let sel =
            cross_validate_bandwidth(&s, None, &[0.7], &cfg(1.0, KernelSpec::Box)).unwrap();
        assert_eq!(sel.h, 0.7);
    }

    #[test]
    fn cv_ties_break_toward_smaller_bandwidth() {
        // Constant responses: every bandwidth with neighbors has zero loss.
        let s = sample(&[(&[0.0], 3.0), (&[0.5], 3.0), (&[1.0], 3.0)]);
        let sel = cross_validate_bandwidth(
            &s,
            None,
            &[2.0, 0.6, 1.0],
            &cfg(1.0, KernelSpec::Box),
        )
        .unwrap();
        assert_eq!(sel.h, 0.6);
    }

    #[test]
    fn cv_matches_brute_force_recomputation() {
        let mut rng = crate::rng::derived(91, 0);
        let n = 60;
        let pts: Vec<(HilbertVector, f64)> = (0..n)
            .map(|_| {
                let x: f64 = rng.gen_range(-2.0..2.0);
                let y = x * x + 0.3 * rng.gen_range(-1.0..1.0f64);
                (v(&[x]), y)
            })
            .collect();
        let s = FunctionalSample::new(pts.clone()).unwrap();
        let grid = [0.2, 0.5, 1.0, 2.0];
        let c = cfg(1.0, KernelSpec::Box);
        let sel = cross_validate_bandwidth(&s, None, &grid, &c).unwrap();

        // Independent recomputation of the leave-one-out loss.
        let mut best_h = None;
        let mut best_loss = f64::INFINITY;
        for &h in &grid {
            let mut loss = 0.0;
            let mut used = 0;
            for i in 0..n {
                let mut num = 0.0;
                let mut den = 0.0;
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let d = (pts[i].0.coeffs()[0] - pts[j].0.coeffs()[0]).abs();
                    if d <= h {
                        num += pts[j].1;
                        den += 1.0;
                    }
                }
                if den > 0.0 {
                    loss += (pts[i].1 - num / den).powi(2);
                    used += 1;
                }
            }
            if used > 0 && loss < best_loss {
                best_loss = loss;
                best_h = Some(h);
            }
        }
        assert_eq!(sel.h, best_h.unwrap());
    }

    #[test]
    fn cv_fails_when_nothing_is_predictable() {
        let s = sample(&[(&[0.0], 1.0), (&[100.0], 2.0)]);
        let err =
            cross_validate_bandwidth(&s, None, &[0.5, 1.0], &cfg(1.0, KernelSpec::Box)).unwrap_err();
        assert!(matches!(err, CoreError::Selection(_)));
    }

    #[test]
    fn estimate_stays_within_response_range() {
        let mut rng = crate::rng::derived(17, 0);
        for _ in 0..100 {
            let n = rng.gen_range(1..40);
            let pts: Vec<(HilbertVector, f64)> = (0..n)
                .map(|_| (v(&[rng.gen_range(-1.0..1.0)]), rng.gen_range(-3.0..3.0)))
                .collect();
            let s = FunctionalSample::new(pts).unwrap();
            let x = v(&[rng.gen_range(-1.0..1.0)]);
            let c = cfg(rng.gen_range(0.3..1.5), KernelSpec::Slope);
            if let Ok(r) = regression_estimate(&s, &x, &c) {
                let in_window: Vec<f64> = s
                    .iter()
                    .filter(|(xi, _)| xi.distance(&x).unwrap() <= c.h)
                    .map(|(_, y)| y)
                    .collect();
                let lo = in_window.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = in_window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn estimate_is_scale_equivariant_in_transform() {
        let s = sample(&[(&[0.0], 1.5), (&[0.4], -0.7), (&[0.8], 2.2)]);
        let x = v(&[0.1]);
        let base = cfg(1.0, KernelSpec::Slope);
        let scaled = EstimatorConfig {
            transform: Transform::custom("3x", 3.0, |u| 3.0 * u).unwrap(),
            ..base.clone()
        };
        let r1 = regression_estimate(&s, &x, &base).unwrap();
        let r3 = regression_estimate(&s, &x, &scaled).unwrap();
        assert_relative_eq!(r3, 3.0 * r1, max_relative = 1e-13);
    }

    #[test]
    fn estimate_ignores_row_order() {
        let pts = vec![
            (v(&[0.0]), 1.0),
            (v(&[0.3]), 2.0),
            (v(&[0.6]), -1.0),
            (v(&[0.9]), 0.5),
        ];
        let mut shuffled = pts.clone();
        shuffled.reverse();
        shuffled.swap(0, 2);
        let s1 = FunctionalSample::new(pts).unwrap();
        let s2 = FunctionalSample::new(shuffled).unwrap();
        let x = v(&[0.2]);
        let c = cfg(1.0, KernelSpec::Slope);
        assert_relative_eq!(
            regression_estimate(&s1, &x, &c).unwrap(),
            regression_estimate(&s2, &x, &c).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn box_kernel_equals_arithmetic_mean_oracle() {
        // 100 random instances; box-kernel estimate vs arithmetic mean of
        // in-window responses.
        let mut rng = crate::rng::derived(123, 0);
        let mut tested = 0;
        while tested < 100 {
            let n = rng.gen_range(1..=50);
            let d = rng.gen_range(1..=5);
            let pts: Vec<(HilbertVector, f64)> = (0..n)
                .map(|_| {
                    let coords: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    (v(&coords), rng.gen_range(-4.0..4.0))
                })
                .collect();
            let s = FunctionalSample::new(pts).unwrap();
            let xq: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = v(&xq);
            let c = cfg(rng.gen_range(0.4..2.0), KernelSpec::Box);
            let in_window: Vec<f64> = s
                .iter()
                .filter(|(xi, _)| xi.distance(&x).unwrap() <= c.h)
                .map(|(_, y)| y)
                .collect();
            if in_window.is_empty() {
                assert!(regression_estimate(&s, &x, &c).is_err());
                continue;
            }
            let mean = in_window.iter().sum::<f64>() / in_window.len() as f64;
            let r = regression_estimate(&s, &x, &c).unwrap();
            assert!((r - mean).abs() <= 1e-12, "delta = {}", (r - mean).abs());
            tested += 1;
        }
    }

    #[test]
    fn truncation_becomes_inactive_as_b0_grows() {
        let s = sample(&[(&[0.0], 50.0), (&[0.5], -80.0), (&[2.0], 1.0)]);
        let x = v(&[0.0]);
        let norm = 1.0;
        let base = cfg(1.0, KernelSpec::Box);
        let (g, _) = numerator_denominator(&s, &x, &base, norm).unwrap();
        let small = base.clone().with_b0(1.0).unwrap();
        let large = base.clone().with_b0(200.0).unwrap();
        assert_ne!(truncated_numerator(&s, &x, &small, norm).unwrap(), g);
        assert_eq!(truncated_numerator(&s, &x, &large, norm).unwrap(), g);
    }
}
