//! Adaptive Simpson quadrature.
//!
//! Small and sufficient for the integrands in this crate: piecewise-smooth
//! kernels on `[0, 1]` and Gaussian expectations on finite windows.

use crate::error::{CoreError, Result};

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive
/// interval bisection with the classic |S_left + S_right - S| / 15 error
/// estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(CoreError::InvalidArgument(
            "integration bounds must be finite with a < b".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(CoreError::InvalidArgument("tolerance must be positive".into()));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let value = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    if !value.is_finite() {
        return Err(CoreError::NonFinite { what: "integral".into() });
    }
    Ok(value)
}

const MAX_DEPTH: u32 = 40;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
