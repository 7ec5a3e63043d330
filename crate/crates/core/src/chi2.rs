//! Chi-square quantiles by inverting the regularized lower incomplete gamma function.

use statrs::function::gamma::gamma_lr;

use crate::error::{invalid, Result};

/// Inverse CDF of the chi-square distribution with `df` degrees of freedom.
///
/// Brackets the root of `P(df/2, x/2) − p`, then refines with Newton steps
/// that fall back to bisection whenever they leave the bracket.
pub fn chi2_quantile(df: f64, p: f64) -> Result<f64> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(invalid(format!("degrees of freedom must be positive, got {df}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("probability must lie in (0, 1), got {p}")));
    }
    let a = 0.5 * df;
    let cdf = |x: f64| gamma_lr(a, 0.5 * x);
    let ln_gamma_a = statrs::function::gamma::ln_gamma(a);
    let pdf = |x: f64| ((a - 1.0) * (0.5 * x).ln() - 0.5 * x - ln_gamma_a).exp() * 0.5;

    let (mut lo, mut hi) = (0.0_f64, df.max(1.0));
    while cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = cdf(x) - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = f / pdf(x);
        let newton = x - step;
        let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Upper critical value `χ²_{df, 1−α}`.
pub fn critical_value(df: f64, alpha: f64) -> Result<f64> {
    chi2_quantile(df, 1.0 - alpha)
}
