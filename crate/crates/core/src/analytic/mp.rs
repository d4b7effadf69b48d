//! Marcenko-Pastur limit of the pinv memory vector's squared norm.

use std::f64::consts::PI;

use super::quad::integrate;
use crate::error::{domain, Result};

fn check_ratio(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(domain(format!("aspect ratio c = n/d = {c} outside (0, 1)")));
    }
    Ok(())
}

/// Limit of `E[||m*||^2] / n` when `n = c d` and `d -> infinity`.
pub fn mp_pinv_norm_limit(c: f64) -> Result<f64> {
    check_ratio(c)?;
    Ok(1.0 / (1.0 - c))
}

/// Marcenko-Pastur density with ratio `c` (unit variance).
pub fn mp_density(lambda: f64, c: f64) -> Result<f64> {
    check_ratio(c)?;
    let lo = (1.0 - c.sqrt()).powi(2);
    let hi = (1.0 + c.sqrt()).powi(2);
    if lambda <= lo || lambda >= hi {
        return Ok(0.0);
    }
    Ok(((lambda - lo) * (hi - lambda)).sqrt() / (2.0 * PI * c * lambda))
}

/// `int lambda^{-1} f_MP(lambda) dlambda` by quadrature.
///
/// The substitution `lambda = center + radius cos(theta)` removes the square
/// root at both edges of the support.
pub fn mp_inverse_moment_quadrature(c: f64) -> Result<f64> {
    check_ratio(c)?;
    let lo = (1.0 - c.sqrt()).powi(2);
    let hi = (1.0 + c.sqrt()).powi(2);
    let center = 0.5 * (lo + hi);
    let radius = 0.5 * (hi - lo);
    let integrand = |theta: f64| {
        let lambda = center + radius * theta.cos();
        let s = theta.sin();
        radius * radius * s * s / (2.0 * PI * c * lambda * lambda)
    };
    Ok(integrate(integrand, 0.0, PI, 1e-14, 1e-13))
}
