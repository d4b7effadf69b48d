//! Moments of the axis correlation of a uniform spherical-cap sample and the
//! resulting score statistics of memory units built from cap samples.

use std::f64::consts::LN_2;

use super::special::{ln_beta, ln_ibeta};
use crate::error::{domain, Error, Result};
use crate::model::Construction;

/// Above this `eta` the moments are replaced by their `eta -> 1` limit.
pub const ETA_LIMIT: f64 = 1.0 - 1e-9;

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(-1.0..1.0).contains(&eta) {
        return Err(Error::DegenerateCap(eta));
    }
    Ok(())
}

/// `ln(1 - sign(eta) I_{eta^2}(a, b))`, i.e. the log of twice the cap mass
/// when `a = 1/2`.
fn ln_signed_complement(eta: f64, a: f64, b: f64) -> f64 {
    let e2 = eta * eta;
    let one_minus = (1.0 - eta) * (1.0 + eta);
    if eta > 0.0 {
        // 1 - I_{eta^2}(a, b) = I_{1 - eta^2}(b, a)
        ln_ibeta(one_minus, e2, b, a)
    } else if eta < 0.0 {
        ln_ibeta(e2, one_minus, a, b).exp().ln_1p()
    } else {
        0.0
    }
}

/// `mu_kappa(eta, d) = E[(Y^T u)^kappa]` for `Y` uniform on the cap `Y^T u > eta`.
pub fn cap_moment(kappa: u32, eta: f64, d: usize) -> Result<f64> {
    check_eta(eta)?;
    if d < 2 {
        return Err(domain(format!("cap moments need d >= 2, got {d}")));
    }
    if kappa != 1 && kappa != 2 {
        return Err(domain(format!("cap moment order must be 1 or 2, got {kappa}")));
    }
    if eta > ETA_LIMIT {
        return Ok(1.0);
    }
    let df = d as f64;
    if eta == -1.0 {
        return Ok(if kappa == 1 { 0.0 } else { 1.0 / df });
    }
    let b = 0.5 * (df - 1.0);
    let ln_mass = ln_signed_complement(eta, 0.5, b);
    if kappa == 1 {
        let one_minus = (1.0 - eta) * (1.0 + eta);
        let ln_num = LN_2 + b * one_minus.ln();
        let ln_den = (df - 1.0).ln() + ln_beta(0.5, b) + ln_mass;
        Ok((ln_num - ln_den).exp())
    } else {
        let ln_num = ln_signed_complement(eta, 1.5, b);
        Ok((ln_num - ln_mass).exp() / df)
    }
}

/// Gaussian Kullback-Leibler divergence `KL(N(mean0, var0) || N(mean1, var1))`.
pub fn gaussian_kl(mean0: f64, var0: f64, mean1: f64, var1: f64) -> Result<f64> {
    if !(var0 > 0.0 && var1 > 0.0 && var0.is_finite() && var1.is_finite()) {
        return Err(domain(format!("KL needs positive variances, got {var0} and {var1}")));
    }
    let dm = mean0 - mean1;
    let kl = 0.5 * (var1 / var0).ln() + (var0 + dm * dm) / (2.0 * var1) - 0.5;
    Ok(kl.max(0.0))
}

/// Closed-form statistics of the unit score for members drawn on a cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapStats {
    pub construction: Construction,
    pub eta: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub h0_mean: f64,
    pub h0_var: f64,
    pub h1_mean: f64,
    pub h1_var: f64,
    /// `KL(H0 || H1)`; infinite when the H1 variance vanishes.
    pub kl: f64,
    /// Variances are lower bounds rather than expectations.
    pub bound: bool,
}

/// The four uncorrelated parts of the H1 score variance for the sum construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumH1Variance {
    /// `alpha^2 (n-1) (mu2^2 - mu1^4)`, the cross-correlation term as published.
    pub cross: f64,
    /// `alpha^2 (n-1)/(d-1) (1 - mu2)^2`
    pub orthogonal: f64,
    /// `(1-alpha^2)(n-1)/(d-1) (1-mu2) mu2`
    pub noise_axis: f64,
    /// `(1-alpha^2)(n-1)/(d-1) (1-mu2) (1 + (n-2) mu1^2)`
    pub noise_perp: f64,
}

impl SumH1Variance {
    pub fn total(&self) -> f64 {
        self.cross + self.orthogonal + self.noise_axis + self.noise_perp
    }
}

fn check_stats_args(eta: f64, d: usize, n: usize, alpha: f64) -> Result<()> {
    check_eta(eta)?;
    if n < 2 || n >= d {
        return Err(domain(format!("cap statistics need 2 <= n < d, got n = {n}, d = {d}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(())
}

fn kl_or_inf(h0_mean: f64, h0_var: f64, h1_mean: f64, h1_var: f64) -> Result<f64> {
    if h1_var == 0.0 || h0_var == 0.0 {
        return Ok(f64::INFINITY);
    }
    gaussian_kl(h0_mean, h0_var, h1_mean, h1_var)
}

/// H1 variance components of the sum construction.
pub fn sum_h1_variance(eta: f64, d: usize, n: usize, alpha: f64) -> Result<SumH1Variance> {
    check_stats_args(eta, d, n, alpha)?;
    let mu1 = cap_moment(1, eta, d)?;
    let mu2 = cap_moment(2, eta, d)?;
    let (nf, df) = (n as f64, d as f64);
    let a2 = alpha * alpha;
    let b2 = 1.0 - a2;
    let r = (nf - 1.0) / (df - 1.0);
    Ok(SumH1Variance {
        cross: a2 * (nf - 1.0) * (mu2 * mu2 - mu1.powi(4)),
        orthogonal: a2 * r * (1.0 - mu2).powi(2),
        noise_axis: b2 * r * (1.0 - mu2) * mu2,
        noise_perp: b2 * r * (1.0 - mu2) * (1.0 + (nf - 2.0) * mu1 * mu1),
    })
}

/// Variance of `alpha * S_1 * sum_{i>=2} S_i` from the law of total variance,
/// keeping the covariance induced by the shared `S_1`.
///
/// Reported next to [`SumH1Variance::cross`] to show how far the published
/// cross term is from the full expression.
pub fn sum_cross_variance_full(eta: f64, d: usize, n: usize, alpha: f64) -> Result<f64> {
    check_stats_args(eta, d, n, alpha)?;
    let mu1 = cap_moment(1, eta, d)?;
    let mu2 = cap_moment(2, eta, d)?;
    let k = n as f64 - 1.0;
    let v = (mu2 - mu1 * mu1).max(0.0);
    Ok(alpha * alpha * (k * mu2 * v + k * k * mu1 * mu1 * v))
}

/// Score statistics of a sum memory vector over `n` cap samples.
pub fn sum_cap_stats(eta: f64, d: usize, n: usize, alpha: f64) -> Result<CapStats> {
    let var = sum_h1_variance(eta, d, n, alpha)?;
    let mu1 = cap_moment(1, eta, d)?;
    let mu2 = cap_moment(2, eta, d)?;
    let (nf, df) = (n as f64, d as f64);
    let h0_var = (nf + nf * (nf - 1.0) * mu1 * mu1) / df;
    let h1_mean = alpha * (1.0 + (nf - 1.0) * mu1 * mu1);
    let h1_var = var.total();
    Ok(CapStats {
        construction: Construction::Sum,
        eta,
        mu1,
        mu2,
        h0_mean: 0.0,
        h0_var,
        h1_mean,
        h1_var,
        kl: kl_or_inf(0.0, h0_var, h1_mean, h1_var)?,
        bound: false,
    })
}

/// Score statistics of a pinv memory vector over `n` cap samples.
///
/// Both variances are the Jensen lower bounds obtained by inverting the
/// expected Gram matrix `(1 - mu1^2) I + mu1^2 11^T`.
pub fn pinv_cap_stats(eta: f64, d: usize, n: usize, alpha: f64) -> Result<CapStats> {
    check_stats_args(eta, d, n, alpha)?;
    let mu1 = cap_moment(1, eta, d)?;
    let mu2 = cap_moment(2, eta, d)?;
    let (nf, df) = (n as f64, d as f64);
    let p = mu1 * mu1;
    let denom = 1.0 + (nf - 1.0) * p;
    let h0_var = nf / (df * denom);
    let h1_var = (1.0 - alpha * alpha) * (nf - 1.0) * (1.0 - p) / ((df - 1.0) * denom);
    Ok(CapStats {
        construction: Construction::Pinv,
        eta,
        mu1,
        mu2,
        h0_mean: 0.0,
        h0_var,
        h1_mean: alpha,
        h1_var,
        kl: kl_or_inf(0.0, h0_var, alpha, h1_var)?,
        bound: true,
    })
}

pub fn cap_stats(
    construction: Construction,
    eta: f64,
    d: usize,
    n: usize,
    alpha: f64,
) -> Result<CapStats> {
    match construction {
        Construction::Sum => sum_cap_stats(eta, d, n, alpha),
        Construction::Pinv => pinv_cap_stats(eta, d, n, alpha),
    }
}
