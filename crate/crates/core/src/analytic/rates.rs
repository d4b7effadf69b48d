//! Gaussian score laws per construction, error rates, thresholds and the
//! expected cost of a query under the null hypothesis.

use super::special::{std_normal_cdf, std_normal_quantile, std_normal_sf};
use crate::error::{domain, Result};
use crate::model::Construction;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawFamily {
    GaussianApprox,
    ExactSphere,
}

/// Mean and variance of the score under one hypothesis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreLaw {
    pub mean: f64,
    pub variance: f64,
    pub family: LawFamily,
}

impl ScoreLaw {
    fn gaussian(mean: f64, variance: f64) -> Self {
        Self {
            mean,
            variance,
            family: LawFamily::GaussianApprox,
        }
    }

    /// The score is deterministic (only at `alpha = 1` for pinv, or `n = 1`).
    pub fn is_degenerate(&self) -> bool {
        self.variance == 0.0
    }

    /// `P(score > tau)`.
    pub fn prob_above(&self, tau: f64) -> f64 {
        if self.is_degenerate() {
            return if self.mean > tau { 1.0 } else { 0.0 };
        }
        std_normal_sf((tau - self.mean) / self.variance.sqrt())
    }

    /// `P(score <= tau)`.
    pub fn prob_at_most(&self, tau: f64) -> f64 {
        if self.is_degenerate() {
            return if self.mean > tau { 0.0 } else { 1.0 };
        }
        std_normal_cdf((tau - self.mean) / self.variance.sqrt())
    }
}

fn check_unit_size(n: usize, d: usize) -> Result<()> {
    if n == 0 || n >= d {
        return Err(domain(format!("need 1 <= n < d, got n = {n}, d = {d}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Score law under H0 for a unit of `n` i.i.d. uniform vectors.
pub fn h0_law(construction: Construction, n: usize, d: usize) -> Result<ScoreLaw> {
    check_unit_size(n, d)?;
    let (n, d) = (n as f64, d as f64);
    Ok(match construction {
        Construction::Sum => ScoreLaw::gaussian(0.0, n / d),
        Construction::Pinv => ScoreLaw::gaussian(0.0, n / (d - n)),
    })
}

/// Score law under H1 at similarity `alpha`.
pub fn h1_law(construction: Construction, alpha: f64, n: usize, d: usize) -> Result<ScoreLaw> {
    check_unit_size(n, d)?;
    check_alpha(alpha)?;
    let (n, d) = (n as f64, d as f64);
    let beta2 = (1.0 - alpha * alpha).max(0.0);
    Ok(match construction {
        Construction::Sum => ScoreLaw::gaussian(alpha, (n - 1.0) / d),
        Construction::Pinv => ScoreLaw::gaussian(alpha, beta2 * n / (d - n)),
    })
}

/// False positive and false negative probabilities of the test `score > tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRates {
    pub pfp: f64,
    pub pfn: f64,
}

pub fn error_rates(
    construction: Construction,
    tau: f64,
    alpha: f64,
    n: usize,
    d: usize,
) -> Result<ErrorRates> {
    let h0 = h0_law(construction, n, d)?;
    let h1 = h1_law(construction, alpha, n, d)?;
    Ok(ErrorRates {
        pfp: h0.prob_above(tau),
        pfn: h1.prob_at_most(tau),
    })
}

/// Threshold giving a false negative rate of `eps` at similarity `alpha0`.
pub fn threshold_for(
    construction: Construction,
    alpha0: f64,
    n: usize,
    d: usize,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(domain(format!("eps = {eps} outside (0, 1/2)")));
    }
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(domain(format!("alpha0 = {alpha0} outside (0, 1]")));
    }
    let h1 = h1_law(construction, alpha0, n, d)?;
    if h1.is_degenerate() {
        // Any tau below alpha0 gives no false negative.
        return Ok(alpha0.next_down());
    }
    Ok(h1.mean + h1.variance.sqrt() * std_normal_quantile(eps)?)
}

/// Expected cost of an unrelated query, relative to exhaustive search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostReport {
    pub n: usize,
    pub tau: f64,
    pub pfp: f64,
    pub pfn_at_alpha0: f64,
    pub cost_ratio: f64,
}

pub fn expected_cost_ratio(
    construction: Construction,
    n: usize,
    d: usize,
    alpha0: f64,
    eps: f64,
) -> Result<CostReport> {
    let tau = threshold_for(construction, alpha0, n, d, eps)?;
    let rates = error_rates(construction, tau, alpha0, n, d)?;
    Ok(CostReport {
        n,
        tau,
        pfp: rates.pfp,
        pfn_at_alpha0: rates.pfn,
        cost_ratio: 1.0 / n as f64 + rates.pfp,
    })
}

/// Sweeps `n` over `range` and returns the report with the smallest ratio.
pub fn cost_minimizer(
    construction: Construction,
    range: std::ops::RangeInclusive<usize>,
    d: usize,
    alpha0: f64,
    eps: f64,
) -> Result<CostReport> {
    let mut best: Option<CostReport> = None;
    for n in range {
        let r = expected_cost_ratio(construction, n, d, alpha0, eps)?;
        if best.is_none_or(|b| r.cost_ratio < b.cost_ratio) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| domain("empty range of unit sizes"))
}
