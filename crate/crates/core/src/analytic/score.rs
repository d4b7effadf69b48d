//! Law of the score `S = m^T Y` for a fixed `m` and `Y` uniform on the sphere.

use std::f64::consts::LN_2;

use super::special::{ln_beta, ln_ibeta, reg_inc_beta, std_normal_cdf};
use crate::error::{domain, Result};

fn check(m_norm: f64, d: usize) -> Result<()> {
    if d < 2 {
        return Err(domain(format!("score law needs d >= 2, got {d}")));
    }
    if !(m_norm > 0.0 && m_norm.is_finite()) {
        return Err(domain(format!("score law needs ||m|| > 0, got {m_norm}")));
    }
    Ok(())
}

/// Exact cdf `F_S(s)`.
pub fn score_cdf_exact(s: f64, m_norm: f64, d: usize) -> Result<f64> {
    check(m_norm, d)?;
    if s <= -m_norm {
        return Ok(0.0);
    }
    if s >= m_norm {
        return Ok(1.0);
    }
    let t = s / m_norm;
    let i = reg_inc_beta(t * t, 0.5, 0.5 * (d as f64 - 1.0))?;
    Ok(if s >= 0.0 { 0.5 * (1.0 + i) } else { 0.5 * (1.0 - i) })
}

/// `ln(1 - F_S(s))` for `||m|| = 1`, accurate deep in the upper tail.
pub(crate) fn ln_upper_tail(s: f64, d: usize) -> f64 {
    if s >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if s <= -1.0 {
        return 0.0;
    }
    let b = 0.5 * (d as f64 - 1.0);
    let s2 = s * s;
    if s >= 0.0 {
        // 1 - F = (1 - I_{s^2}(1/2, b)) / 2 = I_{1 - s^2}(b, 1/2) / 2
        ln_ibeta((1.0 - s) * (1.0 + s), s2, b, 0.5) - LN_2
    } else {
        (ln_ibeta(s2, (1.0 - s) * (1.0 + s), 0.5, b).exp()).ln_1p() - LN_2
    }
}

/// Exact density `f_S(s)` on `[-||m||, ||m||]`.
pub fn score_pdf_exact(s: f64, m_norm: f64, d: usize) -> Result<f64> {
    check(m_norm, d)?;
    if s.abs() > m_norm {
        return Err(domain(format!("|s| = {} exceeds ||m|| = {m_norm}", s.abs())));
    }
    let t = s / m_norm;
    let one_minus = (1.0 - t) * (1.0 + t);
    let expo = 0.5 * (d as f64 - 3.0);
    let b = 0.5 * (d as f64 - 1.0);
    if one_minus == 0.0 {
        return Ok(match d {
            2 => f64::INFINITY,
            3 => (-(m_norm.ln()) - ln_beta(0.5, b)).exp(),
            _ => 0.0,
        });
    }
    Ok((expo * one_minus.ln() - m_norm.ln() - ln_beta(0.5, b)).exp())
}

/// Which Gaussian approximation of `F_S` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaussVariant {
    /// `Phi( sqrt((d-1)/||m||^2) * 2s / (1 + sqrt(1 - s^2/||m||^2)) )`
    Expansion,
    /// `Phi( s * sqrt(d / ||m||^2) )`, the small-`s` form.
    Simplified,
}

/// Gaussian approximation of the score cdf.
pub fn score_cdf_gauss(s: f64, m_norm: f64, d: usize, variant: GaussVariant) -> Result<f64> {
    check(m_norm, d)?;
    let d = d as f64;
    Ok(match variant {
        GaussVariant::Simplified => std_normal_cdf(s * (d / (m_norm * m_norm)).sqrt()),
        GaussVariant::Expansion => {
            if s <= -m_norm {
                return Ok(0.0);
            }
            if s >= m_norm {
                return Ok(1.0);
            }
            let t = s / m_norm;
            let arg = ((d - 1.0) / (m_norm * m_norm)).sqrt() * 2.0 * s
                / (1.0 + ((1.0 - t) * (1.0 + t)).sqrt());
            std_normal_cdf(arg)
        }
    })
}
