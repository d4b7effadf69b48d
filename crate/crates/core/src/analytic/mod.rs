//! Closed-form theory of memory-vector tests.
//!
//! * [`special`]: incomplete beta, log-beta and the standard normal.
//! * [`score`]: exact and Gaussian laws of `m^T Y` for uniform `Y`.
//! * [`rates`]: per-construction error rates, thresholds and query cost.
//! * [`cap`]: spherical-cap moments and cap-conditioned score statistics.
//! * [`mp`]: Marcenko-Pastur norm inflation of the pinv construction.

pub mod cap;
pub mod mp;
pub mod quad;
pub mod rates;
pub mod score;
pub mod special;

pub use cap::{
    cap_moment, cap_stats, gaussian_kl, pinv_cap_stats, sum_cap_stats, sum_cross_variance_full,
    sum_h1_variance, CapStats, SumH1Variance,
};
pub use mp::{mp_density, mp_inverse_moment_quadrature, mp_pinv_norm_limit};
pub use rates::{
    cost_minimizer, error_rates, expected_cost_ratio, h0_law, h1_law, threshold_for, CostReport,
    ErrorRates, LawFamily, ScoreLaw,
};
pub use score::{score_cdf_exact, score_cdf_gauss, score_pdf_exact, GaussVariant};
pub use special::{
    ln_beta, ln_reg_inc_beta, reg_inc_beta, std_normal_cdf, std_normal_quantile, std_normal_sf,
};
