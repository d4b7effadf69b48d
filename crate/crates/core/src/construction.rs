//! Memory-vector representatives: plain sum and minimal-norm pseudo-inverse.

use crate::error::{domain, Error, Result};
use crate::model::{dot, Construction};

/// A pivot below `PIVOT_RTOL * max(diag)` counts as a breakdown.
const PIVOT_RTOL: f64 = 1e-12;
/// Default fallback ridge as a fraction of the mean Gram diagonal.
pub const FALLBACK_RIDGE_SCALE: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstructionConfig {
    pub kind: Construction,
    /// Tikhonov term added to the Gram diagonal on the first attempt.
    pub ridge: f64,
    /// Ridge for the retry after a singular solve. `None` uses
    /// `FALLBACK_RIDGE_SCALE * mean(diag(X^T X))`.
    pub fallback_ridge: Option<f64>,
}

impl ConstructionConfig {
    pub fn new(kind: Construction) -> Self {
        Self {
            kind,
            ridge: 0.0,
            fallback_ridge: None,
        }
    }

    pub fn with_ridge(mut self, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(domain(format!("ridge must be a non-negative number, got {ridge}")));
        }
        self.ridge = ridge;
        Ok(self)
    }

    pub fn with_fallback_ridge(mut self, ridge: f64) -> Result<Self> {
        if !(ridge > 0.0 && ridge.is_finite()) {
            return Err(domain(format!("fallback ridge must be positive, got {ridge}")));
        }
        self.fallback_ridge = Some(ridge);
        Ok(self)
    }
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        Self::new(Construction::Sum)
    }
}

fn common_dim<R: AsRef<[f64]>>(members: &[R]) -> Result<usize> {
    let first = members.first().ok_or(Error::EmptyUnit)?;
    let d = first.as_ref().len();
    for m in members {
        if m.as_ref().len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: m.as_ref().len(),
            });
        }
    }
    Ok(d)
}

/// `m = sum_i x_i`.
pub fn sum_vector<R: AsRef<[f64]>>(members: &[R]) -> Result<Vec<f64>> {
    let d = common_dim(members)?;
    let mut m = vec![0.0; d];
    for x in members {
        for (mi, xi) in m.iter_mut().zip(x.as_ref()) {
            *mi += xi;
        }
    }
    Ok(m)
}

/// Minimal-norm solution of `X^T m = 1`, i.e. `m = X (X^T X)^{-1} 1`.
pub fn pinv_vector<R: AsRef<[f64]>>(members: &[R], cfg: &ConstructionConfig) -> Result<Vec<f64>> {
    pinv_vector_with_status(members, cfg).map(|(m, _)| m)
}

/// As [`pinv_vector`], also reporting whether the fallback ridge was needed.
pub fn pinv_vector_with_status<R: AsRef<[f64]>>(
    members: &[R],
    cfg: &ConstructionConfig,
) -> Result<(Vec<f64>, bool)> {
    let d = common_dim(members)?;
    let n = members.len();
    let gram = gram_matrix(members);
    let ones = vec![1.0; n];
    let fallback = || {
        cfg.fallback_ridge.unwrap_or_else(|| {
            let mean_diag = (0..n).map(|i| gram[i * n + i]).sum::<f64>() / n as f64;
            FALLBACK_RIDGE_SCALE * mean_diag.max(f64::MIN_POSITIVE)
        })
    };
    let (z, used_fallback) = if n > d {
        (solve_spd(&gram, &ones, cfg.ridge + fallback())?, true)
    } else {
        match solve_spd(&gram, &ones, cfg.ridge) {
            Ok(z) => (z, false),
            Err(Error::SingularGram { .. }) => (solve_spd(&gram, &ones, cfg.ridge + fallback())?, true),
            Err(e) => return Err(e),
        }
    };
    let mut m = vec![0.0; d];
    for (x, zi) in members.iter().zip(&z) {
        for (mi, xi) in m.iter_mut().zip(x.as_ref()) {
            *mi += zi * xi;
        }
    }
    Ok((m, used_fallback))
}

/// Representative for `cfg.kind`, plus the fallback flag (always false for sum).
pub fn representative<R: AsRef<[f64]>>(
    members: &[R],
    cfg: &ConstructionConfig,
) -> Result<(Vec<f64>, bool)> {
    match cfg.kind {
        Construction::Sum => sum_vector(members).map(|m| (m, false)),
        Construction::Pinv => pinv_vector_with_status(members, cfg),
    }
}

/// Row-major `X^T X`.
fn gram_matrix<R: AsRef<[f64]>>(members: &[R]) -> Vec<f64> {
    let n = members.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = dot(members[i].as_ref(), members[j].as_ref());
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

/// Solves `(A + ridge I) z = b` for symmetric positive semi-definite `A`
/// (row-major, `n x n` with `n = b.len()`) by Cholesky factorization.
pub fn solve_spd(a: &[f64], b: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let n = b.len();
    if n == 0 {
        return Err(domain("empty system"));
    }
    if a.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: a.len(),
        });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(domain(format!("ridge must be a non-negative number, got {ridge}")));
    }
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > SYMMETRY_TOL {
                return Err(domain(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    let max_diag = (0..n).map(|i| a[i * n + i] + ridge).fold(0.0, f64::max);
    let tol = PIVOT_RTOL * max_diag;

    // Lower factor L with A + ridge I = L L^T.
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut pivot = a[j * n + j] + ridge;
        for k in 0..j {
            pivot -= l[j * n + k] * l[j * n + k];
        }
        if pivot.is_nan() || pivot <= tol {
            return Err(Error::SingularGram { row: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }

    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    Ok(z)
}
