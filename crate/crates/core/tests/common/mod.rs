//! Independent oracles shared by the integration tests. Nothing here calls
//! into the numerical parts of the library.

#![allow(dead_code)]

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `E[t^kappa]` for the axis correlation `t` of a uniform point on the cap
/// `{t >= eta}` of the sphere in `R^d`, by Simpson quadrature in the polar
/// angle (density of the angle proportional to `sin^(d-2)`).
pub fn cap_moment_oracle(kappa: i32, eta: f64, d: usize) -> f64 {
    let top = eta.clamp(-1.0, 1.0).acos();
    let w = |th: f64| th.sin().powi(d as i32 - 2);
    let num = simpson(|th| th.cos().powi(kappa) * w(th), 0.0, top, 40_000);
    let den = simpson(w, 0.0, top, 40_000);
    num / den
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    worst
}

/// Mean, unbiased variance, and standard errors of both.
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    Moments {
        mean,
        var,
        se_mean: (var / n).sqrt(),
        se_var: ((m4 - m2 * m2) / n).sqrt(),
    }
}

/// Ids with cosine above `alpha0`, by a plain double loop.
pub fn brute_matches(data: &[Vec<f64>], queries: &[Vec<f64>], alpha0: f64) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for q in queries {
        let mut ids = Vec::new();
        for (i, x) in data.iter().enumerate() {
            if dot(q, x) > alpha0 {
                ids.push(i);
            }
        }
        out.push(ids);
    }
    out
}

/// Standard normal cdf from the Abramowitz-Stegun 7.1.26 erf approximation
/// (absolute error below 1.5e-7), good enough to sanity check tails.
pub fn normal_cdf_rough(x: f64) -> f64 {
    let z = x.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.327_591_1 * z);
    let poly = t * (0.254_829_592 + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    let erf = 1.0 - poly * (-z * z).exp();
    if x >= 0.0 {
        0.5 * (1.0 + erf)
    } else {
        0.5 * (1.0 - erf)
    }
}
