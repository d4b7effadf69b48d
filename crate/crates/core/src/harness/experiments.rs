//! Experiment drivers and analytic tables, each producing CSV rows.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::eval::{cosine_ground_truth, mean_std};
use crate::analytic::{
    cap_stats, error_rates, expected_cost_ratio, mp_inverse_moment_quadrature, mp_pinv_norm_limit,
    sum_cross_variance_full, sum_h1_variance,
};
use crate::assignment::{imbalance_factor, random_assignment, spherical_kmeans, KMeansConfig, Partition};
use crate::construction::{representative, ConstructionConfig};
use crate::error::{domain, Error, Result};
use crate::model::{dot, Construction, Dataset, UnitVector};
use crate::sampling::{planted_query, sample_sphere, Seed};
use crate::search::{build_index, unit_scores};

/// A CSV row with a fixed header.
pub trait CsvRecord {
    const HEADER: &'static str;
    fn csv_fields(&self) -> String;
}

/// Header line plus one line per row.
pub fn to_csv<T: CsvRecord>(rows: &[T]) -> String {
    let mut out = String::from(T::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_fields());
        out.push('\n');
    }
    out
}

/// Shortest round-tripping form, switching to exponent notation for very
/// small or large magnitudes.
#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if self.0.is_finite() && a != 0.0 && !(1e-5..1e16).contains(&a) {
            write!(f, "{:e}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

// ---------------------------------------------------------------- ROC

#[derive(Clone, Debug, PartialEq)]
pub struct RocConfig {
    pub d: usize,
    pub n: usize,
    pub alpha: f64,
    pub constructions: Vec<Construction>,
    pub trials: usize,
    pub taus: Vec<f64>,
    pub seed: Seed,
}

impl RocConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n >= self.d {
            return Err(domain(format!("ROC needs 1 <= n < d, got n = {}, d = {}", self.n, self.d)));
        }
        if self.trials == 0 {
            return Err(domain("ROC needs at least one trial"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(domain(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if self.constructions.is_empty() {
            return Err(domain("no construction selected"));
        }
        Ok(())
    }
}

/// Raw unit scores of one construction under both hypotheses.
#[derive(Clone, Debug, PartialEq)]
pub struct RocSamples {
    pub construction: Construction,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
}

impl RocSamples {
    pub fn pfp(&self, tau: f64) -> f64 {
        self.h0.iter().filter(|&&s| s > tau).count() as f64 / self.h0.len() as f64
    }

    pub fn pfn(&self, tau: f64) -> f64 {
        self.h1.iter().filter(|&&s| s <= tau).count() as f64 / self.h1.len() as f64
    }

    /// True positive rate at the empirical threshold whose false positive
    /// rate is at most `fpr`.
    pub fn tpr_at_fpr(&self, fpr: f64) -> f64 {
        let mut h0 = self.h0.clone();
        h0.sort_by(|a, b| b.total_cmp(a));
        let allowed = (fpr * h0.len() as f64).floor() as usize;
        let tau = if allowed >= h0.len() { f64::NEG_INFINITY } else { h0[allowed] };
        1.0 - self.pfn(tau)
    }
}

/// Monte Carlo unit scores. Each trial draws `n` uniform members, a query
/// planted on the first member (H1) and an unrelated uniform query (H0); all
/// constructions score the same draws.
pub fn roc_scores(cfg: &RocConfig) -> Result<Vec<RocSamples>> {
    cfg.validate()?;
    let per_trial: Vec<Vec<(f64, f64)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = cfg.seed.child("roc", t as u64).rng();
            let members = (0..cfg.n)
                .map(|_| sample_sphere(cfg.d, &mut rng))
                .collect::<Result<Vec<UnitVector>>>()?;
            let y1 = planted_query(members[0].as_slice(), cfg.alpha, &mut rng)?;
            let y0 = sample_sphere(cfg.d, &mut rng)?;
            cfg.constructions
                .iter()
                .map(|&c| {
                    let (m, _) = representative(&members, &ConstructionConfig::new(c))?;
                    Ok((dot(y0.as_slice(), &m), dot(y1.as_slice(), &m)))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(cfg
        .constructions
        .iter()
        .enumerate()
        .map(|(k, &c)| RocSamples {
            construction: c,
            h0: per_trial.iter().map(|t| t[k].0).collect(),
            h1: per_trial.iter().map(|t| t[k].1).collect(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocRow {
    pub construction: Construction,
    pub tau: f64,
    pub pfp_emp: f64,
    pub tpr_emp: f64,
    pub pfp_theory: f64,
    pub tpr_theory: f64,
}

impl CsvRecord for RocRow {
    const HEADER: &'static str = "construction,tau,pfp_emp,tpr_emp,pfp_theory,tpr_theory";
    fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.construction,
            self.tau,
            Num(self.pfp_emp),
            Num(self.tpr_emp),
            Num(self.pfp_theory),
            Num(self.tpr_theory)
        )
    }
}

/// Empirical and theoretical ROC points over the configured thresholds.
pub fn run_roc(cfg: &RocConfig) -> Result<Vec<RocRow>> {
    let samples = roc_scores(cfg)?;
    let mut rows = Vec::new();
    for s in &samples {
        for &tau in &cfg.taus {
            let th = error_rates(s.construction, tau, cfg.alpha, cfg.n, cfg.d)?;
            rows.push(RocRow {
                construction: s.construction,
                tau,
                pfp_emp: s.pfp(tau),
                tpr_emp: 1.0 - s.pfn(tau),
                pfp_theory: th.pfp,
                tpr_theory: 1.0 - th.pfn,
            });
        }
    }
    Ok(rows)
}

/// Analytic ROC only.
pub fn theory_roc(d: usize, n: usize, alpha: f64, constructions: &[Construction], taus: &[f64]) -> Result<Vec<TheoryRocRow>> {
    let mut rows = Vec::new();
    for &c in constructions {
        for &tau in taus {
            let r = error_rates(c, tau, alpha, n, d)?;
            rows.push(TheoryRocRow {
                construction: c,
                tau,
                pfp: r.pfp,
                tpr: 1.0 - r.pfn,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryRocRow {
    pub construction: Construction,
    pub tau: f64,
    pub pfp: f64,
    pub tpr: f64,
}

impl CsvRecord for TheoryRocRow {
    const HEADER: &'static str = "construction,tau,pfp,tpr";
    fn csv_fields(&self) -> String {
        format!("{},{},{},{}", self.construction, self.tau, Num(self.pfp), Num(self.tpr))
    }
}

// ---------------------------------------------------------------- cost

#[derive(Clone, Debug, PartialEq)]
pub struct CostConfig {
    pub d: usize,
    pub eps: f64,
    pub alpha0s: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub constructions: Vec<Construction>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub construction: Construction,
    pub alpha0: f64,
    pub n: usize,
    pub tau: f64,
    pub pfp: f64,
    pub cost_ratio: f64,
    /// Realized mean ratio, when measured at this point.
    pub cost_ratio_mc: Option<f64>,
}

impl CsvRecord for CostRow {
    const HEADER: &'static str = "construction,alpha0,n,tau,pfp,cost_ratio,cost_ratio_mc";
    fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.construction,
            self.alpha0,
            self.n,
            self.tau,
            Num(self.pfp),
            Num(self.cost_ratio),
            self.cost_ratio_mc.map(|v| Num(v).to_string()).unwrap_or_default()
        )
    }
}

/// `1/n + pfp` over the unit-size range for every `(construction, alpha0)`.
pub fn theory_cost_curve(cfg: &CostConfig) -> Result<Vec<CostRow>> {
    if cfg.n_min == 0 || cfg.n_min > cfg.n_max || cfg.n_max >= cfg.d {
        return Err(domain(format!(
            "unit size range {}..={} must satisfy 1 <= n_min <= n_max < d = {}",
            cfg.n_min, cfg.n_max, cfg.d
        )));
    }
    let mut rows = Vec::new();
    for &c in &cfg.constructions {
        for &a0 in &cfg.alpha0s {
            for n in cfg.n_min..=cfg.n_max {
                let r = expected_cost_ratio(c, n, cfg.d, a0, cfg.eps)?;
                rows.push(CostRow {
                    construction: c,
                    alpha0: a0,
                    n,
                    tau: r.tau,
                    pfp: r.pfp,
                    cost_ratio: r.cost_ratio,
                    cost_ratio_mc: None,
                });
            }
        }
    }
    Ok(rows)
}

/// Settings of the realized-cost measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMcConfig {
    pub d: usize,
    pub total: usize,
    pub queries: usize,
    pub construction: Construction,
    pub n: usize,
    pub tau: f64,
    pub seed: Seed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostMeasurement {
    pub mean_ratio: f64,
    pub std_ratio: f64,
}

/// Realized `C / N` of unrelated queries on `N` uniform vectors grouped
/// into units of `n`.
///
/// Units are generated one at a time and only their representatives are
/// kept, so `N x d` never has to fit in memory.
pub fn measure_cost(cfg: &CostMcConfig) -> Result<CostMeasurement> {
    if cfg.n == 0 || cfg.n > cfg.total || cfg.queries == 0 {
        return Err(domain("cost measurement needs 1 <= n <= N and at least one query"));
    }
    let m = cfg.total.div_ceil(cfg.n);
    let ccfg = ConstructionConfig::new(cfg.construction);
    let units: Vec<(Vec<f64>, usize)> = (0..m)
        .into_par_iter()
        .map(|u| {
            let size = cfg.n.min(cfg.total - u * cfg.n);
            let mut rng = cfg.seed.child("unit", u as u64).rng();
            let members = (0..size)
                .map(|_| sample_sphere(cfg.d, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            Ok((representative(&members, &ccfg)?.0, size))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = (0..cfg.queries)
        .into_par_iter()
        .map(|q| {
            let y = sample_sphere(cfg.d, &mut cfg.seed.child("query", q as u64).rng())?;
            let opened: usize = units
                .iter()
                .filter(|(rep, _)| dot(y.as_slice(), rep) > cfg.tau)
                .map(|(_, s)| s)
                .sum();
            Ok((m + opened) as f64 / cfg.total as f64)
        })
        .collect::<Result<_>>()?;
    let (mean_ratio, std_ratio) = mean_std(&ratios);
    Ok(CostMeasurement { mean_ratio, std_ratio })
}

/// Monte Carlo part of [`run_cost_curve`].
#[derive(Clone, Debug, PartialEq)]
pub struct CostValidation {
    pub total: usize,
    pub queries: usize,
    pub seed: Seed,
}

/// Theoretical cost curves; with `validation`, the realized ratio is
/// measured at each curve's minimizer.
pub fn run_cost_curve(cfg: &CostConfig, validation: Option<&CostValidation>) -> Result<Vec<CostRow>> {
    let mut rows = theory_cost_curve(cfg)?;
    let Some(v) = validation else {
        return Ok(rows);
    };
    for &c in &cfg.constructions {
        for &a0 in &cfg.alpha0s {
            let best = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r.construction == c && r.alpha0 == a0)
                .min_by(|a, b| a.1.cost_ratio.total_cmp(&b.1.cost_ratio))
                .map(|(i, _)| i)
                .ok_or_else(|| domain("empty cost curve"))?;
            let mc = measure_cost(&CostMcConfig {
                d: cfg.d,
                total: v.total,
                queries: v.queries,
                construction: c,
                n: rows[best].n,
                tau: rows[best].tau,
                seed: v.seed.derive(&format!("{c}-{a0}")),
            })?;
            rows[best].cost_ratio_mc = Some(mc.mean_ratio);
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- cap statistics and MP

#[derive(Clone, Debug, PartialEq)]
pub struct CapStatsRow {
    pub construction: Construction,
    pub eta: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub h0_mean: f64,
    pub h0_var: f64,
    pub h1_mean: f64,
    pub h1_var: f64,
    /// Sum construction only: H1 variance with the complete cross term.
    pub h1_var_full_cross: Option<f64>,
    pub kl: f64,
    pub bound: bool,
}

impl CsvRecord for CapStatsRow {
    const HEADER: &'static str =
        "construction,eta,mu1,mu2,h0_mean,h0_var,h1_mean,h1_var,h1_var_full_cross,kl,bound";
    fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.construction,
            self.eta,
            Num(self.mu1),
            Num(self.mu2),
            Num(self.h0_mean),
            Num(self.h0_var),
            Num(self.h1_mean),
            Num(self.h1_var),
            self.h1_var_full_cross.map(|v| Num(v).to_string()).unwrap_or_default(),
            Num(self.kl),
            self.bound
        )
    }
}

pub fn theory_cap_stats(
    d: usize,
    n: usize,
    alpha: f64,
    etas: &[f64],
    constructions: &[Construction],
) -> Result<Vec<CapStatsRow>> {
    let mut rows = Vec::new();
    for &c in constructions {
        for &eta in etas {
            let s = cap_stats(c, eta, d, n, alpha)?;
            let full = match c {
                Construction::Sum => {
                    let parts = sum_h1_variance(eta, d, n, alpha)?;
                    Some(parts.total() - parts.cross + sum_cross_variance_full(eta, d, n, alpha)?)
                }
                Construction::Pinv => None,
            };
            rows.push(CapStatsRow {
                construction: c,
                eta,
                mu1: s.mu1,
                mu2: s.mu2,
                h0_mean: s.h0_mean,
                h0_var: s.h0_var,
                h1_mean: s.h1_mean,
                h1_var: s.h1_var,
                h1_var_full_cross: full,
                kl: s.kl,
                bound: s.bound,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpRow {
    pub c: f64,
    pub limit: f64,
    pub quadrature: f64,
}

impl CsvRecord for MpRow {
    const HEADER: &'static str = "c,limit,quadrature";
    fn csv_fields(&self) -> String {
        format!("{},{},{}", self.c, self.limit, self.quadrature)
    }
}

pub fn theory_mp(cs: &[f64]) -> Result<Vec<MpRow>> {
    cs.iter()
        .map(|&c| {
            Ok(MpRow {
                c,
                limit: mp_pinv_norm_limit(c)?,
                quadrature: mp_inverse_moment_quadrature(c)?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- assignment report

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssignmentMethod {
    Random,
    KMeans { kind: Construction, normalize: bool },
}

impl AssignmentMethod {
    pub const ALL: [AssignmentMethod; 5] = [
        AssignmentMethod::Random,
        AssignmentMethod::KMeans { kind: Construction::Sum, normalize: false },
        AssignmentMethod::KMeans { kind: Construction::Sum, normalize: true },
        AssignmentMethod::KMeans { kind: Construction::Pinv, normalize: false },
        AssignmentMethod::KMeans { kind: Construction::Pinv, normalize: true },
    ];
}

impl fmt::Display for AssignmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssignmentMethod::Random => f.write_str("random"),
            AssignmentMethod::KMeans { kind, normalize } => {
                write!(f, "{kind}-km{}", if *normalize { "-norm" } else { "" })
            }
        }
    }
}

impl FromStr for AssignmentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AssignmentMethod::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::Mode(format!("unknown assignment method '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentReportConfig {
    pub methods: Vec<AssignmentMethod>,
    pub num_units: usize,
    pub seeds: Vec<u64>,
    pub alpha0: f64,
    /// Units visited per query for the complexity statistics.
    pub top_units: usize,
    /// Ranks reported in the per-rank match probability.
    pub max_rank: usize,
    /// Memory vectors used to rank units of the random assignment.
    pub random_construction: Construction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentRow {
    pub method: AssignmentMethod,
    pub seed: u64,
    pub imbalance: f64,
    /// `P(unit at rank r contains a match)` for `r = 1..=max_rank`, over
    /// queries with at least one match.
    pub p_match_by_rank: Vec<f64>,
    /// Mean number of matches in units holding at least one match.
    pub matches_per_positive_unit: f64,
    pub complexity_mean: f64,
    pub complexity_std: f64,
}

impl CsvRecord for AssignmentRow {
    const HEADER: &'static str =
        "method,seed,imbalance,p_match_rank1,matches_per_positive_unit,complexity_mean,complexity_std";
    fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.method,
            self.seed,
            Num(self.imbalance),
            self.p_match_by_rank.first().copied().unwrap_or(f64::NAN),
            Num(self.matches_per_positive_unit),
            Num(self.complexity_mean),
            Num(self.complexity_std)
        )
    }
}

/// Long-format per-rank curve: `method,seed,rank,p_match`.
pub fn assignment_rank_csv(rows: &[AssignmentRow]) -> String {
    let mut out = String::from("method,seed,rank,p_match\n");
    for r in rows {
        for (k, p) in r.p_match_by_rank.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", r.method, r.seed, k + 1, p));
        }
    }
    out
}

/// Partition produced by `method` under `seed`.
pub fn assign(dataset: &Dataset, method: AssignmentMethod, num_units: usize, seed: Seed) -> Result<Partition> {
    match method {
        AssignmentMethod::Random => {
            let unit = dataset.len().div_ceil(num_units);
            random_assignment(dataset.len(), unit, &mut seed.derive("random").rng())
        }
        AssignmentMethod::KMeans { kind, normalize } => {
            Ok(spherical_kmeans(dataset, &KMeansConfig::new(num_units, kind, normalize, seed))?.partition)
        }
    }
}

/// Imbalance, match concentration and top-k complexity per method and seed.
pub fn run_assignment_report(
    dataset: &Dataset,
    queries: &Dataset,
    cfg: &AssignmentReportConfig,
) -> Result<Vec<AssignmentRow>> {
    if cfg.num_units == 0 || cfg.num_units > dataset.len() {
        return Err(domain(format!("need 1 <= M <= N, got M = {}", cfg.num_units)));
    }
    let truth = cosine_ground_truth(dataset, queries, cfg.alpha0)?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        for &method in &cfg.methods {
            let partition = assign(dataset, method, cfg.num_units, Seed(seed))?;
            let kind = match method {
                AssignmentMethod::Random => cfg.random_construction,
                AssignmentMethod::KMeans { kind, .. } => kind,
            };
            let index = build_index(dataset, &partition, &ConstructionConfig::new(kind))?;
            let m = index.num_units();
            let sizes = index.sizes();
            let unit_of = partition.unit_of();
            let max_rank = cfg.max_rank.min(m);

            let per_query: Vec<(Option<Vec<bool>>, usize, usize, f64)> = queries
                .iter()
                .zip(&truth)
                .map(|(q, gt)| {
                    let scores = unit_scores(&index, q)?;
                    let mut order: Vec<usize> = (0..m).collect();
                    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
                    let mut count = vec![0usize; m];
                    for &id in gt {
                        count[unit_of[id]] += 1;
                    }
                    let ranks = (!gt.is_empty())
                        .then(|| order.iter().take(max_rank).map(|&u| count[u] > 0).collect());
                    let positive = count.iter().filter(|&&c| c > 0).count();
                    let opened: usize = order.iter().take(cfg.top_units).map(|&u| sizes[u]).sum();
                    Ok((ranks, gt.len(), positive, (m + opened) as f64 / dataset.len() as f64))
                })
                .collect::<Result<_>>()?;

            let with_match: Vec<&Vec<bool>> = per_query.iter().filter_map(|p| p.0.as_ref()).collect();
            let p_match_by_rank = (0..max_rank)
                .map(|r| {
                    if with_match.is_empty() {
                        f64::NAN
                    } else {
                        with_match.iter().filter(|v| v[r]).count() as f64 / with_match.len() as f64
                    }
                })
                .collect();
            let matched: usize = per_query.iter().map(|p| p.1).sum();
            let positive: usize = per_query.iter().map(|p| p.2).sum();
            let ratios: Vec<f64> = per_query.iter().map(|p| p.3).collect();
            let (complexity_mean, complexity_std) = mean_std(&ratios);
            rows.push(AssignmentRow {
                method,
                seed,
                imbalance: imbalance_factor(&partition),
                p_match_by_rank,
                matches_per_positive_unit: if positive == 0 { f64::NAN } else { matched as f64 / positive as f64 },
                complexity_mean,
                complexity_std,
            });
        }
    }
    Ok(rows)
}
