//! Ground truth by exhaustive cosine scan and retrieval metrics against it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{dot, Dataset};

/// Cut-offs reported as recall@R.
pub const RECALL_CUTOFFS: [usize; 3] = [1, 10, 100];

/// Sorted ids `i` with `<q, x_i> > alpha0`, per query.
pub fn cosine_ground_truth(dataset: &Dataset, queries: &Dataset, alpha0: f64) -> Result<Vec<Vec<usize>>> {
    if dataset.dim() != queries.dim() {
        return Err(Error::Dimension {
            expected: dataset.dim(),
            got: queries.dim(),
        });
    }
    let qs: Vec<&[f64]> = queries.iter().collect();
    Ok(qs
        .par_iter()
        .map(|q| {
            dataset
                .iter()
                .enumerate()
                .filter(|(_, x)| dot(q, x) > alpha0)
                .map(|(i, _)| i)
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub queries: usize,
    /// Retrieved matches over all matches, pooled over queries.
    pub recall_of_matches: f64,
    /// Retrieved matches over all retrieved ids, pooled over queries.
    pub precision: f64,
    /// `(R, mean over queries with a match of |top_R & matches| / min(R, |matches|))`.
    pub recall_at: Vec<(usize, f64)>,
    pub mean_complexity_ratio: f64,
    /// Population standard deviation of the per-query complexity ratio.
    pub complexity_std: f64,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "queries,recall_of_matches,precision,recall_at_1,recall_at_10,recall_at_100,mean_complexity_ratio,complexity_std";

    pub fn recall_at(&self, r: usize) -> Option<f64> {
        self.recall_at.iter().find(|(k, _)| *k == r).map(|&(_, v)| v)
    }

    pub fn csv_row(&self) -> String {
        let mut fields = vec![
            self.queries.to_string(),
            self.recall_of_matches.to_string(),
            self.precision.to_string(),
        ];
        fields.extend(RECALL_CUTOFFS.iter().map(|&r| self.recall_at(r).unwrap_or(f64::NAN).to_string()));
        fields.push(self.mean_complexity_ratio.to_string());
        fields.push(self.complexity_std.to_string());
        fields.join(",")
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Scores ranked result lists against ground truth.
///
/// Fractions with an empty denominator (no matches anywhere, nothing
/// retrieved) are reported as 1.
pub fn evaluate(retrieved: &[Vec<usize>], complexity_ratios: &[f64], truth: &[Vec<usize>]) -> Result<EvalReport> {
    if retrieved.len() != truth.len() || complexity_ratios.len() != truth.len() {
        return Err(Error::Domain(format!(
            "{} result lists and {} ratios for {} ground-truth lists",
            retrieved.len(),
            complexity_ratios.len(),
            truth.len()
        )));
    }
    let (mut hit, mut matches, mut returned) = (0usize, 0usize, 0usize);
    let mut at_sums = [0.0; RECALL_CUTOFFS.len()];
    let mut with_match = 0usize;
    for (got, gt) in retrieved.iter().zip(truth) {
        let is_match = |id: &usize| gt.binary_search(id).is_ok();
        hit += got.iter().filter(|id| is_match(id)).count();
        matches += gt.len();
        returned += got.len();
        if !gt.is_empty() {
            with_match += 1;
            for (sum, &r) in at_sums.iter_mut().zip(&RECALL_CUTOFFS) {
                let found = got.iter().take(r).filter(|id| is_match(id)).count();
                *sum += found as f64 / r.min(gt.len()) as f64;
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    let (mean, std) = mean_std(complexity_ratios);
    Ok(EvalReport {
        queries: truth.len(),
        recall_of_matches: ratio(hit, matches),
        precision: ratio(hit, returned),
        recall_at: RECALL_CUTOFFS
            .iter()
            .zip(at_sums)
            .map(|(&r, s)| (r, if with_match == 0 { 1.0 } else { s / with_match as f64 }))
            .collect(),
        mean_complexity_ratio: mean,
        complexity_std: std,
    })
}
