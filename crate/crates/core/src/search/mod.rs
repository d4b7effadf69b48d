//! Two-level index: score the query against every memory vector, then
//! re-rank the members of the units that respond.

pub mod binary;
pub mod mvix;

use rayon::prelude::*;

use crate::assignment::Partition;
use crate::construction::{representative, ConstructionConfig};
use crate::error::{domain, Error, Result};
use crate::model::{dot, Dataset, MemoryIndex, MemoryUnit};

pub use binary::{binarize, query_binary, BinaryIndex, BinaryMode, Rerank};
pub use mvix::{read_index, write_index};

/// Which units are opened for a query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnitSelection {
    /// Units with score strictly above the threshold.
    Threshold(f64),
    /// The `k` highest-scoring units (ties to the lower unit id).
    TopUnits(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    /// `(unit id, score)` by descending score, ties to the lower id.
    pub positive_units: Vec<(usize, f64)>,
    /// `(dataset id, similarity)` by descending similarity, ties to the lower id.
    pub candidates: Vec<(usize, f64)>,
    /// `M + sum of the sizes of positive units`.
    pub complexity: usize,
    /// `complexity / N`
    pub complexity_ratio: f64,
}

/// One unit per partition cell, representatives built in parallel.
pub fn build_index(dataset: &Dataset, partition: &Partition, cfg: &ConstructionConfig) -> Result<MemoryIndex> {
    if partition.total() != dataset.len() {
        return Err(domain(format!(
            "partition covers {} ids but the dataset has {}",
            partition.total(),
            dataset.len()
        )));
    }
    let built: Vec<(MemoryUnit, bool)> = partition
        .members()
        .into_par_iter()
        .map(|ids| {
            if ids.is_empty() {
                return Err(Error::EmptyUnit);
            }
            let rows: Vec<&[f64]> = ids.iter().map(|&i| dataset.get(i)).collect();
            let (rep, fallback) = representative(&rows, cfg)?;
            Ok((MemoryUnit::new(ids, rep)?, fallback))
        })
        .collect::<Result<_>>()?;
    let fallback_units = built
        .iter()
        .enumerate()
        .filter(|(_, (_, fb))| *fb)
        .map(|(u, _)| u)
        .collect();
    let units = built.into_iter().map(|(u, _)| u).collect();
    let mut index = MemoryIndex::new(units, cfg.kind, dataset.dim(), dataset.len())?;
    index.fallback_units = fallback_units;
    Ok(index)
}

fn check_dims(index: &MemoryIndex, dataset: &Dataset, y: &[f64]) -> Result<()> {
    if y.len() != index.dim {
        return Err(Error::Dimension {
            expected: index.dim,
            got: y.len(),
        });
    }
    if dataset.dim() != index.dim || dataset.len() != index.total {
        return Err(domain("dataset does not match the index"));
    }
    Ok(())
}

/// `<y, m_j>` for every unit.
pub fn unit_scores(index: &MemoryIndex, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != index.dim {
        return Err(Error::Dimension {
            expected: index.dim,
            got: y.len(),
        });
    }
    Ok(index.units.iter().map(|u| dot(y, &u.representative)).collect())
}

fn by_score_desc(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Picks positive units from per-unit scores.
pub(crate) fn select_units(scores: &[f64], sel: UnitSelection) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
    match sel {
        UnitSelection::Threshold(tau) => {
            all.retain(|&(_, s)| s > tau);
            all.sort_by(by_score_desc);
        }
        UnitSelection::TopUnits(k) => {
            all.sort_by(by_score_desc);
            all.truncate(k);
        }
    }
    all
}

/// Scores the members of the positive units with `score` and assembles the result.
pub(crate) fn assemble<F: Fn(usize) -> f64>(
    units: &[MemoryUnit],
    total: usize,
    positive_units: Vec<(usize, f64)>,
    score: F,
) -> QueryResult {
    let mut candidates: Vec<(usize, f64)> = positive_units
        .iter()
        .flat_map(|&(u, _)| units[u].member_ids.iter().map(|&i| (i, score(i))))
        .collect();
    candidates.sort_by(by_score_desc);
    let complexity = units.len() + positive_units.iter().map(|&(u, _)| units[u].len()).sum::<usize>();
    QueryResult {
        positive_units,
        candidates,
        complexity,
        complexity_ratio: complexity as f64 / total as f64,
    }
}

/// Threshold query: opens every unit with `<y, m_j> > tau`.
pub fn query(index: &MemoryIndex, dataset: &Dataset, y: &[f64], tau: f64) -> Result<QueryResult> {
    query_with(index, dataset, y, UnitSelection::Threshold(tau))
}

pub fn query_with(index: &MemoryIndex, dataset: &Dataset, y: &[f64], sel: UnitSelection) -> Result<QueryResult> {
    check_dims(index, dataset, y)?;
    let scores = unit_scores(index, y)?;
    let positives = select_units(&scores, sel);
    Ok(assemble(&index.units, index.total, positives, |i| dot(y, dataset.get(i))))
}
