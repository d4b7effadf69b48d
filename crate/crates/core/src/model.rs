//! Shared data types and vector primitives.
//!
//! Every vector that enters the system through [`normalize`] or [`Dataset`]
//! lies on the unit hypersphere to within `1e-9`. Representatives stored in a
//! [`MemoryUnit`] are plain real vectors and are not normalized.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

/// Tolerance on `| ||v|| - 1 |` for anything typed as a unit vector.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Inner product with a fixed left-to-right accumulation order.
///
/// Results are bit-identical across runs and platforms for the same inputs.
pub fn inner(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(dot(a, b))
}

/// Unchecked inner product, same accumulation order as [`inner`].
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Scales `v` to unit Euclidean norm.
pub fn normalize(v: &[f64]) -> Result<UnitVector> {
    if v.is_empty() {
        return Err(Error::Normalization("empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Normalization("non-finite coefficient"));
    }
    let norm = norm_sq(v).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Normalization("zero norm"));
    }
    let coords: Vec<f64> = v.iter().map(|x| x / norm).collect();
    Ok(UnitVector { coords })
}

/// A vector on the unit hypersphere.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }

    /// Canonical basis vector `e_k` in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(domain(format!("basis index {k} out of range for d = {d}")));
        }
        let mut coords = vec![0.0; d];
        coords[k] = 1.0;
        Ok(Self { coords })
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// An ordered collection of unit vectors of a common dimension.
///
/// Stored row-major in one contiguous buffer; dataset ids are positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn from_vectors(vectors: Vec<UnitVector>) -> Result<Self> {
        let dim = match vectors.first() {
            Some(v) => v.dim(),
            None => return Err(domain("dataset must contain at least one vector")),
        };
        let mut data = Vec::with_capacity(dim * vectors.len());
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: v.dim(),
                });
            }
            data.extend_from_slice(v.as_slice());
        }
        Ok(Self { dim, data })
    }

    /// Builds a dataset from raw rows, normalizing each one.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let vectors = rows
            .iter()
            .map(|r| normalize(r.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_vectors(vectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, id: usize) -> &[f64] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Copies the rows at `ids` into a new dataset (ids are re-numbered).
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return Err(domain("subset must be non-empty"));
        }
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            if id >= self.len() {
                return Err(domain(format!("id {id} out of range (N = {})", self.len())));
            }
            data.extend_from_slice(self.get(id));
        }
        Ok(Self {
            dim: self.dim,
            data,
        })
    }

    pub fn vector(&self, id: usize) -> UnitVector {
        UnitVector {
            coords: self.get(id).to_vec(),
        }
    }
}

/// How a memory vector is built from its members.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Construction {
    Sum,
    Pinv,
}

impl Construction {
    pub const ALL: [Construction; 2] = [Construction::Sum, Construction::Pinv];

    pub fn tag(self) -> u32 {
        match self {
            Construction::Sum => 0,
            Construction::Pinv => 1,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Construction::Sum),
            1 => Some(Construction::Pinv),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Construction::Sum => "sum",
            Construction::Pinv => "pinv",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Construction::Sum),
            "pinv" => Ok(Construction::Pinv),
            other => Err(Error::Mode(format!("unknown construction '{other}'"))),
        }
    }
}

/// A group of dataset ids summarized by one representative.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryUnit {
    pub member_ids: Vec<usize>,
    pub representative: Vec<f64>,
}

impl MemoryUnit {
    pub fn new(member_ids: Vec<usize>, representative: Vec<f64>) -> Result<Self> {
        if member_ids.is_empty() {
            return Err(Error::EmptyUnit);
        }
        if representative.iter().any(|x| !x.is_finite()) {
            return Err(domain("representative has non-finite coefficients"));
        }
        let mut sorted = member_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("duplicate member id in unit"));
        }
        Ok(Self {
            member_ids,
            representative,
        })
    }

    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }
}

/// M memory units covering a dataset of N vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryIndex {
    pub units: Vec<MemoryUnit>,
    pub construction: Construction,
    pub dim: usize,
    pub total: usize,
    /// Units whose pinv representative needed the fallback ridge.
    pub fallback_units: Vec<usize>,
}

impl MemoryIndex {
    /// Assembles an index and checks that the units partition `[0, total)`.
    pub fn new(
        units: Vec<MemoryUnit>,
        construction: Construction,
        dim: usize,
        total: usize,
    ) -> Result<Self> {
        let index = Self {
            units,
            construction,
            dim,
            total,
            fallback_units: Vec::new(),
        };
        index.validate()?;
        Ok(index)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.total];
        let mut count = 0usize;
        for unit in &self.units {
            if unit.representative.len() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    got: unit.representative.len(),
                });
            }
            for &id in &unit.member_ids {
                if id >= self.total || seen[id] {
                    return Err(domain(format!("id {id} missing from range or repeated")));
                }
                seen[id] = true;
                count += 1;
            }
        }
        if count != self.total {
            return Err(domain(format!(
                "units cover {count} ids but the dataset has {}",
                self.total
            )));
        }
        Ok(())
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.units.iter().map(MemoryUnit::len).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Generative model of a query: unrelated (H0) or `alpha * x + beta * Z` (H1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryModel {
    pub alpha: f64,
    pub planted_id: Option<usize>,
    pub hypothesis: Hypothesis,
}

impl QueryModel {
    pub fn null() -> Self {
        Self {
            alpha: 0.0,
            planted_id: None,
            hypothesis: Hypothesis::H0,
        }
    }

    pub fn planted(id: usize, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Model(format!("alpha = {alpha} outside [0, 1]")));
        }
        Ok(Self {
            alpha,
            planted_id: Some(id),
            hypothesis: Hypothesis::H1,
        })
    }

    pub fn beta(&self) -> f64 {
        (1.0 - self.alpha * self.alpha).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_three_four_five() {
        let u = normalize(&[3.0, 4.0]).unwrap();
        assert!((u.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((u.as_slice()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_identity_and_errors() {
        let u = normalize(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(u.as_slice(), &[1.0, 0.0, 0.0]);
        assert!(matches!(normalize(&[0.0, 0.0]), Err(Error::Normalization(_))));
        assert!(matches!(normalize(&[1.0, f64::NAN]), Err(Error::Normalization(_))));
        assert!(matches!(normalize(&[]), Err(Error::Normalization(_))));
    }

    #[test]
    fn inner_examples() {
        let e1 = UnitVector::basis(3, 0).unwrap();
        let e2 = UnitVector::basis(3, 1).unwrap();
        assert_eq!(inner(e1.as_slice(), e1.as_slice()).unwrap(), 1.0);
        assert_eq!(inner(e1.as_slice(), e2.as_slice()).unwrap(), 0.0);
        let v = inner(&[0.6, 0.8], &[0.8, 0.6]).unwrap();
        assert!((v - 0.96).abs() < 1e-15);
        assert!(matches!(
            inner(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn dataset_rejects_mixed_dims() {
        let a = normalize(&[1.0, 1.0]).unwrap();
        let b = normalize(&[1.0, 1.0, 1.0]).unwrap();
        assert!(Dataset::from_vectors(vec![a, b]).is_err());
        assert!(Dataset::from_vectors(vec![]).is_err());
    }

    #[test]
    fn index_must_partition() {
        let unit = |ids: Vec<usize>| MemoryUnit::new(ids, vec![0.0, 1.0]).unwrap();
        assert!(MemoryIndex::new(vec![unit(vec![0, 2]), unit(vec![1])], Construction::Sum, 2, 3).is_ok());
        assert!(MemoryIndex::new(vec![unit(vec![0, 1]), unit(vec![1])], Construction::Sum, 2, 3).is_err());
        assert!(MemoryIndex::new(vec![unit(vec![0])], Construction::Sum, 2, 3).is_err());
        assert!(MemoryUnit::new(vec![1, 1], vec![0.0]).is_err());
        assert!(matches!(MemoryUnit::new(vec![], vec![0.0]), Err(Error::EmptyUnit)));
    }

    #[test]
    fn query_model_beta() {
        let q = QueryModel::planted(0, 0.6).unwrap();
        assert!((q.beta() - 0.8).abs() < 1e-15);
        assert!(QueryModel::planted(0, 1.2).is_err());
    }

    proptest::proptest! {
        #[test]
        fn normalized_vectors_are_unit(v in proptest::collection::vec(-1e3f64..1e3, 1..64)) {
            if let Ok(u) = normalize(&v) {
                let n = inner(u.as_slice(), u.as_slice()).unwrap();
                proptest::prop_assert!((n - 1.0).abs() <= 1e-8);
            }
        }
    }
}
