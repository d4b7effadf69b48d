//! Sign sketches of dataset vectors and memory vectors.
//!
//! Bit `k` of a code is 1 iff coefficient `k` is `>= 0`. Codes are packed
//! little-endian into `u64` words: coordinate `k` lives in word `k / 64` at
//! bit `k % 64`.

use std::fmt;
use std::str::FromStr;

use super::{assemble, select_units, QueryResult, UnitSelection};
use crate::error::{domain, Error, Result};
use crate::model::{dot, Dataset, MemoryIndex, MemoryUnit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryMode {
    /// Query binarized too; score `d - 2 * hamming`.
    Symmetric,
    /// Real query against `+-1` codes; score `sum_k y_k s_k`.
    Asymmetric,
}

impl BinaryMode {
    pub fn name(self) -> &'static str {
        match self {
            BinaryMode::Symmetric => "symmetric",
            BinaryMode::Asymmetric => "asymmetric",
        }
    }
}

impl fmt::Display for BinaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BinaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(BinaryMode::Symmetric),
            "asymmetric" => Ok(BinaryMode::Asymmetric),
            other => Err(Error::Mode(format!("unknown binary mode '{other}'"))),
        }
    }
}

/// Candidate scoring after the unit scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rerank {
    /// Exact inner products with the stored real vectors.
    Real,
    /// The same binary score used for the unit scan.
    Binary,
}

pub fn words_for(d: usize) -> usize {
    d.div_ceil(64)
}

/// Packed sign code of `v`.
pub fn sign_code(v: &[f64]) -> Vec<u64> {
    let mut code = vec![0u64; words_for(v.len())];
    for (k, &x) in v.iter().enumerate() {
        if x >= 0.0 {
            code[k / 64] |= 1u64 << (k % 64);
        }
    }
    code
}

/// Code as a `0`/`1` string in coordinate order.
pub fn code_string(code: &[u64], d: usize) -> String {
    (0..d)
        .map(|k| if code[k / 64] >> (k % 64) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn hamming(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// `+-1` inner product of two codes of dimension `d`: `d - 2 * hamming`.
pub fn symmetric_score(a: &[u64], b: &[u64], d: usize) -> f64 {
    d as f64 - 2.0 * hamming(a, b) as f64
}

/// `sum_k y_k s_k` with `s_k = +1` where the code bit is set, else `-1`.
pub fn asymmetric_score(y: &[f64], code: &[u64]) -> f64 {
    let mut acc = 0.0;
    for (k, &v) in y.iter().enumerate() {
        if code[k / 64] >> (k % 64) & 1 == 1 {
            acc += v;
        } else {
            acc -= v;
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryIndex {
    pub dim: usize,
    /// Per-vector codes, `words_for(dim)` words each.
    pub codes: Vec<u64>,
    /// Per-unit codes of the representatives.
    pub unit_codes: Vec<u64>,
    pub units: Vec<MemoryUnit>,
    pub total: usize,
}

impl BinaryIndex {
    pub fn words(&self) -> usize {
        words_for(self.dim)
    }

    pub fn code(&self, id: usize) -> &[u64] {
        let w = self.words();
        &self.codes[id * w..(id + 1) * w]
    }

    pub fn unit_code(&self, u: usize) -> &[u64] {
        let w = self.words();
        &self.unit_codes[u * w..(u + 1) * w]
    }
}

/// Sign-binarizes every dataset vector and every representative.
pub fn binarize(index: &MemoryIndex, dataset: &Dataset) -> Result<BinaryIndex> {
    if dataset.dim() != index.dim || dataset.len() != index.total {
        return Err(domain("dataset does not match the index"));
    }
    Ok(BinaryIndex {
        dim: index.dim,
        codes: dataset.iter().flat_map(sign_code).collect(),
        unit_codes: index.units.iter().flat_map(|u| sign_code(&u.representative)).collect(),
        units: index.units.clone(),
        total: index.total,
    })
}

/// Unit scan with binary scores, then re-ranking of the opened units.
///
/// Thresholds are on the mode's own scale: the `+-1` inner product for
/// symmetric mode, `sum_k y_k s_k` for asymmetric mode.
pub fn query_binary(
    bindex: &BinaryIndex,
    dataset: &Dataset,
    y: &[f64],
    sel: UnitSelection,
    mode: BinaryMode,
    rerank: Rerank,
) -> Result<QueryResult> {
    if y.len() != bindex.dim {
        return Err(Error::Dimension {
            expected: bindex.dim,
            got: y.len(),
        });
    }
    if dataset.dim() != bindex.dim || dataset.len() != bindex.total {
        return Err(domain("dataset does not match the index"));
    }
    let d = bindex.dim;
    let qcode = sign_code(y);
    let score = |code: &[u64]| match mode {
        BinaryMode::Symmetric => symmetric_score(&qcode, code, d),
        BinaryMode::Asymmetric => asymmetric_score(y, code),
    };
    let scores: Vec<f64> = (0..bindex.units.len()).map(|u| score(bindex.unit_code(u))).collect();
    let positives = select_units(&scores, sel);
    Ok(match rerank {
        Rerank::Real => assemble(&bindex.units, bindex.total, positives, |i| dot(y, dataset.get(i))),
        Rerank::Binary => assemble(&bindex.units, bindex.total, positives, |i| score(bindex.code(i))),
    })
}
