//! Seeded synthetic data: uniform sphere vectors, spherical-cap vectors,
//! planted-cluster datasets and H0/H1 queries.
//!
//! All randomness flows from a [`Seed`]. Child seeds are derived by hashing
//! the parent value with a label, so work split across threads draws the same
//! bits regardless of scheduling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::analytic::cap::check_eta;
use crate::analytic::score::ln_upper_tail;
use crate::error::{domain, Error, Result};
use crate::model::{dot, norm_sq, normalize, Dataset, Hypothesis, QueryModel, UnitVector};

/// Generator used everywhere in the crate.
pub type SeedRng = ChaCha8Rng;

/// Bisection stops once the bracket on the cap correlation is this narrow.
pub const CAP_BISECTION_TOL: f64 = 1e-10;

/// Root of a deterministic random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    /// Child seed for `label`: the first 8 bytes of `SHA-256(parent || label)`.
    pub fn derive(&self, label: &str) -> Seed {
        let mut h = Sha256::new();
        h.update(self.0.to_le_bytes());
        h.update(label.as_bytes());
        let out = h.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&out[..8]);
        Seed(u64::from_le_bytes(bytes))
    }

    /// Child seed for the `index`-th item of a labelled family.
    pub fn child(&self, label: &str, index: u64) -> Seed {
        let mut h = Sha256::new();
        h.update(self.0.to_le_bytes());
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        let out = h.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&out[..8]);
        Seed(u64::from_le_bytes(bytes))
    }

    pub fn rng(&self) -> SeedRng {
        SeedRng::seed_from_u64(self.0)
    }
}

/// Spherical cap `{ y : ||y|| = 1, y^T axis > eta }`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapSpec {
    axis: UnitVector,
    eta: f64,
}

impl CapSpec {
    pub fn new(axis: UnitVector, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { axis, eta })
    }

    pub fn axis(&self) -> &UnitVector {
        &self.axis
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

fn gaussian_vec<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform draw on the unit sphere of dimension `d`.
pub fn sample_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitVector> {
    if d == 0 {
        return Err(Error::Dimension { expected: 1, got: 0 });
    }
    loop {
        let g = gaussian_vec(d, rng);
        if norm_sq(&g) > 0.0 {
            return normalize(&g);
        }
    }
}

/// Uniform unit vector in the hyperplane orthogonal to `u`.
pub fn sample_orthogonal<R: Rng + ?Sized>(u: &[f64], rng: &mut R) -> Result<UnitVector> {
    if u.len() < 2 {
        return Err(domain("orthogonal complement is empty for d < 2"));
    }
    loop {
        let mut g = gaussian_vec(u.len(), rng);
        let proj = dot(&g, u);
        for (gi, ui) in g.iter_mut().zip(u) {
            *gi -= proj * ui;
        }
        // Second pass removes the rounding residue of the first projection.
        let proj = dot(&g, u);
        for (gi, ui) in g.iter_mut().zip(u) {
            *gi -= proj * ui;
        }
        if norm_sq(&g) > 1e-24 {
            return normalize(&g);
        }
    }
}

/// Draws `S' = Y^T u` for `Y` uniform on the cap of cosine threshold `eta`.
///
/// Inverts the restricted cdf `(F_S(s) - F_S(eta)) / (1 - F_S(eta))` by
/// bisection, working with log upper tails so narrow caps keep full precision.
pub fn sample_cap_correlation<R: Rng + ?Sized>(eta: f64, d: usize, rng: &mut R) -> Result<f64> {
    check_eta(eta)?;
    if d < 2 {
        return Err(domain(format!("cap sampling needs d >= 2, got {d}")));
    }
    let u: f64 = rng.random();
    // Solve ln T(s) - ln T(eta) = ln(1 - u) with T the upper tail of S.
    let target = ln_upper_tail(eta, d) + (-u).ln_1p();
    let (mut lo, mut hi) = (eta, 1.0);
    while hi - lo > CAP_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if ln_upper_tail(mid, d) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Uniform draw on a spherical cap.
pub fn sample_cap<R: Rng + ?Sized>(spec: &CapSpec, rng: &mut R) -> Result<UnitVector> {
    let u = spec.axis.as_slice();
    let s = sample_cap_correlation(spec.eta, u.len(), rng)?;
    let w = sample_orthogonal(u, rng)?;
    let r = ((1.0 - s) * (1.0 + s)).max(0.0).sqrt();
    let x: Vec<f64> = u
        .iter()
        .zip(w.as_slice())
        .map(|(ui, wi)| s * ui + r * wi)
        .collect();
    normalize(&x)
}

/// Query vector under H0 (uniform) or H1 (`alpha x + beta Z`, `Z` orthogonal to `x`).
pub fn make_query<R: Rng + ?Sized>(
    dataset: &Dataset,
    model: &QueryModel,
    rng: &mut R,
) -> Result<UnitVector> {
    match model.hypothesis {
        Hypothesis::H0 => sample_sphere(dataset.dim(), rng),
        Hypothesis::H1 => {
            let id = model
                .planted_id
                .ok_or_else(|| Error::Model("H1 query without a planted id".into()))?;
            if id >= dataset.len() {
                return Err(Error::Model(format!(
                    "planted id {id} out of range (N = {})",
                    dataset.len()
                )));
            }
            planted_query(dataset.get(id), model.alpha, rng)
        }
    }
}

/// `alpha x + sqrt(1 - alpha^2) Z` for a unit `x`.
pub fn planted_query<R: Rng + ?Sized>(x: &[f64], alpha: f64, rng: &mut R) -> Result<UnitVector> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Model(format!("alpha = {alpha} outside [0, 1]")));
    }
    if alpha == 1.0 {
        return normalize(x);
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    let z = sample_orthogonal(x, rng)?;
    let y: Vec<f64> = x
        .iter()
        .zip(z.as_slice())
        .map(|(xi, zi)| alpha * xi + beta * zi)
        .collect();
    normalize(&y)
}

/// `n` i.i.d. uniform vectors.
pub fn make_uniform_dataset<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(domain("dataset size must be positive"));
    }
    let vectors = (0..n)
        .map(|_| sample_sphere(d, rng))
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_vectors(vectors)
}

/// `k` caps with uniform axes, `per_cluster` uniform draws from each.
///
/// Rows are shuffled so that consecutive ids mix clusters; the returned labels
/// give the cap index of every row.
pub fn make_clustered_dataset<R: Rng + ?Sized>(
    k: usize,
    per_cluster: usize,
    d: usize,
    eta: f64,
    rng: &mut R,
) -> Result<(Dataset, Vec<usize>)> {
    if k == 0 || per_cluster == 0 {
        return Err(domain("cluster count and cluster size must be positive"));
    }
    check_eta(eta)?;
    let mut rows = Vec::with_capacity(k * per_cluster);
    for label in 0..k {
        let spec = CapSpec::new(sample_sphere(d, rng)?, eta)?;
        for _ in 0..per_cluster {
            rows.push((sample_cap(&spec, rng)?, label));
        }
    }
    rows.shuffle(rng);
    let labels = rows.iter().map(|(_, l)| *l).collect();
    let dataset = Dataset::from_vectors(rows.into_iter().map(|(v, _)| v).collect())?;
    Ok((dataset, labels))
}
