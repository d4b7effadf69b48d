//! Partitioning a dataset into memory units: random chunks, spherical
//! k-means with sum or pinv representatives, and per-batch clustering.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::construction::{representative, ConstructionConfig};
use crate::error::{domain, Result};
use crate::model::{dot, norm_sq, Construction, Dataset};
use crate::sampling::Seed;

/// Assignment of every dataset id to one of `M` units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    unit_of: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Checks that every unit id is below `num_units`.
    ///
    /// Empty units are allowed here; builders that need non-empty cells check
    /// separately.
    pub fn new(unit_of: Vec<usize>, num_units: usize) -> Result<Self> {
        if num_units == 0 {
            return Err(domain("partition needs at least one unit"));
        }
        let mut sizes = vec![0; num_units];
        for (id, &u) in unit_of.iter().enumerate() {
            if u >= num_units {
                return Err(domain(format!("id {id} assigned to unit {u} >= M = {num_units}")));
            }
            sizes[u] += 1;
        }
        Ok(Self { unit_of, sizes })
    }

    /// Partition whose units are the given id lists, in order.
    pub fn from_members(members: &[Vec<usize>], total: usize) -> Result<Self> {
        let mut unit_of = vec![usize::MAX; total];
        for (u, ids) in members.iter().enumerate() {
            for &id in ids {
                if id >= total || unit_of[id] != usize::MAX {
                    return Err(domain(format!("id {id} out of range or repeated")));
                }
                unit_of[id] = u;
            }
        }
        if let Some(id) = unit_of.iter().position(|&u| u == usize::MAX) {
            return Err(domain(format!("id {id} not covered")));
        }
        Self::new(unit_of, members.len())
    }

    pub fn unit_of(&self) -> &[usize] {
        &self.unit_of
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_units(&self) -> usize {
        self.sizes.len()
    }

    pub fn total(&self) -> usize {
        self.unit_of.len()
    }

    /// Member ids per unit, ascending within each unit.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (id, &u) in self.unit_of.iter().enumerate() {
            out[u].push(id);
        }
        out
    }
}

/// Summary of unit sizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImbalanceStats {
    pub num_units: usize,
    pub total: usize,
    /// `M * sum_i (n_i / N)^2`
    pub delta: f64,
    /// `N / M`
    pub mean_size: f64,
    /// `(delta - 1) N^2 / M^2`
    pub size_variance: f64,
}

/// Imbalance factor `M * sum_i p_i^2` with `p_i = n_i / N`.
pub fn imbalance_factor(p: &Partition) -> f64 {
    imbalance_from_sizes(p.sizes())
}

pub fn imbalance_from_sizes(sizes: &[usize]) -> f64 {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return f64::NAN;
    }
    // Integer sums keep balanced partitions at exactly 1.
    let sq: u128 = sizes.iter().map(|&s| (s as u128) * (s as u128)).sum();
    (sizes.len() as u128 * sq) as f64 / ((total as u128) * (total as u128)) as f64
}

pub fn imbalance_stats(p: &Partition) -> ImbalanceStats {
    let delta = imbalance_factor(p);
    let (m, n) = (p.num_units() as f64, p.total() as f64);
    ImbalanceStats {
        num_units: p.num_units(),
        total: p.total(),
        delta,
        mean_size: n / m,
        size_variance: (delta - 1.0) * n * n / (m * m),
    }
}

/// Seeded permutation of `[0, N)` cut into consecutive chunks of `unit_size`.
pub fn random_assignment<R: Rng + ?Sized>(total: usize, unit_size: usize, rng: &mut R) -> Result<Partition> {
    if unit_size == 0 {
        return Err(domain("unit size must be positive"));
    }
    if unit_size > total {
        return Err(domain(format!("unit size {unit_size} exceeds N = {total}")));
    }
    let mut perm: Vec<usize> = (0..total).collect();
    perm.shuffle(rng);
    let mut unit_of = vec![0; total];
    for (pos, &id) in perm.iter().enumerate() {
        unit_of[id] = pos / unit_size;
    }
    Partition::new(unit_of, total.div_ceil(unit_size))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansConfig {
    pub num_units: usize,
    /// Representative used in the update step.
    pub construction: ConstructionConfig,
    /// Rescale representatives to unit norm before each assignment step.
    pub normalize: bool,
    pub max_iters: usize,
    pub seed: Seed,
    /// Explicit initial centers (dataset ids). `None` draws `M` distinct ids.
    pub init: Option<Vec<usize>>,
}

impl KMeansConfig {
    pub const DEFAULT_MAX_ITERS: usize = 20;

    pub fn new(num_units: usize, kind: Construction, normalize: bool, seed: Seed) -> Self {
        Self {
            num_units,
            construction: ConstructionConfig::new(kind),
            normalize,
            max_iters: Self::DEFAULT_MAX_ITERS,
            seed,
            init: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub partition: Partition,
    /// Final representatives (unit norm when `normalize` is set).
    pub representatives: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// `sum_x <x, r_unit(x)>` after each assignment step.
    pub objective: Vec<f64>,
}

fn argmax_unit(x: &[f64], reps: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, r) in reps.iter().enumerate() {
        let s = dot(x, r);
        // Strict comparison keeps the lowest unit id on ties.
        if s > best.1 {
            best = (j, s);
        }
    }
    best
}

fn update_representatives(
    dataset: &Dataset,
    members: &[Vec<usize>],
    cfg: &KMeansConfig,
) -> Result<Vec<Vec<f64>>> {
    members
        .par_iter()
        .map(|ids| {
            let rows: Vec<&[f64]> = ids.iter().map(|&i| dataset.get(i)).collect();
            let (mut r, _) = representative(&rows, &cfg.construction)?;
            if cfg.normalize {
                let norm = norm_sq(&r).sqrt();
                if norm > 0.0 {
                    r.iter_mut().for_each(|v| *v /= norm);
                }
            }
            Ok(r)
        })
        .collect()
}

/// Moves one random member of the largest unit into each empty unit.
fn repair_empty<R: Rng + ?Sized>(unit_of: &mut [usize], m: usize, rng: &mut R) {
    loop {
        let mut sizes = vec![0usize; m];
        for &u in unit_of.iter() {
            sizes[u] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..m).fold(0, |b, j| if sizes[j] > sizes[b] { j } else { b });
        let pick = rng.random_range(0..sizes[largest]);
        let id = unit_of
            .iter()
            .enumerate()
            .filter(|(_, &u)| u == largest)
            .nth(pick)
            .map(|(i, _)| i)
            .expect("largest unit has members");
        unit_of[id] = empty;
    }
}

/// Spherical k-means whose update step uses the configured construction.
pub fn spherical_kmeans(dataset: &Dataset, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = dataset.len();
    let m = cfg.num_units;
    if m == 0 || m > n {
        return Err(domain(format!("k-means needs 1 <= M <= N, got M = {m}, N = {n}")));
    }
    if cfg.max_iters == 0 {
        return Err(domain("max_iters must be positive"));
    }
    let mut rng = cfg.seed.derive("kmeans").rng();
    let init: Vec<usize> = match &cfg.init {
        Some(ids) => {
            if ids.len() != m || ids.iter().any(|&i| i >= n) {
                return Err(domain("initial centers must be M valid dataset ids"));
            }
            ids.clone()
        }
        None => {
            let mut ids = sample(&mut rng, n, m).into_vec();
            ids.sort_unstable();
            ids
        }
    };
    let mut reps: Vec<Vec<f64>> = init.iter().map(|&i| dataset.get(i).to_vec()).collect();
    let mut unit_of: Vec<usize> = Vec::new();
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let scored: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| argmax_unit(dataset.get(i), &reps))
            .collect();
        let mut next: Vec<usize> = scored.iter().map(|&(u, _)| u).collect();
        repair_empty(&mut next, m, &mut rng);
        let changed = next != unit_of;
        unit_of = next;
        objective.push(
            unit_of
                .iter()
                .enumerate()
                .map(|(i, &u)| dot(dataset.get(i), &reps[u]))
                .sum(),
        );
        if !changed {
            converged = true;
            break;
        }
        let partition = Partition::new(unit_of.clone(), m)?;
        reps = update_representatives(dataset, &partition.members(), cfg)?;
    }

    Ok(KMeansResult {
        partition: Partition::new(unit_of, m)?,
        representatives: reps,
        iterations,
        converged,
        objective,
    })
}

/// How each batch is partitioned.
#[derive(Clone, Debug, PartialEq)]
pub enum BatchInner {
    Random { unit_size: usize },
    KMeans(KMeansConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchConfig {
    pub batch_size: usize,
    pub inner: BatchInner,
    pub seed: Seed,
}

impl BatchConfig {
    fn validate(&self) -> Result<()> {
        let per_batch = match &self.inner {
            BatchInner::Random { unit_size } => *unit_size,
            BatchInner::KMeans(k) => k.num_units,
        };
        if per_batch == 0 || self.batch_size < per_batch {
            return Err(domain(format!(
                "batch size {} must be >= units (or unit size) per batch {per_batch} >= 1",
                self.batch_size
            )));
        }
        Ok(())
    }

    /// Seed of the `b`-th batch.
    pub fn batch_seed(&self, b: usize) -> Seed {
        self.seed.child("batch", b as u64)
    }
}

/// Runs the inner assignment on consecutive id ranges and concatenates the
/// results, offsetting unit ids by the units of earlier batches.
///
/// A trailing batch shorter than `batch_size` gets a proportionally reduced
/// unit count, `ceil(M_b * len / B)`.
pub fn batch_assignment(dataset: &Dataset, cfg: &BatchConfig) -> Result<Partition> {
    cfg.validate()?;
    let n = dataset.len();
    let starts: Vec<usize> = (0..n).step_by(cfg.batch_size).collect();
    let parts: Vec<Partition> = starts
        .par_iter()
        .enumerate()
        .map(|(b, &start)| {
            let end = (start + cfg.batch_size).min(n);
            let len = end - start;
            let seed = cfg.batch_seed(b);
            match &cfg.inner {
                BatchInner::Random { unit_size } => {
                    random_assignment(len, (*unit_size).min(len), &mut seed.rng())
                }
                BatchInner::KMeans(k) => {
                    let ids: Vec<usize> = (start..end).collect();
                    let sub = dataset.subset(&ids)?;
                    let mut k = k.clone();
                    k.seed = seed;
                    k.init = None;
                    if len < cfg.batch_size {
                        k.num_units = (k.num_units * len).div_ceil(cfg.batch_size).clamp(1, len);
                    }
                    Ok(spherical_kmeans(&sub, &k)?.partition)
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut unit_of = Vec::with_capacity(n);
    let mut offset = 0;
    for p in &parts {
        unit_of.extend(p.unit_of().iter().map(|u| u + offset));
        offset += p.num_units();
    }
    Partition::new(unit_of, offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::inner;
    use crate::sampling::{make_clustered_dataset, make_uniform_dataset};
    use proptest::prelude::*;

    #[test]
    fn random_examples() {
        let mut rng = Seed(1).rng();
        let p = random_assignment(100, 10, &mut rng).unwrap();
        assert_eq!(p.num_units(), 10);
        assert!(p.sizes().iter().all(|&s| s == 10));
        assert_eq!(imbalance_factor(&p), 1.0);
        let p = random_assignment(10, 10, &mut rng).unwrap();
        assert_eq!(p.members(), vec![(0..10).collect::<Vec<_>>()]);
        assert!(random_assignment(5, 10, &mut rng).is_err());
        assert!(random_assignment(5, 0, &mut rng).is_err());
    }

    #[test]
    fn imbalance_examples() {
        let two = Partition::new([vec![0; 75], vec![1; 25]].concat(), 2).unwrap();
        assert!((imbalance_factor(&two) - 1.25).abs() < 1e-15);
        let lumped = Partition::new(vec![0; 40], 4).unwrap();
        assert!((imbalance_factor(&lumped) - 4.0).abs() < 1e-15);
        let s = imbalance_stats(&two);
        assert_eq!(s.mean_size, 50.0);
        // sizes 75, 25: variance 625
        assert!((s.size_variance - 625.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn random_assignment_partitions(total in 1usize..300, frac in 0.0f64..1.0, seed in any::<u64>()) {
            let unit = 1 + ((total - 1) as f64 * frac) as usize;
            let p = random_assignment(total, unit, &mut Seed(seed).rng()).unwrap();
            let mut all: Vec<usize> = p.members().concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..total).collect::<Vec<_>>());
            prop_assert_eq!(p.num_units(), total.div_ceil(unit));
            let short = p.sizes().iter().filter(|&&s| s != unit).count();
            prop_assert!(short <= 1);
            prop_assert!(imbalance_factor(&p) >= 1.0 - 1e-12);
        }

        #[test]
        fn imbalance_at_least_one(sizes in proptest::collection::vec(0usize..50, 1..20)) {
            prop_assume!(sizes.iter().sum::<usize>() > 0);
            let delta = imbalance_from_sizes(&sizes);
            prop_assert!(delta >= 1.0 - 1e-12);
            if sizes.iter().all(|&s| s == sizes[0]) {
                prop_assert!((delta - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_unit_kmeans() {
        let data = make_uniform_dataset(30, 8, &mut Seed(2).rng()).unwrap();
        let cfg = KMeansConfig::new(1, Construction::Sum, false, Seed(3));
        let r = spherical_kmeans(&data, &cfg).unwrap();
        assert_eq!(r.partition.sizes(), &[30]);
        let rows: Vec<&[f64]> = data.iter().collect();
        let want = crate::construction::sum_vector(&rows).unwrap();
        for (a, b) in r.representatives[0].iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(spherical_kmeans(&data, &KMeansConfig::new(31, Construction::Sum, false, Seed(3))).is_err());
    }

    fn planted() -> (Dataset, Vec<usize>) {
        make_clustered_dataset(10, 50, 128, 0.95, &mut Seed(4).rng()).unwrap()
    }

    fn recovers(labels: &[usize], p: &Partition) -> bool {
        let mut map = vec![usize::MAX; p.num_units()];
        for (id, &u) in p.unit_of().iter().enumerate() {
            if map[u] == usize::MAX {
                map[u] = labels[id];
            } else if map[u] != labels[id] {
                return false;
            }
        }
        let mut seen = map.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == p.num_units()
    }

    #[test]
    fn planted_partition_recovered_from_covering_init() {
        let (data, labels) = planted();
        let init: Vec<usize> = (0..10).map(|c| labels.iter().position(|&l| l == c).unwrap()).collect();
        for kind in Construction::ALL {
            let mut cfg = KMeansConfig::new(10, kind, true, Seed(5));
            cfg.init = Some(init.clone());
            let r = spherical_kmeans(&data, &cfg).unwrap();
            assert!(recovers(&labels, &r.partition), "{kind}");
            assert!(r.converged);
        }
    }

    #[test]
    fn sum_normalized_objective_is_monotone() {
        let (data, _) = planted();
        for seed in 0..5 {
            let cfg = KMeansConfig::new(10, Construction::Sum, true, Seed(seed));
            let r = spherical_kmeans(&data, &cfg).unwrap();
            for w in r.objective.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{:?}", r.objective);
            }
        }
    }

    #[test]
    fn pinv_representatives_satisfy_constraint() {
        let data = make_uniform_dataset(200, 64, &mut Seed(6).rng()).unwrap();
        let cfg = KMeansConfig::new(8, Construction::Pinv, false, Seed(7));
        let r = spherical_kmeans(&data, &cfg).unwrap();
        for (u, ids) in r.partition.members().iter().enumerate() {
            if ids.len() < 64 {
                for &i in ids {
                    let s = inner(&r.representatives[u], data.get(i)).unwrap();
                    assert!((s - 1.0).abs() <= 1e-6, "{s}");
                }
            }
        }
    }

    #[test]
    fn kmeans_is_deterministic() {
        let (data, _) = planted();
        let cfg = KMeansConfig::new(10, Construction::Pinv, true, Seed(8));
        let a = spherical_kmeans(&data, &cfg).unwrap();
        let b = spherical_kmeans(&data, &cfg).unwrap();
        let c = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| spherical_kmeans(&data, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn no_empty_units_after_kmeans() {
        // Many more units than natural clusters forces empty-cell repair.
        let (data, _) = make_clustered_dataset(2, 30, 16, 0.99, &mut Seed(9).rng()).unwrap();
        let r = spherical_kmeans(&data, &KMeansConfig::new(20, Construction::Sum, true, Seed(10))).unwrap();
        assert!(r.partition.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn batch_matches_single_run_and_per_batch_random() {
        let (data, _) = planted();
        let k = KMeansConfig::new(10, Construction::Sum, true, Seed(0));
        let cfg = BatchConfig {
            batch_size: data.len(),
            inner: BatchInner::KMeans(k.clone()),
            seed: Seed(11),
        };
        let batched = batch_assignment(&data, &cfg).unwrap();
        let mut single = k;
        single.seed = cfg.batch_seed(0);
        assert_eq!(batched, spherical_kmeans(&data, &single).unwrap().partition);

        let cfg = BatchConfig {
            batch_size: 120,
            inner: BatchInner::Random { unit_size: 10 },
            seed: Seed(12),
        };
        let p = batch_assignment(&data, &cfg).unwrap();
        let mut offset = 0;
        for (b, start) in (0..data.len()).step_by(120).enumerate() {
            let len = (data.len() - start).min(120);
            let local = random_assignment(len, 10, &mut cfg.batch_seed(b).rng()).unwrap();
            for (i, &u) in local.unit_of().iter().enumerate() {
                assert_eq!(p.unit_of()[start + i], u + offset);
            }
            offset += local.num_units();
        }
        assert_eq!(p.num_units(), offset);
    }

    #[test]
    fn batch_kmeans_covers_and_stays_balanced() {
        let (data, _) = make_clustered_dataset(40, 50, 32, 0.9, &mut Seed(13).rng()).unwrap();
        let cfg = BatchConfig {
            batch_size: 500,
            inner: BatchInner::KMeans(KMeansConfig::new(50, Construction::Pinv, true, Seed(0))),
            seed: Seed(14),
        };
        let p = batch_assignment(&data, &cfg).unwrap();
        assert_eq!(p.total(), 2000);
        assert_eq!(p.num_units(), 200);
        assert!(imbalance_factor(&p) <= 3.0, "{}", imbalance_factor(&p));
        assert!(batch_assignment(
            &data,
            &BatchConfig {
                batch_size: 5,
                inner: BatchInner::Random { unit_size: 10 },
                seed: Seed(0)
            }
        )
        .is_err());
    }
}
