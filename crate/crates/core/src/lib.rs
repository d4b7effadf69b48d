//! Memory-vector group testing for similarity search on the unit sphere.
//!
//! Vectors are grouped into memory units, each summarized by one
//! representative (the plain sum of its members, or the minimal-norm vector
//! whose inner product with every member is exactly 1). A query is compared
//! with every representative and only the units that respond above a
//! threshold are scanned.
//!
//! * [`model`] - unit vectors, datasets, memory units and query models.
//! * [`sampling`] - seeded synthetic data.
//! * [`construction`] - representatives.
//! * [`analytic`] - closed-form score laws, error rates, cost and cap statistics.
//! * [`assignment`] - random, spherical k-means and batch partitioning.
//! * [`search`] - index build, threshold / top-k queries, sign sketches, `MVIX` files.
//! * [`harness`] - fvecs I/O, evaluation, experiments and the CLI.

pub mod analytic;
pub mod assignment;
pub mod construction;
pub mod error;
pub mod harness;
pub mod model;
pub mod sampling;
pub mod search;

pub use error::{Error, Result};
pub use model::{inner, normalize, Construction, Dataset, Hypothesis, MemoryIndex, MemoryUnit, QueryModel, UnitVector};
