//! File formats, evaluation, experiment drivers and the command line.

pub mod cli;
pub mod eval;
pub mod experiments;
pub mod io;

pub use eval::{cosine_ground_truth, evaluate, EvalReport};
pub use io::{read_fvecs, read_ivecs, write_fvecs, write_ivecs};
