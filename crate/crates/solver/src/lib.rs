//! End-to-end solving pipeline and benchmark harness.
//!
//! Construction comes either from the neural policy (multi-start greedy
//! decoding, optionally over the eight augmented images) or from the
//! nearest-neighbor / random initializers; refinement is the granular local
//! search. The harness parses benchmark directories, solves every instance
//! and reports objectives with relative percentage deviations against
//! best-known references.

mod bench;
mod greedy;
mod pipeline;
mod rpd;

pub use bench::{benchmark, load_references, BenchmarkReport, InstanceReport};
pub use greedy::greedy_initial;
pub use pipeline::{Solver, SolveConfig, SolveMode, SolveStats};
pub use rpd::compute_rpd;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solve configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] vrp_io::IoError),
    #[error(transparent)]
    Search(#[from] vrp_search::SearchError),
    #[error(transparent)]
    Policy(#[from] vrp_policy::PolicyError),
    #[error(transparent)]
    Core(#[from] vrp_core::CoreError),
    #[error("{0}")]
    File(String),
}
