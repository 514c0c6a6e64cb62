//! Simulation laboratory for nonnegative local martingales whose running
//! supremum is continuous and which vanish at infinity.
//!
//! The crate builds three canonical generators — a Poisson-death exponential
//! martingale, a continuous exponential martingale driven by Brownian motion,
//! and a Poisson-up counterexample with upward jumps — and verifies the exact
//! laws attached to their times of maximum: the uniform law of the reciprocal
//! terminal supremum, the ratio form of the Azéma supermartingale, the
//! multiplicative decomposition through `D = 1/L*`, and pathwise
//! super-replication of digital options on the terminal supremum.
//!
//! Everything is deterministic in a `(master seed, stream)` pair and
//! independent of the parallelism degree; see [`rng`].

// Parameter guards are written `!(x > 0.0)` on purpose: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod azema;
pub mod decomposition;
pub mod hedging;
pub mod maxtime;
pub mod models;
pub mod paths;
pub mod report;
pub mod rng;
pub mod stats;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A time or value query outside the domain of a path.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structurally degenerate input (empty path, empty sample set, ...).
    #[error("structural error: {0}")]
    Structural(String),
    /// An operation was applied to the wrong model variant.
    #[error("model mismatch: {0}")]
    Model(String),
    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed serialized path or report data.
    #[error("decode error: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use maxtime::MaxRecord;
pub use models::{ModelSpec, Seed};
pub use paths::{CadlagPath, Interp, Sample, SupPath};
pub use report::{RunConfig, Summary};
