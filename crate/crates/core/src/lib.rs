//! Toolkit for benchmarking higher-order binary optimization (HOBO/PUBO).
//!
//! The crate covers the full pipeline used in our experiments:
//!
//! * [`poly`]: multilinear polynomials over spin (±1) or boolean (0/1)
//!   variables, with exact domain conversions and incremental evaluation
//!   support ([`incidence`], [`brute`], [`stats`]).
//! * [`planting`]: instance generators with certified planted optima:
//!   tile-planted 2D lattices, bimodal random fields, and higher-order
//!   composites built as products of shifted constituents.
//! * [`quadratize`]: reduction-by-substitution from degree k to degree 2
//!   with penalty terms that preserve the minimum.
//! * [`solvers`]: Metropolis-based simulated annealing, parallel
//!   tempering, and population annealing with family statistics.
//! * [`metrics`]: success probability, R99, bootstrapped time-to-solution,
//!   residual energies, and scaling fits.
//! * [`format`]: plain-text instance files plus JSON sidecars for planted
//!   configurations and reduction manifests.

pub mod brute;
pub mod format;
pub mod incidence;
pub mod metrics;
pub mod planting;
pub mod poly;
pub mod quadratize;
pub mod rng;
pub mod solvers;
pub mod stats;

pub use poly::{Configuration, Domain, Polynomial};

/// Crate-wide error type. Variants map onto the failure modes of the
/// public operations; callers that need to distinguish cases match on them.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain mismatch: expected {expected:?}, got {got:?}")]
    DomainMismatch { expected: Domain, got: Domain },
    #[error("configuration length {got} does not match variable count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for n={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("brute force refused: n={n} exceeds cap {cap}")]
    BruteForceCap { n: usize, cap: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
