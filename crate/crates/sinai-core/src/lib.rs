//! Simulation and exact computation for Sinai's random walk in random
//! environment (RWRE).
//!
//! The crate is organized around the potential `V` of a random environment:
//! `envgen` produces reproducible environment windows, `decomp` cuts the
//! potential into certified h-extrema and slopes, `quenched` does exact
//! computations under a fixed environment, `walker` simulates trajectories
//! and the reflected-walk coupling, `kesten` evaluates the Kesten-Golosov
//! limit density, and `experiments` runs the Monte Carlo suites that confront
//! all of the above with the limit theorems they discretize.

pub mod decomp;
pub mod envgen;
pub mod experiments;
pub mod kesten;
pub mod quenched;
pub mod reference;
pub mod rng;
pub mod stats;
pub mod walker;

/// Crate-wide error type. Budget overruns are ordinary values at the Monte
/// Carlo layer (censored replicates are counted, not fatal), so the enum is
/// deliberately small.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("extension budget exceeded: need site {site}, budget allows |x| <= {budget}")]
    ExtensionBudgetExceeded { site: i64, budget: i64 },
    #[error("range error: {0}")]
    Range(String),
    #[error("rejection budget exceeded after {attempts} attempts")]
    RejectionBudgetExceeded { attempts: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = std::result::Result<T, Error>;
