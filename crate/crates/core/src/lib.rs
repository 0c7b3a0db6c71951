//! Bivariate zero-inflated Poisson models whose latent Poisson pair is
//! coupled through a comonotonic or counter-monotonic shock.
//!
//! The crate covers exact evaluation of the joint law, Monte Carlo
//! generation, three estimators (moments, profile likelihood, EM),
//! asymptotic and bootstrap uncertainty, and a replication study harness.

pub mod asymptotics;
pub mod data;
pub mod dist;
pub mod error;
pub mod estimate;
pub mod poisson;
pub mod shock;
pub mod simulate;
pub mod study;
mod util;

pub use dist::{BzipTable, CorrDecomposition, FrechetBounds, ModelParams};
pub use error::{Error, Result};
pub use estimate::{FitConfig, FitFlag, FitResult, Method};
pub use poisson::{Rate, ZipMarginal};
pub use shock::{BpParams, BpTable, DependenceKind, TruncationPolicy};
pub use simulate::{CountSample, LatentTrace};
