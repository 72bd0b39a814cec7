//! Numerical laboratory for hierarchical random energy models at complex
//! inverse temperature: exact finite-size moments, limiting log-partition
//! function and phase diagram, Monte Carlo simulation of the partition
//! function, zero finding in the complex temperature plane, Poisson cascade
//! point processes with their random zeta functions, and a distributional
//! test battery connecting the simulations to the limit laws.
//!
//! Start with [`model::build_model`], then explore the runnable programs in
//! `examples/` (one per capability) or the `grem` command-line binary.

pub mod cascade;
pub mod cli;
pub mod error;
pub mod fastmath;
pub mod logc;
pub mod model;
pub mod moments;
pub mod phase;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod zeros;

pub use error::{GremError, Result};
pub use model::{build_model, BranchingRule, ComplexTemp, ModelParams, Normalizers};
pub use phase::{classify, classify_level, log_partition_limit, CompositePhase, LevelPhase, Rect};
