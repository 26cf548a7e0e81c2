//! Causal embeddings of structural causal models.
//!
//! The crate is organised bottom-up:
//!
//! - [`scm`]: finite-range structural causal models, hard interventions, the
//!   exact observational/interventional engine and a seeded sampler.
//! - [`distribution`]: tabular pmfs over variable assignments and the distances
//!   used to compare them.
//! - [`graph`]: ADMGs, mediated adjacencies/confounders, latent projection and
//!   cluster-DAG verification.
//! - [`embedding`]: α-embeddings, their structural and graphical checks,
//!   pushforward, the L1/L2 embedding error and the consistent completion of a
//!   high-level model.
//! - [`marginal`]: the multi-resolution causal marginal problem.
//! - [`merge`]: dataset transformation, concatenation, KNN imputation and
//!   histogram-based KL reporting.
//! - [`fixtures`]: executable models from the worked examples.
//! - [`format`]: TOML files for models, embeddings and marginal problems.

pub mod dataset;
pub mod distribution;
pub mod embedding;
pub mod fixtures;
pub mod format;
pub mod graph;
pub mod marginal;
pub mod merge;
pub mod scm;
mod variable;

pub use dataset::Dataset;
pub use distribution::{DiscreteDistribution, Distance};
pub use embedding::{Embedding, RangeMap, RangeMapKind};
pub use graph::{CausalGraph, VariableMap};
pub use scm::{Layer, Scm};
pub use variable::{Value, ValueRange, VariableId};

/// Absolute tolerance for probability comparisons.
pub const PROB_TOLERANCE: f64 = 1e-9;
