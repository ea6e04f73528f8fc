//! Dimension analysis and cardinality selection for latent class (LC) and
//! hierarchical latent class (HLC) models.
//!
//! The crate is organised around six modules:
//!
//! * [`model`] – tree structures, conditional probability tables, regularity
//!   and exact inference over the observed variables.
//! * [`dimension`] – standard, complete, pairwise and effective dimensions,
//!   the analytic Jacobian and its numerical rank, and the local-model
//!   decomposition for HLC models.
//! * [`learning`] – random parametrizations, forward sampling, EM and the
//!   KL divergence.
//! * [`scoring`] – BIC, Cheeseman–Stutz and their dimension-corrected
//!   variants.
//! * [`search`] – cardinality selection for LC and HLC models.
//! * [`experiments`] – seeded experiment plans and mean ± half-width summaries.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is on and plain iterators otherwise. Every result is
//! independent of scheduling.

pub mod dimension;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod learning;
pub mod model;
pub mod rng;
pub mod scoring;
pub mod search;

pub use error::{Error, Result};
pub use model::{ModelSpec, Parameters, Role, TreeStructure, Variable};
