//! Random parametrizations, sampling, EM and divergence.

mod data;
mod em;
mod generate;
mod kl;

pub use data::{CompletedDataset, Dataset, Record};
pub use em::{complete_dataset, em_fit, log_likelihood, EmConfig, FitResult, RESTART_TIE_TOLERANCE};
pub use generate::{deterministic_block_parameters, random_parameters, sample_dataset};
pub use kl::kl_divergence;
