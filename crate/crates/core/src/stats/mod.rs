//! Bootstrap uncertainty, effect sizes, and one-dimensional density estimates.

mod bootstrap;
mod effect;
mod kde;

pub use bootstrap::{
    bootstrap_alignment, bootstrap_alignment_kernels, replicate_sample, BootstrapConfig,
    BootstrapResult, DEFAULT_REPLICATES,
};
pub use effect::{auroc, cohens_d, mean, sample_variance};
pub use kde::{kde, scott_bandwidth, DensityCurve, GaussianKde};
