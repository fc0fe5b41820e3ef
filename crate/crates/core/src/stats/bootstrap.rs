use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::{
    cosine_kernel_with, mutual_knn_alignment, neighbors_of_sample, Kernel, DEFAULT_K,
};
use crate::store::EmbeddingMatrix;

pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub k: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Keep every replicate score in the result.
    pub keep_replicates: bool,
    pub execution: Execution,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            k: DEFAULT_K,
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            keep_replicates: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    /// Alignment on the full, unresampled data.
    pub point_estimate: f64,
    /// Sample standard deviation (denominator `B - 1`) of the replicate scores.
    pub standard_error: f64,
    pub replicate_mean: f64,
    pub replicates: usize,
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicate_scores: Option<Vec<f64>>,
}

/// Row indices drawn with replacement for replicate `replicate`.
///
/// Each replicate owns ChaCha stream `replicate` under key `seed`, so the draw
/// depends only on `(seed, replicate, n)` and never on scheduling.
pub fn replicate_sample(seed: u64, replicate: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn bootstrap_alignment(
    xa: &EmbeddingMatrix,
    xb: &EmbeddingMatrix,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    if xa.rows() != xb.rows() {
        return Err(Error::RowCountMismatch { expected: xa.rows(), found: xb.rows() });
    }
    let ka = cosine_kernel_with(xa, config.execution)?;
    let kb = cosine_kernel_with(xb, config.execution)?;
    bootstrap_alignment_kernels(&ka, &kb, config)
}

/// Bootstrap over paired rows of two precomputed kernels.
///
/// A replicate's kernel on the resampled rows is the submatrix of the full
/// kernel at the drawn indices, so kernels are built once and each replicate
/// only reruns neighbor selection.
pub fn bootstrap_alignment_kernels(
    ka: &Kernel,
    kb: &Kernel,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    let n = ka.n();
    if kb.n() != n {
        return Err(Error::RowCountMismatch { expected: n, found: kb.n() });
    }
    if config.replicates < 2 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least 2 replicates, got {}",
            config.replicates
        )));
    }
    let k = config.k;
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, n });
    }

    let identity: Vec<usize> = (0..n).collect();
    let full_a = neighbors_of_sample(ka, &identity, k, config.execution)?;
    let full_b = neighbors_of_sample(kb, &identity, k, config.execution)?;
    let point = mutual_knn_alignment(&full_a, &full_b)?.value;

    let scores: Vec<f64> = config
        .execution
        .map_range(config.replicates, |b| -> Result<f64> {
            let sample = replicate_sample(config.seed, b, n);
            let na = neighbors_of_sample(ka, &sample, k, Execution::Sequential)?;
            let nb = neighbors_of_sample(kb, &sample, k, Execution::Sequential)?;
            Ok(mutual_knn_alignment(&na, &nb)?.value)
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let count = scores.len() as f64;
    let replicate_mean = scores.iter().sum::<f64>() / count;
    let ss: f64 = scores.iter().map(|s| (s - replicate_mean).powi(2)).sum();
    let standard_error = (ss / (count - 1.0)).sqrt();

    Ok(BootstrapResult {
        point_estimate: point,
        standard_error,
        replicate_mean,
        replicates: config.replicates,
        seed: config.seed,
        k,
        n,
        replicate_scores: config.keep_replicates.then_some(scores),
    })
}
