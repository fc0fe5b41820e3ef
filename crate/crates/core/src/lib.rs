//! Representational alignment between language-model embeddings and sensory
//! encoders.
//!
//! The crate reads row-aligned embedding matrices ([`store`]), builds cosine
//! kernels and exact top-k neighbor lists ([`kernel`]), scores mutual-kNN
//! alignment and linear CKA, attaches bootstrap standard errors ([`stats`]),
//! and measures how far SEE- and HEAR-cued embeddings separate along a
//! visual-auditory axis ([`axis`]). [`neighbors`] produces the per-item
//! overlap reports used to inspect individual captions.
//!
//! Loops over kernel rows, bootstrap replicates, and grid points run on rayon
//! when the `parallel` feature is enabled (the default). Every result is
//! independent of the thread count.

pub mod axis;
pub mod error;
pub mod exec;
pub mod kernel;
pub mod neighbors;
pub mod stats;
pub mod store;
pub mod vqa;

pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::{
    align_matrices, cosine_kernel, cosine_kernel_with, linear_cka, linear_cka_with,
    mutual_knn_alignment, topk_neighbors, topk_neighbors_with, AlignmentScore, Kernel, NeighborIndex, DEFAULT_K,
};
pub use store::{
    load_manifest, load_matrix, validate_cell_set, write_matrix, ConditionTag, Cue,
    DatasetManifest, EmbeddingMatrix, LayerPolicy, ManifestItem, MatrixMeta, Transform,
};
