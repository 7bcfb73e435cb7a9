//! Holistic trace features.
//!
//! Each trace line is embedded by an [`EmbeddingProvider`], the per-line
//! matrix is reduced with PCA keeping the fewest components that explain a
//! threshold share of variance, and ragged per-run results are padded to a
//! common length.

mod matrix_file;
mod pca;
mod provider;
mod stats;

use thiserror::Error;

use crate::linalg::LinalgError;

pub use matrix_file::{explained_ratios, MatrixFile};
pub use pca::{pca_reduce, sree_component_count, PcaModel, ReducedEmbedding};
pub use provider::{
    embed_lines, BridgeClient, BridgeEndpoint, EmbeddingMatrix, EmbeddingProvider, Provenance, TestEmbedder,
};
pub use stats::{flatten_and_concat, pad_and_impute, wilks_lambda, Padded, WilksResult};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding provider error: {0}")]
    ProviderError(String),
    #[error("provider protocol violation: {0}")]
    Protocol(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrices have different column counts: {expected} and {found}")]
    MixedDims { expected: usize, found: usize },
    #[error("all eigenvalues are zero")]
    AllZeroVariance,
    #[error("{requested} components requested but the data has rank {rank}")]
    RankDeficient { requested: usize, rank: usize },
    #[error("scatter matrix is singular")]
    SingularScatter,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix file: {0}")]
    MatrixFormat(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
