//! Covariance projected spectral clustering (COPO) for high-dimensional
//! anisotropic mixtures.
//!
//! The pipeline embeds the samples with the top eigenvectors of the
//! diagonal-deleted Gram matrix, initialises with k-means on the embedding,
//! and refines the labels by Mahalanobis reassignment using per-cluster
//! covariances estimated in the embedding space. Around it sit baselines,
//! ground-truth quantities for synthetic mixtures, and a Monte Carlo harness.

pub mod cluster;
pub mod datagen;
pub mod embed;
mod error;
pub mod harness;
pub mod metrics;
pub mod numcore;
pub mod oracle;
pub mod par;

pub use error::{Error, Result};
pub use numcore::{Matrix, SeededRng};

/// Cluster assignments, `0..k`.
pub type LabelVector = Vec<usize>;
