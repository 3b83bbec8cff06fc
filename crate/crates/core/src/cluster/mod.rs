//! COPO, its spectral initializer and the k-means based baselines.

mod copo;
mod kmeans;

pub use copo::{copo, copo_cluster, estimate_state, ClusterState, CopoConfig, CopoResult};
pub use kmeans::{
    kmeans, spectral_cluster, spectral_cluster_from, spectral_init, KmeansResult,
    DEFAULT_RESTARTS, MAX_LLOYD_ITERS,
};
