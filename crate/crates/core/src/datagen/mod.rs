//! Seeded synthetic mixture generators and structured covariances.

mod counts;
mod cov;
mod gaussian;
mod ising;
mod probit;
pub mod sampling;

pub use counts::{gen_gamma, gen_negbin, GAMMA_PARAMS, NEGBIN_PARAMS};
pub use cov::{CovFactor, CovSpec};
pub use gaussian::{
    gen_gaussian, hetero_centers, hetero_covariances, sparse_centers, LabelMode,
};
pub use ising::{
    gen_ising, gen_ising_with, ising_block_moments, ising_interaction, default_ising_blocks, spins,
    IsingBlock,
};
pub use probit::{
    gen_probit, gen_probit_with, default_probit_thresholds, probit_pair_moments, RhoSampler,
};

use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::LabelVector;

/// Distribution family of the mixture components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Ising,
    Probit,
    Gamma,
    NegBin,
}

/// Ground truth of a generated mixture.
#[derive(Debug, Clone)]
pub struct MixtureTruth {
    pub k: usize,
    /// `p × K`, column `k` is the center of cluster `k`.
    pub centers: Matrix,
    pub covariances: Vec<CovSpec>,
    pub labels: LabelVector,
    pub proportions: Vec<f64>,
    pub family: Family,
}

impl MixtureTruth {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.centers.rows()
    }

    pub fn center(&self, k: usize) -> Vec<f64> {
        self.centers.col(k)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &z in &self.labels {
            sizes[z] += 1;
        }
        sizes
    }

    /// `Z* Θ*ᵀ`, the `n × p` mean matrix.
    pub fn mean_matrix(&self) -> Matrix {
        let p = self.p();
        let mut out = Matrix::zeros(self.n(), p);
        for (i, &z) in self.labels.iter().enumerate() {
            let row = out.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.centers[(j, z)];
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: Matrix,
    pub truth: MixtureTruth,
    /// Realized noise `Y − Z*Θ*ᵀ`.
    pub noise: Option<Matrix>,
}

impl Dataset {
    pub(crate) fn assemble(y: Matrix, truth: MixtureTruth) -> Dataset {
        let mut noise = y.clone();
        for (i, &z) in truth.labels.iter().enumerate() {
            for (j, v) in noise.row_mut(i).iter_mut().enumerate() {
                *v -= truth.centers[(j, z)];
            }
        }
        Dataset {
            y,
            truth,
            noise: Some(noise),
        }
    }

    /// Reorders samples so that new row `i` is old row `perm[i]`.
    pub fn permute_rows(&mut self, perm: &[usize]) {
        self.y = self.y.select_rows(perm);
        if let Some(e) = &self.noise {
            self.noise = Some(e.select_rows(perm));
        }
        self.truth.labels = perm.iter().map(|&i| self.truth.labels[i]).collect();
    }
}

/// Deterministic labels: the first `round(n π₁)` rows in cluster 0 and so on,
/// rounding remainders to the lowest indices.
pub fn balanced_labels(n: usize, proportions: &[f64]) -> LabelVector {
    let k = proportions.len();
    let mut counts: Vec<usize> = proportions
        .iter()
        .map(|&w| (w * n as f64).floor() as usize)
        .collect();
    let mut assigned: usize = counts.iter().sum();
    let mut idx = 0;
    while assigned < n {
        if proportions[idx % k] > 0.0 {
            counts[idx % k] += 1;
            assigned += 1;
        }
        idx += 1;
    }
    counts
        .iter()
        .enumerate()
        .flat_map(|(c, &m)| std::iter::repeat_n(c, m))
        .collect()
}

pub(crate) fn check_proportions(proportions: &[f64]) -> Result<()> {
    if proportions.is_empty() {
        return Err(Error::Parameter("no mixture components".into()));
    }
    if proportions.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::Parameter("proportions must be nonnegative".into()));
    }
    let total: f64 = proportions.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "proportions sum to {total}, expected 1"
        )));
    }
    Ok(())
}

pub(crate) fn check_even(p: usize, what: &str) -> Result<()> {
    if p == 0 || p % 2 != 0 {
        return Err(Error::Dimension(format!("{what} needs an even p, got {p}")));
    }
    Ok(())
}
