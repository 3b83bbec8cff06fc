use crate::datagen::MixtureTruth;
use crate::error::{Error, Result};
use crate::numcore::{symmetric_eigen, Matrix};

/// Relative eigenvalue floor below which the centers count as dependent.
const RANK_TOL: f64 = 1e-12;

/// Top-`K` SVD `U* Λ* V*ᵀ` of the mean matrix `Y* = Z*Θ*ᵀ`.
#[derive(Debug, Clone)]
pub struct TruthSpectral {
    /// `n × K`.
    pub u_star: Matrix,
    /// Descending singular values.
    pub lambda_star: Vec<f64>,
    /// `p × K`.
    pub v_star: Matrix,
    /// Eigenvectors `P` of `D^{1/2}ΘᵀΘD^{1/2}` with `D = diag(n_k)`; row `k`
    /// of `U*` inside cluster `k` is `P_{k,·}/√n_k`.
    pub p: Matrix,
    pub cluster_sizes: Vec<usize>,
}

/// Works through the `K × K` problem `D^{1/2}ΘᵀΘD^{1/2} = PΛ²Pᵀ`, then
/// `U* = Z D^{-1/2} P` and `V* = Θ D^{1/2} P Λ⁻¹`.
pub fn truth_spectral(truth: &MixtureTruth) -> Result<TruthSpectral> {
    let k = truth.k;
    let sizes = truth.cluster_sizes();
    if let Some(c) = sizes.iter().position(|&m| m == 0) {
        return Err(Error::Rank(format!("cluster {c} has no samples")));
    }
    let theta = &truth.centers;
    let sqrt_n: Vec<f64> = sizes.iter().map(|&m| (m as f64).sqrt()).collect();
    let gram = theta.cross();
    let m = Matrix::from_fn(k, k, |a, b| sqrt_n[a] * gram[(a, b)] * sqrt_n[b]);
    let spec = symmetric_eigen(&m)?;
    let top = spec.eigenvalues[0].max(0.0);
    if spec.eigenvalues.iter().any(|&l| !(l > RANK_TOL * top)) || top == 0.0 {
        return Err(Error::Rank(format!(
            "cluster centers are linearly dependent (eigenvalues {:?})",
            spec.eigenvalues
        )));
    }
    let lambda: Vec<f64> = spec.eigenvalues.iter().map(|l| l.sqrt()).collect();
    let p = spec.eigenvectors;

    let n = truth.n();
    let mut u_star = Matrix::zeros(n, k);
    for (i, &z) in truth.labels.iter().enumerate() {
        for j in 0..k {
            u_star[(i, j)] = p[(z, j)] / sqrt_n[z];
        }
    }
    // Θ D^{1/2} P Λ⁻¹
    let dp = Matrix::from_fn(k, k, |a, j| sqrt_n[a] * p[(a, j)] / lambda[j]);
    let v_star = theta.matmul(&dp)?;
    Ok(TruthSpectral {
        u_star,
        lambda_star: lambda,
        v_star,
        p,
        cluster_sizes: sizes,
    })
}
