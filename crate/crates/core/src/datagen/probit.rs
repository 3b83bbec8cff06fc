use serde::{Deserialize, Serialize};

use super::sampling::{bivariate_upper_orthant, normal_upper_tail};
use super::{balanced_labels, check_even, CovSpec, Dataset, Family, MixtureTruth};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, SeededRng};

/// Distribution of the latent pair correlations `ρ_{k,j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoSampler {
    Uniform { low: f64, high: f64 },
    Fixed { rho: f64 },
}

impl Default for RhoSampler {
    fn default() -> Self {
        RhoSampler::Uniform {
            low: -0.8,
            high: 0.8,
        }
    }
}

impl RhoSampler {
    fn draw(&self, rng: &mut SeededRng) -> Result<f64> {
        let rho = match *self {
            RhoSampler::Uniform { low, high } => rng.uniform_range(low, high),
            RhoSampler::Fixed { rho } => rho,
        };
        if !(rho.abs() < 1.0) {
            return Err(Error::Parameter(format!(
                "latent correlation {rho} outside (-1, 1)"
            )));
        }
        Ok(rho)
    }
}

/// Means and 2×2 covariance of `(1{Z₁ ≥ a}, 1{Z₂ ≥ b})` with `corr(Z₁, Z₂) = ρ`.
pub fn probit_pair_moments(a: f64, b: f64, rho: f64) -> ([f64; 2], Matrix) {
    let qa = normal_upper_tail(a);
    let qb = normal_upper_tail(b);
    let both = bivariate_upper_orthant(a, b, rho);
    let c = both - qa * qb;
    let cov = Matrix::from_vec(2, 2, vec![qa * (1.0 - qa), c, c, qb * (1.0 - qb)])
        .expect("2x2 covariance");
    ([qa, qb], cov)
}

/// Threshold vectors of the two probit components.
pub fn default_probit_thresholds(p: usize) -> [Vec<f64>; 2] {
    let h = p / 2;
    let v1 = (0..p).map(|j| if j < h { 1.0 } else { 0.1 }).collect();
    let v2 = (0..p).map(|j| if j < h { 1.5 } else { -0.2 }).collect();
    [v1, v2]
}

pub fn gen_probit(n: usize, p: usize, rho: &RhoSampler, rng: &mut SeededRng) -> Result<Dataset> {
    check_even(p, "probit generator")?;
    gen_probit_with(n, p, &default_probit_thresholds(p), rho, rng)
}

/// Dichotomized Gaussian mixture. Coordinates `(2j, 2j+1)` share a latent
/// correlation drawn once per component (component-major), then labels are
/// balanced and each row thresholds `N(0, diag(A_ρ…))` at `v_{z}`.
pub fn gen_probit_with(
    n: usize,
    p: usize,
    thresholds: &[Vec<f64>],
    rho: &RhoSampler,
    rng: &mut SeededRng,
) -> Result<Dataset> {
    check_even(p, "probit generator")?;
    let k = thresholds.len();
    if n == 0 || k == 0 || thresholds.iter().any(|v| v.len() != p) {
        return Err(Error::Dimension(format!(
            "expected nonempty thresholds of length {p}"
        )));
    }
    let pairs = p / 2;
    let mut rhos = vec![vec![0.0; pairs]; k];
    for row in rhos.iter_mut() {
        for r in row.iter_mut() {
            *r = rho.draw(rng)?;
        }
    }
    let proportions = vec![1.0 / k as f64; k];
    let labels = balanced_labels(n, &proportions);

    let mut y = Matrix::zeros(n, p);
    for (i, &z) in labels.iter().enumerate() {
        let v = &thresholds[z];
        let row = y.row_mut(i);
        for j in 0..pairs {
            let r = rhos[z][j];
            let g1 = rng.normal();
            let g2 = rng.normal();
            let l1 = g1;
            let l2 = r * g1 + (1.0 - r * r).sqrt() * g2;
            row[2 * j] = if l1 >= v[2 * j] { 1.0 } else { 0.0 };
            row[2 * j + 1] = if l2 >= v[2 * j + 1] { 1.0 } else { 0.0 };
        }
    }

    let mut centers = Matrix::zeros(p, k);
    let mut covariances = Vec::with_capacity(k);
    for c in 0..k {
        let v = &thresholds[c];
        let mut blocks = Vec::with_capacity(pairs);
        for j in 0..pairs {
            let (m, cov) = probit_pair_moments(v[2 * j], v[2 * j + 1], rhos[c][j]);
            centers[(2 * j, c)] = m[0];
            centers[(2 * j + 1, c)] = m[1];
            blocks.push(cov);
        }
        covariances.push(CovSpec::BlockDiag(blocks));
    }
    let truth = MixtureTruth {
        k,
        centers,
        covariances,
        labels,
        proportions,
        family: Family::Probit,
    };
    Ok(Dataset::assemble(y, truth))
}
