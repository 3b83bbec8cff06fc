use super::{balanced_labels, CovSpec, Dataset, Family, MixtureTruth};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, SeededRng};

/// Exact law of one 4-spin block, `P(x) ∝ exp(xᵀGx + vᵀx)` over `{−1, 1}⁴`.
///
/// State `s` encodes `x_j = +1` when bit `j` of `s` is set.
#[derive(Debug, Clone)]
pub struct IsingBlock {
    pub probs: [f64; 16],
    cdf: [f64; 16],
    pub mean: [f64; 4],
    pub cov: Matrix,
}

pub fn spins(state: usize) -> [f64; 4] {
    std::array::from_fn(|j| if state >> j & 1 == 1 { 1.0 } else { -1.0 })
}

/// `G(i, j) = c^{|i−j|}` off the diagonal, zero on it.
pub fn ising_interaction(c: f64) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            if i == j {
                0.0
            } else {
                c.powi((i as i32 - j as i32).abs())
            }
        })
    })
}

pub fn ising_block_moments(g: &[[f64; 4]; 4], v: &[f64; 4]) -> IsingBlock {
    let mut energy = [0.0; 16];
    for (s, e) in energy.iter_mut().enumerate() {
        let x = spins(s);
        let mut q = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                q += x[i] * g[i][j] * x[j];
            }
            q += v[i] * x[i];
        }
        *e = q;
    }
    let top = energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = energy.iter().map(|e| (e - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: [f64; 16] = std::array::from_fn(|s| weights[s] / z);

    let mut cdf = [0.0; 16];
    let mut acc = 0.0;
    for s in 0..16 {
        acc += probs[s];
        cdf[s] = acc;
    }
    cdf[15] = 1.0;

    let mut mean = [0.0; 4];
    for (s, &pr) in probs.iter().enumerate() {
        let x = spins(s);
        for j in 0..4 {
            mean[j] += pr * x[j];
        }
    }
    let mut cov = Matrix::zeros(4, 4);
    for (s, &pr) in probs.iter().enumerate() {
        let x = spins(s);
        for a in 0..4 {
            for b in 0..4 {
                cov[(a, b)] += pr * (x[a] - mean[a]) * (x[b] - mean[b]);
            }
        }
    }
    IsingBlock {
        probs,
        cdf,
        mean,
        cov,
    }
}

impl IsingBlock {
    fn sample(&self, rng: &mut SeededRng) -> usize {
        let u = rng.uniform();
        self.cdf.iter().position(|&c| u < c).unwrap_or(15)
    }
}

/// The two components used in the binary-mixture experiments.
pub fn default_ising_blocks() -> [IsingBlock; 2] {
    [
        ising_block_moments(&ising_interaction(0.1), &[-1.0; 4]),
        ising_block_moments(&ising_interaction(0.3), &[-3.0, -3.0, -1.0, -1.0]),
    ]
}

/// Two-component Ising mixture with balanced labels (first half cluster 0).
pub fn gen_ising(n: usize, p: usize, rng: &mut SeededRng) -> Result<Dataset> {
    gen_ising_with(n, p, &default_ising_blocks(), rng)
}

/// Ising mixture with arbitrary per-component block laws; every block of
/// four coordinates in a row is drawn independently by inverse CDF.
pub fn gen_ising_with(
    n: usize,
    p: usize,
    components: &[IsingBlock],
    rng: &mut SeededRng,
) -> Result<Dataset> {
    if p == 0 || p % 4 != 0 {
        return Err(Error::Dimension(format!(
            "Ising generator needs p divisible by 4, got {p}"
        )));
    }
    if n == 0 || components.is_empty() {
        return Err(Error::Dimension("n and K must be positive".into()));
    }
    let k = components.len();
    let proportions = vec![1.0 / k as f64; k];
    let labels = balanced_labels(n, &proportions);
    let blocks = p / 4;

    let mut y = Matrix::zeros(n, p);
    for (i, &z) in labels.iter().enumerate() {
        let row = y.row_mut(i);
        for l in 0..blocks {
            let x = spins(components[z].sample(rng));
            row[4 * l..4 * l + 4].copy_from_slice(&x);
        }
    }

    let centers = Matrix::from_fn(p, k, |j, c| components[c].mean[j % 4]);
    let covariances = components
        .iter()
        .map(|c| CovSpec::BlockDiag(vec![c.cov.clone(); blocks]))
        .collect();
    let truth = MixtureTruth {
        k,
        centers,
        covariances,
        labels,
        proportions,
        family: Family::Ising,
    };
    Ok(Dataset::assemble(y, truth))
}
