use super::{balanced_labels, check_proportions, CovSpec, Dataset, Family, MixtureTruth};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, SeededRng};

/// How component labels are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// Drawn independently from the proportions.
    #[default]
    Iid,
    /// Deterministic counts `≈ n πₖ`, in label order.
    Balanced,
}

/// Gaussian mixture: row `i` is `θ_{zᵢ} + L_{zᵢ} g` with `g` standard normal.
///
/// `centers` is `p × K`. Labels are drawn first, then rows in order.
pub fn gen_gaussian(
    n: usize,
    p: usize,
    centers: &Matrix,
    covs: &[CovSpec],
    proportions: &[f64],
    labels: LabelMode,
    rng: &mut SeededRng,
) -> Result<Dataset> {
    let k = proportions.len();
    check_proportions(proportions)?;
    if n == 0 {
        return Err(Error::Dimension("n must be positive".into()));
    }
    if centers.rows() != p || centers.cols() != k {
        return Err(Error::Dimension(format!(
            "centers are {}x{}, expected {p}x{k}",
            centers.rows(),
            centers.cols()
        )));
    }
    if covs.len() != k || covs.iter().any(|c| c.dim() != p) {
        return Err(Error::Dimension(format!(
            "expected {k} covariances of dimension {p}"
        )));
    }
    for c in covs {
        c.validate(true)?;
    }
    let factors = covs
        .iter()
        .map(CovSpec::factor)
        .collect::<Result<Vec<_>>>()?;

    let z = match labels {
        LabelMode::Iid => (0..n).map(|_| rng.categorical(proportions)).collect(),
        LabelMode::Balanced => balanced_labels(n, proportions),
    };

    let mut y = Matrix::zeros(n, p);
    let mut g = vec![0.0; p];
    let mut e = vec![0.0; p];
    for (i, &zi) in z.iter().enumerate() {
        for gj in g.iter_mut() {
            *gj = rng.normal();
        }
        factors[zi].apply(&g, &mut e);
        for (j, v) in y.row_mut(i).iter_mut().enumerate() {
            *v = centers[(j, zi)] + e[j];
        }
    }
    let truth = MixtureTruth {
        k,
        centers: centers.clone(),
        covariances: covs.to_vec(),
        labels: z,
        proportions: proportions.to_vec(),
        family: Family::Gaussian,
    };
    Ok(Dataset::assemble(y, truth))
}

/// Two sparse centers on disjoint supports of size `s`:
/// `θ₁ = c(1_s, 0)`, `θ₂ = c(0_s, 1_s, 0)` with `c = scale·α√2/√s`.
pub fn sparse_centers(p: usize, s: usize, alpha: f64, scale: f64) -> Result<Matrix> {
    if s == 0 || 2 * s > p {
        return Err(Error::Parameter(format!(
            "sparsity s = {s} must satisfy 1 <= s <= p/2 (p = {p})"
        )));
    }
    let c = scale * alpha * std::f64::consts::SQRT_2 / (s as f64).sqrt();
    Ok(Matrix::from_fn(p, 2, |j, k| {
        if j >= k * s && j < (k + 1) * s {
            c
        } else {
            0.0
        }
    }))
}

/// `θ₁ = (α 1_{p/2}, 0)`, `θ₂ = (0, α 1_{p/2})`.
pub fn hetero_centers(p: usize, alpha: f64) -> Result<Matrix> {
    super::check_even(p, "heteroskedastic generator")?;
    let h = p / 2;
    Ok(Matrix::from_fn(p, 2, |j, k| {
        if (j < h) == (k == 0) {
            alpha
        } else {
            0.0
        }
    }))
}

/// `Σ₁ = diag(high·I, low·I)`, `Σ₂ = diag(low·I, high·I)`.
pub fn hetero_covariances(p: usize, high: f64, low: f64) -> Result<Vec<CovSpec>> {
    super::check_even(p, "heteroskedastic generator")?;
    let h = p / 2;
    let d1: Vec<f64> = (0..p).map(|j| if j < h { high } else { low }).collect();
    let d2: Vec<f64> = (0..p).map(|j| if j < h { low } else { high }).collect();
    Ok(vec![CovSpec::Diagonal(d1), CovSpec::Diagonal(d2)])
}
