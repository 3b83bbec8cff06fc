use super::TruthSpectral;
use crate::datagen::Dataset;
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::numcore::{norm2, Matrix};

pub const REPORT_QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    /// `‖U_iO − U*_i − ℒ_i − bias_i‖` per row, `O` the orthogonal polar
    /// factor of `UᵀU*`.
    pub residual: Vec<f64>,
    /// `‖ℒ_i‖` per row.
    pub linear_norm: Vec<f64>,
    /// `residual / linear_norm`; infinite where `ℒ_i = 0 ≠ r_i`.
    pub relative: Vec<f64>,
    /// Same ratio with `O` replaced by `UᵀU*` itself.
    pub relative_gram_aligned: Vec<f64>,
    pub median_relative: f64,
    pub median_linear_norm: f64,
    pub median_relative_gram_aligned: f64,
    /// `(q, value)` for [`REPORT_QUANTILES`] of `relative`.
    pub quantiles: Vec<(f64, f64)>,
}

/// Linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi || v[lo] == v[hi] {
        return v[lo];
    }
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

fn ratio(r: f64, l: f64) -> f64 {
    if l > 0.0 {
        r / l
    } else if r == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Orthogonal polar factor `A Bᵀ` of `M = A S Bᵀ`.
fn polar(m: &Matrix) -> Matrix {
    let svd = nalgebra::linalg::SVD::new(m.to_nalgebra(), true, true);
    let a = svd.u.expect("requested");
    let bt = svd.v_t.expect("requested");
    Matrix::from_nalgebra(&(a * bt))
}

/// Compares the embedded rows with their first-order expansion
/// `U*_i + ℒ_i + bias_i` where
/// `ℒ_i = E_iV*Λ⁻¹ + H(EEᵀ)_{i,·}U*Λ⁻²`.
pub fn linearization_diagnostic(
    data: &Dataset,
    ts: &TruthSpectral,
    e: &Embedding,
) -> Result<DiagnosticReport> {
    let noise = data
        .noise
        .as_ref()
        .ok_or_else(|| Error::Unsupported("diagnostic needs the stored noise matrix".into()))?;
    let truth = &data.truth;
    let (n, k) = (truth.n(), truth.k);
    if e.n() != n || e.k() != k || noise.rows() != n || noise.cols() != truth.p() {
        return Err(Error::Dimension(format!(
            "embedding {}x{}, noise {}x{}, truth n = {n}, K = {k}",
            e.n(),
            e.k(),
            noise.rows(),
            noise.cols()
        )));
    }
    let us = &ts.u_star;
    let lam = &ts.lambda_star;

    // H(EEᵀ)U* = E(EᵀU*) − diag(‖E_a‖²)U*
    let mut hu = noise.matmul(&noise.transpose().matmul(us)?)?;
    for a in 0..n {
        let sq: f64 = noise.row(a).iter().map(|v| v * v).sum();
        for j in 0..k {
            hu[(a, j)] -= sq * us[(a, j)];
        }
    }
    let ev = noise.matmul(&ts.v_star)?;
    let lin = Matrix::from_fn(n, k, |i, j| ev[(i, j)] / lam[j] + hu[(i, j)] / (lam[j] * lam[j]));

    // U*ᵀ(H(EEᵀ) + EM*ᵀ)U* with EM*ᵀU* = EΘ(ZᵀU*)
    let zu = Matrix::from_fn(k, k, |c, j| {
        (0..n)
            .filter(|&a| truth.labels[a] == c)
            .map(|a| us[(a, j)])
            .sum()
    });
    let emu = noise.matmul(&truth.centers.matmul(&zu)?)?;
    let inner = us.transpose().matmul(&hu.add(&emu)?)?;
    let first = us.matmul(&inner)?;

    // (I − U*U*ᵀ) diag(‖M*_a‖²) U*
    let sq_center: Vec<f64> = (0..k)
        .map(|c| truth.centers.col(c).iter().map(|v| v * v).sum())
        .collect();
    let du = Matrix::from_fn(n, k, |a, j| sq_center[truth.labels[a]] * us[(a, j)]);
    let second = du.sub(&us.matmul(&us.transpose().matmul(&du)?)?)?;
    let bias = Matrix::from_fn(n, k, |i, j| -(first[(i, j)] + second[(i, j)]) / (lam[j] * lam[j]));

    let utus = e.u.transpose().matmul(us)?;
    let aligned = e.u.matmul(&utus)?;
    let signed = e.u.matmul(&polar(&utus))?;

    let mut residual = Vec::with_capacity(n);
    let mut linear_norm = Vec::with_capacity(n);
    let mut relative = Vec::with_capacity(n);
    let mut relative_gram_aligned = Vec::with_capacity(n);
    for i in 0..n {
        let off = |m: &Matrix| -> Vec<f64> {
            (0..k)
                .map(|j| m[(i, j)] - us[(i, j)] - lin[(i, j)] - bias[(i, j)])
                .collect()
        };
        let r = norm2(&off(&signed));
        let l = norm2(lin.row(i));
        residual.push(r);
        linear_norm.push(l);
        relative.push(ratio(r, l));
        relative_gram_aligned.push(ratio(norm2(&off(&aligned)), l));
    }
    Ok(DiagnosticReport {
        median_relative: quantile(&relative, 0.5),
        median_linear_norm: quantile(&linear_norm, 0.5),
        median_relative_gram_aligned: quantile(&relative_gram_aligned, 0.5),
        quantiles: REPORT_QUANTILES
            .iter()
            .map(|&q| (q, quantile(&relative, q)))
            .collect(),
        residual,
        linear_norm,
        relative,
        relative_gram_aligned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_gaussian, sparse_centers, CovSpec, LabelMode};
    use crate::embed::hollowed_embedding;
    use crate::numcore::SeededRng;
    use crate::oracle::truth_spectral;

    fn dataset(noise_scale: f64, seed: u64) -> Dataset {
        let (n, p) = (120, 300);
        let centers = sparse_centers(p, 20, 6.0, 1.0).unwrap();
        let covs = vec![CovSpec::Diagonal(vec![noise_scale * noise_scale; p]); 2];
        let mut rng = SeededRng::new(seed, 0);
        gen_gaussian(n, p, &centers, &covs, &[0.5, 0.5], LabelMode::Balanced, &mut rng).unwrap()
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.25), 1.25);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn zero_noise_reports_bias_only() {
        let mut d = dataset(1.0, 4);
        d.y = d.truth.mean_matrix();
        d.noise = Some(Matrix::zeros(d.y.rows(), d.y.cols()));
        let ts = truth_spectral(&d.truth).unwrap();
        let e = hollowed_embedding(&d.y, 2).unwrap();
        let r = linearization_diagnostic(&d, &ts, &e).unwrap();
        assert!(r.linear_norm.iter().all(|&l| l == 0.0));
        assert!(r.residual.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn missing_noise_is_unsupported() {
        let mut d = dataset(1.0, 5);
        d.noise = None;
        let ts = truth_spectral(&d.truth).unwrap();
        let e = hollowed_embedding(&d.y, 2).unwrap();
        assert!(matches!(
            linearization_diagnostic(&d, &ts, &e),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn linear_term_scales_with_noise() {
        let full = dataset(1.0, 6);
        let half = dataset(0.5, 6);
        let med = |d: &Dataset| {
            let ts = truth_spectral(&d.truth).unwrap();
            let e = hollowed_embedding(&d.y, 2).unwrap();
            linearization_diagnostic(d, &ts, &e).unwrap().median_linear_norm
        };
        let ratio = med(&half) / med(&full);
        assert!((0.4..=0.6).contains(&ratio), "{ratio}");
    }
}
