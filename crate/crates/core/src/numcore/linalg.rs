use crate::error::{Error, Result};

use super::matrix::Matrix;

/// Relative asymmetry tolerated by [`top_k_eigs`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSpectrum {
    pub eigenvalues: Vec<f64>,
    /// One eigenvector per column.
    pub eigenvectors: Matrix,
}

/// Zeroes the diagonal of a square matrix.
pub fn hollow(s: &Matrix) -> Result<Matrix> {
    if !s.is_square() {
        return Err(Error::Dimension(format!(
            "hollow needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let mut out = s.clone();
    for i in 0..s.rows() {
        out[(i, i)] = 0.0;
    }
    Ok(out)
}

/// Top-`k` eigenpairs of a symmetric matrix by algebraic value.
///
/// Computes the full dense decomposition and keeps the `k` largest pairs.
/// Equal eigenvalues keep the solver's order. Each eigenvector is flipped so
/// that its first component with magnitude above `tol` is positive.
pub fn top_k_eigs(s: &Matrix, k: usize, tol: f64) -> Result<SymmetricSpectrum> {
    if !s.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if k == 0 || k > s.rows() {
        return Err(Error::Dimension(format!(
            "k = {k} out of range for a {0}x{0} matrix",
            s.rows()
        )));
    }
    if !s.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::Contract("matrix is not symmetric".into()));
    }
    let n = s.rows();
    let eig = nalgebra::SymmetricEigen::new(s.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);

    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vecs = Matrix::zeros(n, k);
    for (c, &j) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(j);
        let sign = col
            .iter()
            .find(|v| v.abs() > tol)
            .map_or(1.0, |v| v.signum());
        for i in 0..n {
            vecs[(i, c)] = sign * col[i];
        }
    }
    Ok(SymmetricSpectrum {
        eigenvalues,
        eigenvectors: vecs,
    })
}

/// Full spectrum, descending.
pub fn symmetric_eigen(s: &Matrix) -> Result<SymmetricSpectrum> {
    top_k_eigs(s, s.rows(), 1e-12)
}

/// Cholesky factor `L` (lower triangular) with `L Lᵀ = S`.
pub fn chol_spd(s: &Matrix) -> Result<Matrix> {
    if !s.is_square() {
        return Err(Error::Dimension(format!(
            "Cholesky needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn forward_sub(l: &Matrix, b: &mut [f64]) {
    for i in 0..l.rows() {
        let mut v = b[i];
        for k in 0..i {
            v -= l[(i, k)] * b[k];
        }
        b[i] = v / l[(i, i)];
    }
}

/// Solves `Lᵀ x = b` in place for lower-triangular `L`.
pub fn backward_sub_t(l: &Matrix, b: &mut [f64]) {
    let n = l.rows();
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= l[(k, i)] * b[k];
        }
        b[i] = v / l[(i, i)];
    }
}

/// Solves `S x = b` given the Cholesky factor of `S`.
pub fn chol_solve_vec(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    forward_sub(l, &mut x);
    backward_sub_t(l, &mut x);
    x
}

/// Solves `S X = B` for SPD `S`.
pub fn spd_solve(s: &Matrix, b: &Matrix) -> Result<Matrix> {
    if s.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "system {}x{} with right-hand side {}x{}",
            s.rows(),
            s.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let l = chol_spd(s)?;
    let mut x = Matrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let col = chol_solve_vec(&l, &b.col(j));
        for (i, v) in col.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(x)
}

pub fn spd_inverse(s: &Matrix) -> Result<Matrix> {
    spd_solve(s, &Matrix::identity(s.rows()))
}

/// `log |S|` for SPD `S`, from the Cholesky diagonal.
pub fn log_det_spd(s: &Matrix) -> Result<f64> {
    let l = chol_spd(s)?;
    Ok(2.0 * l.diag().iter().map(|d| d.ln()).sum::<f64>())
}

/// `xᵀ S⁻¹ x` given the Cholesky factor of `S`.
pub fn mahalanobis_sq(l: &Matrix, x: &[f64]) -> f64 {
    let mut y = x.to_vec();
    forward_sub(l, &mut y);
    y.iter().map(|v| v * v).sum()
}
