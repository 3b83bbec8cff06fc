//! Spectral embeddings of the samples.

use crate::error::{Error, Result};
use crate::numcore::{hollow, top_k_eigs, Matrix};

/// Eigenvector sign tolerance passed to [`top_k_eigs`].
const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    Hollowed,
    VanillaSvd,
}

#[derive(Debug, Clone)]
pub struct Embedding {
    /// `n × K`, orthonormal columns.
    pub u: Matrix,
    /// Descending. Eigenvalues of `H(YYᵀ)` for [`EmbeddingKind::Hollowed`],
    /// singular values of `Y` for [`EmbeddingKind::VanillaSvd`].
    pub eigenvalues: Vec<f64>,
    pub kind: EmbeddingKind,
    /// Set when the hollowed Gram matrix is identically zero; `u` is then
    /// an arbitrary orthonormal basis carrying no information.
    pub degenerate: bool,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.u.cols()
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }
}

fn check_k(y: &Matrix, k: usize) -> Result<()> {
    let limit = y.rows().min(y.cols());
    if k == 0 || k > limit {
        return Err(Error::Dimension(format!(
            "k = {k} must lie in 1..={limit} for a {}x{} data matrix",
            y.rows(),
            y.cols()
        )));
    }
    Ok(())
}

/// Top-`k` eigenpairs of the diagonal-deleted Gram matrix `H(YYᵀ)`.
pub fn hollowed_embedding(y: &Matrix, k: usize) -> Result<Embedding> {
    check_k(y, k)?;
    let h = hollow(&y.gram())?;
    let degenerate = h.max_abs() == 0.0;
    let spec = top_k_eigs(&h, k, SIGN_TOL)?;
    Ok(Embedding {
        u: spec.eigenvectors,
        eigenvalues: spec.eigenvalues,
        kind: EmbeddingKind::Hollowed,
        degenerate,
    })
}

/// Top-`k` left singular vectors and singular values of `Y`, from the
/// eigendecomposition of `YYᵀ`.
pub fn svd_embedding(y: &Matrix, k: usize) -> Result<Embedding> {
    check_k(y, k)?;
    let spec = top_k_eigs(&y.gram(), k, SIGN_TOL)?;
    Ok(Embedding {
        u: spec.eigenvectors,
        eigenvalues: spec.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect(),
        kind: EmbeddingKind::VanillaSvd,
        degenerate: false,
    })
}

/// `U diag(s)` with `s = √max(λ, 0)` (hollowed) or the singular values.
pub fn scaled_rows(e: &Embedding) -> Matrix {
    let s: Vec<f64> = match e.kind {
        EmbeddingKind::Hollowed => e.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect(),
        EmbeddingKind::VanillaSvd => e.eigenvalues.clone(),
    };
    let mut out = e.u.clone();
    for i in 0..out.rows() {
        for (v, sj) in out.row_mut(i).iter_mut().zip(&s) {
            *v *= sj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::SeededRng;

    fn random(n: usize, p: usize, rng: &mut SeededRng) -> Matrix {
        Matrix::from_fn(n, p, |_, _| rng.normal())
    }

    fn projector(u: &Matrix) -> Matrix {
        u.matmul(&u.transpose()).unwrap()
    }

    fn two_cluster_mean(n1: usize, n2: usize) -> (Matrix, Vec<usize>) {
        let theta = [[3.0, 0.0, 1.0, 0.0], [0.0, 2.0, 0.0, -1.0]];
        let z: Vec<usize> = (0..n1 + n2).map(|i| usize::from(i >= n1)).collect();
        let y = Matrix::from_fn(n1 + n2, 4, |i, j| theta[z[i]][j]);
        (y, z)
    }

    #[test]
    fn orthogonal_equal_norm_rows_are_degenerate() {
        let y = Matrix::identity(4).scale(2.0);
        let e = hollowed_embedding(&y, 2).unwrap();
        assert!(e.degenerate);
        assert!(e.eigenvalues.iter().all(|&l| l == 0.0));
        assert!(scaled_rows(&e).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noiseless_hollowed_subspace_is_cluster_indicator() {
        let (y, z) = two_cluster_mean(7, 5);
        let e = hollowed_embedding(&y, 2).unwrap();
        let mut zn = Matrix::zeros(12, 2);
        for (i, &c) in z.iter().enumerate() {
            zn[(i, c)] = 1.0 / if c == 0 { 7f64 } else { 5f64 }.sqrt();
        }
        let diff = projector(&e.u).sub(&projector(&zn)).unwrap().frobenius_norm();
        assert!(diff <= 1e-6, "{diff}");
        for i in 1..7 {
            for c in 0..2 {
                assert!((e.u[(i, c)] - e.u[(0, c)]).abs() < 1e-8);
            }
        }
        let rows = scaled_rows(&e);
        let mut distinct: Vec<Vec<u64>> = Vec::new();
        for i in 0..12 {
            let r: Vec<u64> = rows.row(i).iter().map(|v| (v * 1e6).round() as i64 as u64).collect();
            if !distinct.contains(&r) {
                distinct.push(r);
            }
        }
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn scaled_rows_examples() {
        let e = Embedding {
            u: Matrix::identity(2),
            eigenvalues: vec![4.0, 1.0],
            kind: EmbeddingKind::Hollowed,
            degenerate: false,
        };
        assert_eq!(scaled_rows(&e).as_slice(), &[2.0, 0.0, 0.0, 1.0]);
        let e = Embedding {
            eigenvalues: vec![1.0, -0.3],
            ..e
        };
        assert_eq!(scaled_rows(&e).as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn svd_rank_one() {
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 0.0, 4.0, 0.0];
        let y = Matrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        let e = svd_embedding(&y, 1).unwrap();
        assert!((e.eigenvalues[0] - 15.0).abs() < 1e-12);
        for i in 0..3 {
            assert!((e.u[(i, 0)] - u[i] / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_orthogonal_has_unit_singular_values() {
        let c = 0.6;
        let s = 0.8;
        let q = Matrix::from_vec(2, 2, vec![c, -s, s, c]).unwrap();
        let e = svd_embedding(&q, 2).unwrap();
        for sv in e.eigenvalues {
            assert!((sv - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_matches_dense_reference() {
        let mut rng = SeededRng::new(4, 0);
        let y = random(8, 5, &mut rng);
        let e = svd_embedding(&y, 3).unwrap();
        let svd = nalgebra::linalg::SVD::new(y.to_nalgebra(), true, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for j in 0..3 {
            assert!((e.eigenvalues[j] - sv[j]).abs() < 1e-9);
        }
        let uref = svd.u.unwrap();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let top = Matrix::from_fn(8, 3, |i, j| uref[(i, order[j])]);
        let diff = projector(&e.u).sub(&projector(&top)).unwrap().frobenius_norm();
        assert!(diff < 1e-8);
        let utu = e.u.transpose().matmul(&e.u).unwrap();
        assert!(utu.sub(&Matrix::identity(3)).unwrap().frobenius_norm() <= 1e-8);
    }

    #[test]
    fn rotation_invariance_within_tolerance() {
        let mut rng = SeededRng::new(5, 0);
        let y = random(20, 6, &mut rng);
        let q = crate::numcore::top_k_eigs(&random(6, 6, &mut rng).gram(), 6, 1e-12)
            .unwrap()
            .eigenvectors;
        let yq = y.matmul(&q).unwrap();
        for f in [hollowed_embedding, svd_embedding] {
            let a = f(&y, 2).unwrap();
            let b = f(&yq, 2).unwrap();
            assert!(a.u.sub(&b.u).unwrap().max_abs() < 1e-10);
            for (x, w) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                assert!((x - w).abs() < 1e-10 * x.abs().max(1.0));
            }
            let d = scaled_rows(&a).sub(&scaled_rows(&b)).unwrap().max_abs();
            assert!(d < 1e-9);
        }
    }

    #[test]
    fn sign_flip_reflection_is_bit_identical() {
        let mut rng = SeededRng::new(6, 0);
        let y = random(15, 4, &mut rng);
        let flips = [1.0, -1.0, -1.0, 1.0];
        let yq = Matrix::from_fn(15, 4, |i, j| y[(i, j)] * flips[j]);
        let a = hollowed_embedding(&y, 2).unwrap();
        let b = hollowed_embedding(&yq, 2).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.eigenvalues, b.eigenvalues);
    }

    #[test]
    fn row_permutation_equivariance() {
        let mut rng = SeededRng::new(7, 0);
        let y = random(12, 5, &mut rng);
        let mut perm: Vec<usize> = (0..12).collect();
        rng.shuffle(&mut perm);
        let yp = y.select_rows(&perm);
        let a = hollowed_embedding(&y, 2).unwrap();
        let b = hollowed_embedding(&yp, 2).unwrap();
        let pa = projector(&a.u).select_rows(&perm).select_cols(&perm);
        assert!(pa.sub(&projector(&b.u)).unwrap().max_abs() < 1e-10);
        for (x, w) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - w).abs() < 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn k_out_of_range() {
        let y = Matrix::zeros(3, 2);
        assert!(matches!(hollowed_embedding(&y, 3), Err(Error::Dimension(_))));
        assert!(matches!(svd_embedding(&y, 0), Err(Error::Dimension(_))));
    }
}
