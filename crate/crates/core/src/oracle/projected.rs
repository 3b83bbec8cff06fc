use super::TruthSpectral;
use crate::datagen::MixtureTruth;
use crate::error::{Error, Result};
use crate::numcore::{spd_solve, Matrix};

/// Population quantities of the embedded rows.
#[derive(Debug, Clone)]
pub struct ProjectedParams {
    /// `K × K`, row `k` is `w_k = V*ᵀθ_k`.
    pub w: Matrix,
    pub s_mod: Vec<Matrix>,
    pub s_exc: Vec<Matrix>,
    pub s_star: Vec<Matrix>,
    /// `ω_{a,b} = (w_a − w_b)ᵀ S_a*⁻¹ (w_a − w_b)`.
    pub omega: Matrix,
    pub beta: f64,
    pub nu: f64,
    pub kappa: f64,
    /// Largest Frobenius change of `S^exc_k` over the choice of the
    /// representative row in cluster `k`.
    pub exc_rep_deviation: f64,
}

impl ProjectedParams {
    pub fn k(&self) -> usize {
        self.w.rows()
    }

    pub fn center(&self, k: usize) -> Vec<f64> {
        self.w.row(k).to_vec()
    }
}

/// `a ↦ Λ⁻¹ a Λ⁻¹`.
fn sandwich(a: &Matrix, lambda: &[f64]) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] / (lambda[i] * lambda[j]))
}

fn outer(v: &[f64]) -> Matrix {
    Matrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j])
}

/// Projected centers and covariances.
///
/// `S^mod_k = V*ᵀΣ_kV*` and, for a representative row `i` of cluster `k`
/// (the first one),
/// `S^exc_k = Λ⁻¹[Σ_c Tr(Σ_cΣ_k)·Pᵀe_ce_cᵀP − Tr(Σ_k²)·U*_iᵀU*_i]Λ⁻¹`,
/// the closed form of `Λ⁻¹U*ᵀ E[H(EEᵀ)_{·,i}H(EEᵀ)_{i,·}] U*Λ⁻¹`.
pub fn projected_params(truth: &MixtureTruth, ts: &TruthSpectral) -> Result<ProjectedParams> {
    let k = truth.k;
    let lambda = &ts.lambda_star;
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Rank("zero singular value in truth SVD".into()));
    }
    let w = truth.centers.transpose().matmul(&ts.v_star)?;

    let mut trace = Matrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let t = truth.covariances[a].trace_product(&truth.covariances[b])?;
            trace[(a, b)] = t;
            trace[(b, a)] = t;
        }
    }

    let mut s_mod = Vec::with_capacity(k);
    let mut s_exc = Vec::with_capacity(k);
    let mut deviation: f64 = 0.0;
    for c in 0..k {
        let sm = truth.covariances[c].project(&ts.v_star)?;
        s_mod.push(symmetrize(&sm));

        let mut inner = Matrix::zeros(k, k);
        for a in 0..k {
            let row = ts.p.row(a);
            inner = inner.add(&outer(row).scale(trace[(a, c)]))?;
        }
        let members: Vec<usize> = (0..truth.n()).filter(|&i| truth.labels[i] == c).collect();
        let rep = outer(ts.u_star.row(members[0]));
        let exc = inner.sub(&rep.scale(trace[(c, c)]))?;
        s_exc.push(symmetrize(&sandwich(&exc, lambda)));
        for &i in &members[1..] {
            let d = outer(ts.u_star.row(i)).sub(&rep)?;
            deviation = deviation.max(sandwich(&d, lambda).scale(trace[(c, c)]).frobenius_norm());
        }
    }
    let s_star: Vec<Matrix> = s_mod
        .iter()
        .zip(&s_exc)
        .map(|(a, b)| a.add(b))
        .collect::<Result<_>>()?;

    let mut omega = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let diff: Vec<f64> = (0..k).map(|j| w[(a, j)] - w[(b, j)]).collect();
            let rhs = Matrix::from_vec(k, 1, diff.clone())?;
            let sol = spd_solve(&s_star[a], &rhs)?;
            omega[(a, b)] = diff.iter().zip(sol.col(0)).map(|(x, y)| x * y).sum();
        }
    }

    let n = truth.n() as f64;
    let sizes = &ts.cluster_sizes;
    let kf = k as f64;
    let max_n = *sizes.iter().max().unwrap() as f64;
    let min_n = *sizes.iter().min().unwrap() as f64;
    let beta = (kf * max_n / n).max(n / (kf * min_n));
    let off: Vec<f64> = (0..k)
        .flat_map(|a| (0..k).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| omega[(a, b)].sqrt())
        .collect();
    let nu = if off.is_empty() {
        1.0
    } else {
        off.iter().cloned().fold(f64::MIN, f64::max) / off.iter().cloned().fold(f64::MAX, f64::min)
    };
    let kappa = lambda[0] / lambda[k - 1];

    Ok(ProjectedParams {
        w,
        s_mod,
        s_exc,
        s_star,
        omega,
        beta,
        nu,
        kappa,
        exc_rep_deviation: deviation,
    })
}

fn symmetrize(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{CovSpec, Family};
    use crate::oracle::truth_spectral;

    fn isotropic(n: usize, p: usize) -> MixtureTruth {
        let centers = Matrix::from_fn(p, 2, |j, k| if j == k { 3.0 } else { 0.0 });
        MixtureTruth {
            k: 2,
            centers,
            covariances: vec![CovSpec::identity(p); 2],
            labels: (0..n).map(|i| usize::from(i >= n / 2)).collect(),
            proportions: vec![0.5, 0.5],
            family: Family::Gaussian,
        }
    }

    #[test]
    fn isotropic_excess_closed_form() {
        let (n, p) = (20, 30);
        let t = isotropic(n, p);
        let ts = truth_spectral(&t).unwrap();
        let pp = projected_params(&t, &ts).unwrap();
        // canonical basis: U* columns are the normalized indicators
        let l2 = ts.lambda_star[0] * ts.lambda_star[0];
        for c in 0..2 {
            let rot = ts.p.transpose();
            let canon = rot.transpose().matmul(&pp.s_exc[c].matmul(&rot).unwrap()).unwrap();
            let canon = Matrix::from_fn(2, 2, |a, b| canon[(a, b)] * l2 / p as f64);
            let expect = Matrix::from_fn(2, 2, |a, b| {
                let id = if a == b { 1.0 } else { 0.0 };
                let e = if a == c && b == c { 2.0 / n as f64 } else { 0.0 };
                id - e
            });
            assert!(canon.sub(&expect).unwrap().max_abs() < 1e-12, "{canon:?}");
        }
        assert_eq!(pp.exc_rep_deviation, 0.0);
        assert_eq!(pp.omega[(0, 0)], 0.0);
        assert!(pp.omega[(0, 1)] > 0.0);
        assert!((pp.beta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn star_is_sum() {
        let t = isotropic(10, 6);
        let ts = truth_spectral(&t).unwrap();
        let pp = projected_params(&t, &ts).unwrap();
        for c in 0..2 {
            let s = pp.s_mod[c].add(&pp.s_exc[c]).unwrap();
            assert_eq!(s, pp.s_star[c]);
        }
    }

    #[test]
    fn structured_projection_matches_dense() {
        let mut t = isotropic(10, 6);
        t.covariances = vec![
            CovSpec::Diagonal(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            CovSpec::Diagonal(vec![6.0, 5.0, 4.0, 3.0, 2.0, 1.0]),
        ];
        let ts = truth_spectral(&t).unwrap();
        let pp = projected_params(&t, &ts).unwrap();
        for c in 0..2 {
            let dense = ts
                .v_star
                .transpose()
                .matmul(&t.covariances[c].to_dense().matmul(&ts.v_star).unwrap())
                .unwrap();
            assert!(dense.sub(&pp.s_mod[c]).unwrap().max_abs() < 1e-12);
        }
    }
}
