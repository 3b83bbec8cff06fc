use crate::error::{Error, Result};
use crate::numcore::{chol_solve_vec, chol_spd, log_det_spd, Matrix};

/// Structured covariance matrix of a mixture component.
#[derive(Debug, Clone, PartialEq)]
pub enum CovSpec {
    /// Independent coordinates with the given variances.
    Diagonal(Vec<f64>),
    /// Consecutive dense blocks along the diagonal.
    BlockDiag(Vec<Matrix>),
    Dense(Matrix),
}

/// Precomputed square-root factor used for sampling.
#[derive(Debug, Clone)]
pub enum CovFactor {
    Diagonal(Vec<f64>),
    Blocks(Vec<Matrix>),
    Dense(Matrix),
}

impl CovSpec {
    pub fn identity(p: usize) -> Self {
        CovSpec::Diagonal(vec![1.0; p])
    }

    pub fn dim(&self) -> usize {
        match self {
            CovSpec::Diagonal(d) => d.len(),
            CovSpec::BlockDiag(blocks) => blocks.iter().map(Matrix::rows).sum(),
            CovSpec::Dense(m) => m.rows(),
        }
    }

    /// Checks shape and symmetry; with `require_spd`, positive definiteness too.
    pub fn validate(&self, require_spd: bool) -> Result<()> {
        match self {
            CovSpec::Diagonal(d) => {
                if d.is_empty() {
                    return Err(Error::Dimension("empty diagonal covariance".into()));
                }
                for (i, &v) in d.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 || (require_spd && v == 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: v });
                    }
                }
            }
            CovSpec::BlockDiag(blocks) => {
                if blocks.is_empty() {
                    return Err(Error::Dimension("no covariance blocks".into()));
                }
                let mut offset = 0;
                for b in blocks {
                    if !b.is_symmetric(1e-12) {
                        return Err(Error::Contract(format!(
                            "covariance block at offset {offset} is not symmetric"
                        )));
                    }
                    if require_spd {
                        chol_spd(b).map_err(|e| shift_pivot(e, offset))?;
                    }
                    offset += b.rows();
                }
            }
            CovSpec::Dense(m) => {
                if !m.is_symmetric(1e-12) {
                    return Err(Error::Contract("covariance is not symmetric".into()));
                }
                if require_spd {
                    chol_spd(m)?;
                }
            }
        }
        Ok(())
    }

    pub fn factor(&self) -> Result<CovFactor> {
        Ok(match self {
            CovSpec::Diagonal(d) => {
                self.validate(false)?;
                CovFactor::Diagonal(d.iter().map(|v| v.sqrt()).collect())
            }
            CovSpec::BlockDiag(blocks) => {
                let mut out = Vec::with_capacity(blocks.len());
                let mut offset = 0;
                for b in blocks {
                    out.push(chol_spd(b).map_err(|e| shift_pivot(e, offset))?);
                    offset += b.rows();
                }
                CovFactor::Blocks(out)
            }
            CovSpec::Dense(m) => CovFactor::Dense(chol_spd(m)?),
        })
    }

    /// Entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            CovSpec::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    0.0
                }
            }
            CovSpec::BlockDiag(blocks) => {
                let mut offset = 0;
                for b in blocks {
                    let end = offset + b.rows();
                    if i < end {
                        return if j >= offset && j < end {
                            b[(i - offset, j - offset)]
                        } else {
                            0.0
                        };
                    }
                    offset = end;
                }
                0.0
            }
            CovSpec::Dense(m) => m[(i, j)],
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let p = self.dim();
        Matrix::from_fn(p, p, |i, j| self.entry(i, j))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entry(i, i)).collect()
    }

    /// Start offsets of the blocks, plus the total dimension at the end.
    fn boundaries(&self) -> Vec<usize> {
        match self {
            CovSpec::Diagonal(d) => (0..=d.len()).collect(),
            CovSpec::BlockDiag(blocks) => {
                let mut out = vec![0];
                for b in blocks {
                    out.push(out.last().unwrap() + b.rows());
                }
                out
            }
            CovSpec::Dense(m) => vec![0, m.rows()],
        }
    }

    /// Coarsest partition into ranges on which both matrices are block diagonal.
    pub fn common_partition(&self, other: &CovSpec) -> Vec<(usize, usize)> {
        let a = self.boundaries();
        let b = other.boundaries();
        let mut shared = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        shared.windows(2).map(|w| (w[0], w[1] - w[0])).collect()
    }

    /// Dense submatrix on `start..start + len`.
    pub fn sub_block(&self, start: usize, len: usize) -> Matrix {
        Matrix::from_fn(len, len, |i, j| self.entry(start + i, start + j))
    }

    /// `Tr(Σ_self Σ_other)`.
    pub fn trace_product(&self, other: &CovSpec) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "trace product of {}- and {}-dimensional covariances",
                self.dim(),
                other.dim()
            )));
        }
        if let (CovSpec::Diagonal(a), CovSpec::Diagonal(b)) = (self, other) {
            return Ok(a.iter().zip(b).map(|(x, y)| x * y).sum());
        }
        let mut total = 0.0;
        for (start, len) in self.common_partition(other) {
            for i in start..start + len {
                for j in start..start + len {
                    total += self.entry(i, j) * other.entry(j, i);
                }
            }
        }
        Ok(total)
    }

    /// `Vᵀ Σ V` for a `p × k` matrix `V`.
    pub fn project(&self, v: &Matrix) -> Result<Matrix> {
        let p = self.dim();
        if v.rows() != p {
            return Err(Error::Dimension(format!(
                "projection of a {p}-dimensional covariance onto {} rows",
                v.rows()
            )));
        }
        let k = v.cols();
        let mut out = Matrix::zeros(k, k);
        match self {
            CovSpec::Diagonal(d) => {
                for (i, &di) in d.iter().enumerate() {
                    let row = v.row(i);
                    for a in 0..k {
                        for b in 0..k {
                            out[(a, b)] += di * row[a] * row[b];
                        }
                    }
                }
            }
            CovSpec::BlockDiag(blocks) => {
                let mut offset = 0;
                for blk in blocks {
                    let rows: Vec<usize> = (offset..offset + blk.rows()).collect();
                    let vb = v.select_rows(&rows);
                    let part = vb.transpose().matmul(&blk.matmul(&vb)?)?;
                    out = out.add(&part)?;
                    offset += blk.rows();
                }
            }
            CovSpec::Dense(m) => {
                out = v.transpose().matmul(&m.matmul(v)?)?;
            }
        }
        Ok(out)
    }

    pub fn log_det(&self) -> Result<f64> {
        match self {
            CovSpec::Diagonal(d) => {
                self.validate(true)?;
                Ok(d.iter().map(|v| v.ln()).sum())
            }
            CovSpec::BlockDiag(blocks) => {
                let mut total = 0.0;
                let mut offset = 0;
                for b in blocks {
                    total += log_det_spd(b).map_err(|e| shift_pivot(e, offset))?;
                    offset += b.rows();
                }
                Ok(total)
            }
            CovSpec::Dense(m) => log_det_spd(m),
        }
    }

    pub fn is_structured(&self) -> bool {
        !matches!(self, CovSpec::Dense(_))
    }
}

impl CovFactor {
    /// `L g` for a standard normal vector `g`.
    pub fn apply(&self, g: &[f64], out: &mut [f64]) {
        match self {
            CovFactor::Diagonal(s) => {
                for ((o, &si), &gi) in out.iter_mut().zip(s).zip(g) {
                    *o = si * gi;
                }
            }
            CovFactor::Blocks(blocks) => {
                let mut offset = 0;
                for l in blocks {
                    apply_lower(l, &g[offset..], &mut out[offset..offset + l.rows()]);
                    offset += l.rows();
                }
            }
            CovFactor::Dense(l) => apply_lower(l, g, out),
        }
    }

    /// Solves `Σ x = b` using the factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            CovFactor::Diagonal(s) => b.iter().zip(s).map(|(bi, si)| bi / (si * si)).collect(),
            CovFactor::Blocks(blocks) => {
                let mut out = Vec::with_capacity(b.len());
                let mut offset = 0;
                for l in blocks {
                    out.extend(chol_solve_vec(l, &b[offset..offset + l.rows()]));
                    offset += l.rows();
                }
                out
            }
            CovFactor::Dense(l) => chol_solve_vec(l, b),
        }
    }
}

fn apply_lower(l: &Matrix, g: &[f64], out: &mut [f64]) {
    for i in 0..l.rows() {
        let mut v = 0.0;
        for (j, gj) in g.iter().enumerate().take(i + 1) {
            v += l[(i, j)] * gj;
        }
        out[i] = v;
    }
}

fn shift_pivot(e: Error, offset: usize) -> Error {
    match e {
        Error::NotPositiveDefinite { pivot, value } => Error::NotPositiveDefinite {
            pivot: pivot + offset,
            value,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::SeededRng;

    fn spd(n: usize, rng: &mut SeededRng) -> Matrix {
        let a = Matrix::from_fn(n, n, |_, _| rng.normal());
        a.gram().add(&Matrix::identity(n)).unwrap()
    }

    #[test]
    fn structured_projection_matches_dense() {
        let mut rng = SeededRng::new(1, 0);
        let v = Matrix::from_fn(6, 2, |_, _| rng.normal());
        let covs = [
            CovSpec::Diagonal(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            CovSpec::BlockDiag(vec![spd(2, &mut rng), spd(4, &mut rng)]),
        ];
        for c in &covs {
            let dense = v
                .transpose()
                .matmul(&c.to_dense().matmul(&v).unwrap())
                .unwrap();
            let diff = c.project(&v).unwrap().sub(&dense).unwrap().frobenius_norm();
            assert!(diff <= 1e-12 * dense.frobenius_norm());
        }
    }

    #[test]
    fn trace_product_matches_dense() {
        let mut rng = SeededRng::new(2, 0);
        let a = CovSpec::BlockDiag(vec![spd(2, &mut rng), spd(3, &mut rng), spd(1, &mut rng)]);
        let b = CovSpec::BlockDiag(vec![spd(3, &mut rng), spd(3, &mut rng)]);
        let d = CovSpec::Diagonal(vec![0.5, 1.0, 2.0, 1.5, 3.0, 1.0]);
        let dense_tr = |x: &CovSpec, y: &CovSpec| {
            x.to_dense().matmul(&y.to_dense()).unwrap().trace()
        };
        for (x, y) in [(&a, &b), (&a, &d), (&d, &b), (&d, &d)] {
            let t = x.trace_product(y).unwrap();
            assert!((t - dense_tr(x, y)).abs() < 1e-10 * t.abs().max(1.0));
        }
        assert_eq!(a.common_partition(&b), vec![(0, 6)]);
        assert_eq!(a.common_partition(&d), vec![(0, 2), (2, 3), (5, 1)]);
    }

    #[test]
    fn log_det_and_solve() {
        let mut rng = SeededRng::new(3, 0);
        let blocks = vec![spd(2, &mut rng), spd(3, &mut rng)];
        let c = CovSpec::BlockDiag(blocks);
        let dense = c.to_dense();
        assert!((c.log_det().unwrap() - log_det_spd(&dense).unwrap()).abs() < 1e-10);
        let b: Vec<f64> = (0..5).map(|i| i as f64 - 2.0).collect();
        let x = c.factor().unwrap().solve(&b);
        let back = dense.matvec(&x).unwrap();
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn non_spd_block_reports_global_pivot() {
        let good = Matrix::identity(2);
        let bad = Matrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let c = CovSpec::BlockDiag(vec![good, bad]);
        assert!(matches!(
            c.factor(),
            Err(Error::NotPositiveDefinite { pivot: 3, .. })
        ));
    }
}
