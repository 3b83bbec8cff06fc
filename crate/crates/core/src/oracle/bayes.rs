use crate::datagen::{CovFactor, Family, MixtureTruth};
use crate::error::{Error, Result};
use crate::numcore::{dot, Matrix};
use crate::LabelVector;

/// Gaussian classifier that knows the true centers and covariances.
#[derive(Debug, Clone)]
pub struct BayesClassifier {
    centers: Vec<Vec<f64>>,
    factors: Vec<CovFactor>,
    log_dets: Vec<f64>,
}

impl BayesClassifier {
    pub fn new(truth: &MixtureTruth) -> Result<Self> {
        if truth.family != Family::Gaussian {
            return Err(Error::Unsupported(format!(
                "Bayes classifier is defined for Gaussian mixtures, not {:?}",
                truth.family
            )));
        }
        let mut factors = Vec::with_capacity(truth.k);
        let mut log_dets = Vec::with_capacity(truth.k);
        for cov in &truth.covariances {
            log_dets.push(cov.log_det()?);
            factors.push(cov.factor()?);
        }
        Ok(BayesClassifier {
            centers: (0..truth.k).map(|k| truth.center(k)).collect(),
            factors,
            log_dets,
        })
    }

    /// `−½(x−θ_k)ᵀΣ_k⁻¹(x−θ_k) − ½log|Σ_k|`.
    pub fn score(&self, x: &[f64], k: usize) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.centers[k]).map(|(a, b)| a - b).collect();
        let s = self.factors[k].solve(&d);
        -0.5 * dot(&d, &s) - 0.5 * self.log_dets[k]
    }

    /// Highest score, ties to the lowest index.
    pub fn classify_row(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for k in 0..self.centers.len() {
            let s = self.score(x, k);
            if s > best.1 {
                best = (k, s);
            }
        }
        best.0
    }

    pub fn classify(&self, y: &Matrix) -> Result<LabelVector> {
        let p = self.centers[0].len();
        if y.cols() != p {
            return Err(Error::Dimension(format!(
                "data has {} columns, mixture has {p}",
                y.cols()
            )));
        }
        Ok((0..y.rows()).map(|i| self.classify_row(y.row(i))).collect())
    }
}

pub fn bayes_classify(y: &Matrix, truth: &MixtureTruth) -> Result<LabelVector> {
    BayesClassifier::new(truth)?.classify(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::CovSpec;

    fn one_dim() -> MixtureTruth {
        MixtureTruth {
            k: 2,
            centers: Matrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap(),
            covariances: vec![CovSpec::Diagonal(vec![1.0]), CovSpec::Diagonal(vec![4.0])],
            labels: vec![0, 1],
            proportions: vec![0.5, 0.5],
            family: Family::Gaussian,
        }
    }

    #[test]
    fn one_dimensional_threshold() {
        // equal scores at x² = (4/3)·ln 4
        let t = (4.0 * 4f64.ln() / 3.0).sqrt();
        let c = BayesClassifier::new(&one_dim()).unwrap();
        assert_eq!(c.classify_row(&[t - 1e-6]), 0);
        assert_eq!(c.classify_row(&[-(t - 1e-6)]), 0);
        assert_eq!(c.classify_row(&[t + 1e-6]), 1);
        assert_eq!(c.classify_row(&[-(t + 1e-6)]), 1);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut t = one_dim();
        t.covariances[1] = CovSpec::Diagonal(vec![1.0]);
        let c = BayesClassifier::new(&t).unwrap();
        assert_eq!(c.classify_row(&[0.3]), 0);
    }

    #[test]
    fn rejects_other_families() {
        let mut t = one_dim();
        t.family = Family::Ising;
        assert!(matches!(BayesClassifier::new(&t), Err(Error::Unsupported(_))));
    }

    #[test]
    fn block_and_dense_agree() {
        let b = Matrix::from_vec(2, 2, vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let block = CovSpec::BlockDiag(vec![b.clone(), b]);
        let dense = CovSpec::Dense(block.to_dense());
        let mk = |cov: CovSpec| MixtureTruth {
            k: 2,
            centers: Matrix::from_fn(4, 2, |j, k| if j == k { 1.0 } else { 0.0 }),
            covariances: vec![cov, CovSpec::identity(4)],
            labels: vec![0, 1],
            proportions: vec![0.5, 0.5],
            family: Family::Gaussian,
        };
        let y = Matrix::from_fn(40, 4, |i, j| ((i * 7 + j * 5) % 9) as f64 / 3.0 - 1.0);
        assert_eq!(
            bayes_classify(&y, &mk(block)).unwrap(),
            bayes_classify(&y, &mk(dense)).unwrap()
        );
    }
}
