//! Gamma and negative-binomial mixtures with independent coordinates.

use super::sampling::{gamma, negative_binomial};
use super::{balanced_labels, check_even, CovSpec, Dataset, Family, MixtureTruth};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, SeededRng};

/// `(shape, scale)` on the first and second half of the coordinates,
/// per component.
pub const GAMMA_PARAMS: [[(f64, f64); 2]; 2] = [[(1.0, 1.0), (0.2, 10.0)], [(2.0, 1.0), (1.0, 1.0)]];

/// `(r, p)` on the first and second half, per component. `NB(r, p)` counts
/// failures before the `r`-th success: mean `r(1−p)/p`, variance `r(1−p)/p²`.
pub const NEGBIN_PARAMS: [[(f64, f64); 2]; 2] =
    [[(6.0, 0.48), (1.0, 0.08)], [(3.0, 0.24), (3.0, 0.24)]];

enum Law {
    Gamma,
    NegBin,
}

impl Law {
    fn moments(&self, (a, b): (f64, f64)) -> (f64, f64) {
        match self {
            Law::Gamma => (a * b, a * b * b),
            Law::NegBin => (a * (1.0 - b) / b, a * (1.0 - b) / (b * b)),
        }
    }

    fn draw(&self, (a, b): (f64, f64), rng: &mut SeededRng) -> f64 {
        match self {
            Law::Gamma => gamma(a, b, rng),
            Law::NegBin => negative_binomial(a, b, rng) as f64,
        }
    }
}

pub fn gen_gamma(n: usize, p: usize, rng: &mut SeededRng) -> Result<Dataset> {
    gen_halves(n, p, Law::Gamma, &GAMMA_PARAMS, rng)
}

pub fn gen_negbin(n: usize, p: usize, rng: &mut SeededRng) -> Result<Dataset> {
    gen_halves(n, p, Law::NegBin, &NEGBIN_PARAMS, rng)
}

fn gen_halves(
    n: usize,
    p: usize,
    law: Law,
    params: &[[(f64, f64); 2]],
    rng: &mut SeededRng,
) -> Result<Dataset> {
    check_even(p, "count generator")?;
    if n == 0 {
        return Err(Error::Dimension("n must be positive".into()));
    }
    for comp in params {
        for &(a, b) in comp {
            let ok = match law {
                Law::Gamma => a > 0.0 && b > 0.0,
                Law::NegBin => a > 0.0 && b > 0.0 && b < 1.0,
            };
            if !ok {
                return Err(Error::Parameter(format!("invalid parameters ({a}, {b})")));
            }
        }
    }
    let k = params.len();
    let h = p / 2;
    let param = |c: usize, j: usize| params[c][usize::from(j >= h)];
    let proportions = vec![1.0 / k as f64; k];
    let labels = balanced_labels(n, &proportions);

    let mut y = Matrix::zeros(n, p);
    for (i, &z) in labels.iter().enumerate() {
        for (j, v) in y.row_mut(i).iter_mut().enumerate() {
            *v = law.draw(param(z, j), rng);
        }
    }
    let centers = Matrix::from_fn(p, k, |j, c| law.moments(param(c, j)).0);
    let covariances = (0..k)
        .map(|c| CovSpec::Diagonal((0..p).map(|j| law.moments(param(c, j)).1).collect()))
        .collect();
    let family = match law {
        Law::Gamma => Family::Gamma,
        Law::NegBin => Family::NegBin,
    };
    let truth = MixtureTruth {
        k,
        centers,
        covariances,
        labels,
        proportions,
        family,
    };
    Ok(Dataset::assemble(y, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_column_means(d: &Dataset) {
        let n = d.y.rows();
        for c in 0..2 {
            let rows: Vec<usize> = (0..n).filter(|&i| d.truth.labels[i] == c).collect();
            let m = rows.len() as f64;
            let CovSpec::Diagonal(var) = &d.truth.covariances[c] else {
                panic!("diagonal expected");
            };
            for j in [0, d.y.cols() - 1] {
                let mean = rows.iter().map(|&i| d.y[(i, j)]).sum::<f64>() / m;
                let target = d.truth.centers[(j, c)];
                assert!(
                    (mean - target).abs() < 4.0 * (var[j] / m).sqrt(),
                    "c={c} j={j}: {mean} vs {target}"
                );
            }
        }
    }

    #[test]
    fn gamma_truth_and_moments() {
        let mut rng = SeededRng::new(5, 0);
        let d = gen_gamma(20_000, 4, &mut rng).unwrap();
        assert_eq!(d.truth.centers.col(0), vec![1.0, 1.0, 2.0, 2.0]);
        assert_eq!(d.truth.covariances[0].diagonal(), vec![1.0, 1.0, 20.0, 20.0]);
        check_column_means(&d);
    }

    #[test]
    fn negbin_truth_and_moments() {
        let mut rng = SeededRng::new(6, 0);
        let d = gen_negbin(20_000, 4, &mut rng).unwrap();
        assert!((d.truth.centers[(0, 0)] - 6.5).abs() < 1e-12);
        assert!(d.y.as_slice().iter().all(|v| v.fract() == 0.0 && *v >= 0.0));
        check_column_means(&d);
    }

    #[test]
    fn odd_dimension_is_rejected() {
        let mut rng = SeededRng::new(0, 0);
        assert!(gen_gamma(10, 3, &mut rng).is_err());
    }
}
