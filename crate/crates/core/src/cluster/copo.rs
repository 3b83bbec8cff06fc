use super::kmeans::{reseed_empty, spectral_init, DEFAULT_RESTARTS};
use crate::embed::{hollowed_embedding, Embedding};
use crate::error::{Error, Result};
use crate::numcore::{chol_spd, mahalanobis_sq, Matrix, SeededRng};
use crate::LabelVector;

#[derive(Debug, Clone, PartialEq)]
pub struct CopoConfig {
    pub k: usize,
    /// `None` means `⌊ln n⌋` (at least one).
    pub max_iters: Option<usize>,
    /// Relative ridge added as `ridge·tr(Ω)/K·I`.
    pub ridge: f64,
    pub min_cluster_size: usize,
    /// Adds `log|Ω_k|` to the reassignment score.
    pub log_det: bool,
    /// Seed for the spectral initializer in [`copo_cluster`].
    pub init_seed: u64,
    pub init_restarts: usize,
}

impl CopoConfig {
    pub fn new(k: usize) -> Self {
        CopoConfig {
            k,
            max_iters: None,
            ridge: 1e-6,
            min_cluster_size: 2,
            log_det: false,
            init_seed: 0,
            init_restarts: DEFAULT_RESTARTS,
        }
    }

    pub fn iterations_for(&self, n: usize) -> usize {
        self.max_iters
            .unwrap_or_else(|| ((n as f64).ln().floor() as usize).max(1))
    }
}

/// Parameters estimated from one labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    /// Labels the estimates were computed from.
    pub labels: LabelVector,
    /// `K × K`, row `k` is the mean of the embedded rows in cluster `k`.
    pub centers: Matrix,
    /// Covariances `Ω_k` before the ridge.
    pub covariances: Vec<Matrix>,
    /// 1-based round number.
    pub iteration: usize,
}

#[derive(Debug, Clone)]
pub struct CopoResult {
    pub labels: LabelVector,
    pub trace: Vec<ClusterState>,
    /// Reassignment rounds performed.
    pub iterations: usize,
    /// True when a round left the labels unchanged.
    pub converged: bool,
}

impl CopoResult {
    /// Labels at the start and after every round.
    pub fn history(&self) -> Vec<&[usize]> {
        let mut out: Vec<&[usize]> = self.trace.iter().map(|s| s.labels.as_slice()).collect();
        out.push(&self.labels);
        out
    }
}

fn validate_init(init: &[usize], n: usize, cfg: &CopoConfig) -> Result<()> {
    if cfg.k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    if !(cfg.ridge >= 0.0) {
        return Err(Error::Parameter(format!("ridge {} must be >= 0", cfg.ridge)));
    }
    if cfg.max_iters == Some(0) {
        return Err(Error::Parameter("max_iters must be >= 1".into()));
    }
    if init.len() != n {
        return Err(Error::Dimension(format!(
            "{} initial labels for {n} embedded rows",
            init.len()
        )));
    }
    let mut sizes = vec![0usize; cfg.k];
    for &z in init {
        if z >= cfg.k {
            return Err(Error::Contract(format!("initial label {z} outside 0..{}", cfg.k)));
        }
        sizes[z] += 1;
    }
    let need = cfg.min_cluster_size.max(1);
    if let Some(c) = sizes.iter().position(|&m| m < need) {
        return Err(Error::Contract(format!(
            "initial cluster {c} has {} members, need at least {need}",
            sizes[c]
        )));
    }
    Ok(())
}

/// Centers and covariances `Ω_k = (1/n_k)Σ U_iU_iᵀ − c_k c_kᵀ`, accumulated
/// as centered sums.
pub fn estimate_state(u: &Matrix, labels: &[usize], k: usize) -> (Matrix, Vec<Matrix>) {
    let d = u.cols();
    let mut centers = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &z) in labels.iter().enumerate() {
        counts[z] += 1;
        for (c, x) in centers.row_mut(z).iter_mut().zip(u.row(i)) {
            *c += x;
        }
    }
    for (z, &m) in counts.iter().enumerate() {
        let m = m.max(1) as f64;
        for v in centers.row_mut(z) {
            *v /= m;
        }
    }
    let mut covs = vec![Matrix::zeros(d, d); k];
    let mut diff = vec![0.0; d];
    for (i, &z) in labels.iter().enumerate() {
        for ((df, x), c) in diff.iter_mut().zip(u.row(i)).zip(centers.row(z)) {
            *df = x - c;
        }
        let s = &mut covs[z];
        for a in 0..d {
            for b in 0..d {
                s[(a, b)] += diff[a] * diff[b];
            }
        }
    }
    for (s, &m) in covs.iter_mut().zip(&counts) {
        let m = m.max(1) as f64;
        for a in 0..d {
            for b in 0..d {
                s[(a, b)] /= m;
            }
        }
    }
    (centers, covs)
}

fn regularize(covs: &[Matrix], ridge: f64) -> Vec<Matrix> {
    let d = covs[0].rows() as f64;
    let positive: Vec<f64> = covs.iter().map(Matrix::trace).filter(|&t| t > 0.0).collect();
    let fallback = if positive.is_empty() {
        1.0
    } else {
        positive.iter().sum::<f64>() / positive.len() as f64
    };
    covs.iter()
        .map(|om| {
            let t = om.trace();
            let t = if t > 0.0 { t } else { fallback };
            om.add(&Matrix::identity(om.rows()).scale(ridge * t / d))
                .expect("square covariance")
        })
        .collect()
}

/// Covariance-aware refinement of `init` on the rows of `e.u`.
///
/// Labels are renamed by first occurrence in `init` before iterating, so
/// the lowest-index tie rule does not depend on how `init` names clusters;
/// the output uses the names of `init`.
pub fn copo(e: &Embedding, init: &[usize], cfg: &CopoConfig) -> Result<CopoResult> {
    let u = &e.u;
    let n = u.rows();
    let k = cfg.k;
    validate_init(init, n, cfg)?;

    let mut to_canon = vec![usize::MAX; k];
    let mut from_canon = Vec::with_capacity(k);
    for &z in init {
        if to_canon[z] == usize::MAX {
            to_canon[z] = from_canon.len();
            from_canon.push(z);
        }
    }
    let rename = |labels: &[usize]| -> LabelVector { labels.iter().map(|&z| from_canon[z]).collect() };

    let mut labels: LabelVector = init.iter().map(|&z| to_canon[z]).collect();
    let rounds = cfg.iterations_for(n);
    let mut trace = Vec::with_capacity(rounds);
    let mut converged = false;
    let mut iterations = 0;

    for round in 1..=rounds {
        iterations = round;
        let (centers, covs) = estimate_state(u, &labels, k);
        let regular = regularize(&covs, cfg.ridge);
        let factors = regular
            .iter()
            .map(chol_spd)
            .collect::<Result<Vec<_>>>()?;
        let offsets: Vec<f64> = if cfg.log_det {
            factors
                .iter()
                .map(|l| 2.0 * l.diag().iter().map(|v| v.ln()).sum::<f64>())
                .collect()
        } else {
            vec![0.0; k]
        };

        let mut next = vec![0; n];
        let mut own = vec![0.0; n];
        let mut diff = vec![0.0; u.cols()];
        for i in 0..n {
            let row = u.row(i);
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                for (d, (x, m)) in diff.iter_mut().zip(row.iter().zip(centers.row(c))) {
                    *d = x - m;
                }
                let score = mahalanobis_sq(&factors[c], &diff) + offsets[c];
                if score < best.1 {
                    best = (c, score);
                }
            }
            next[i] = best.0;
            own[i] = best.1;
        }
        reseed_empty(&mut next, &own, k);

        let state_labels = std::mem::replace(&mut labels, next);
        let unchanged = state_labels == labels;
        trace.push(ClusterState {
            labels: rename(&state_labels),
            centers: permute_rows(&centers, &from_canon),
            covariances: permute_vec(covs, &from_canon),
            iteration: round,
        });
        if unchanged {
            converged = true;
            break;
        }
    }
    Ok(CopoResult {
        labels: rename(&labels),
        trace,
        iterations,
        converged,
    })
}

/// Rows reordered so that row `from_canon[c]` of the output is row `c`.
fn permute_rows(m: &Matrix, from_canon: &[usize]) -> Matrix {
    let mut out = m.clone();
    for (c, &orig) in from_canon.iter().enumerate() {
        out.row_mut(orig).copy_from_slice(m.row(c));
    }
    out
}

fn permute_vec(v: Vec<Matrix>, from_canon: &[usize]) -> Vec<Matrix> {
    let mut out = v.clone();
    for (c, m) in v.into_iter().enumerate() {
        out[from_canon[c]] = m;
    }
    out
}

/// Full pipeline on raw data: hollowed embedding, spectral initialization
/// with `cfg.init_seed`, then [`copo`].
pub fn copo_cluster(y: &Matrix, cfg: &CopoConfig) -> Result<CopoResult> {
    let e = hollowed_embedding(y, cfg.k)?;
    let mut rng = SeededRng::new(cfg.init_seed, 0);
    let init = spectral_init(&e, cfg.k, &mut rng, cfg.init_restarts)?;
    copo(&e, &init, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingKind;

    fn embedding(u: Matrix) -> Embedding {
        let k = u.cols();
        Embedding {
            u,
            eigenvalues: vec![1.0; k],
            kind: EmbeddingKind::Hollowed,
            degenerate: false,
        }
    }

    fn noisy_embedding(seed: u64, n: usize) -> (Embedding, LabelVector) {
        let mut rng = SeededRng::new(seed, 0);
        let z: LabelVector = (0..n).map(|i| i % 3).collect();
        let centers = [[1.0, 0.0], [-0.5, 0.8], [-0.5, -0.8]];
        let u = Matrix::from_fn(n, 2, |i, j| centers[z[i]][j] + 0.45 * rng.normal());
        let mut init = z.clone();
        for i in (0..n).step_by(7) {
            init[i] = (init[i] + 1) % 3;
        }
        (embedding(u), init)
    }

    #[test]
    fn true_labels_are_a_fixed_point() {
        let z: LabelVector = (0..10).map(|i| usize::from(i >= 5)).collect();
        let u = Matrix::from_fn(10, 2, |i, j| {
            let base = if z[i] == j { 0.4 } else { 0.0 };
            base + 0.01 * ((i * 3 + j) % 5) as f64
        });
        let r = copo(&embedding(u), &z, &CopoConfig::new(2)).unwrap();
        assert_eq!(r.labels, z);
        assert!(r.converged);
        for s in &r.trace {
            assert_eq!(s.labels, z);
        }
    }

    #[test]
    fn covariance_formulas_agree() {
        let (e, init) = noisy_embedding(1, 60);
        let (centers, covs) = estimate_state(&e.u, &init, 3);
        for c in 0..3 {
            let rows: Vec<usize> = (0..60).filter(|&i| init[i] == c).collect();
            let m = rows.len() as f64;
            let mut direct = Matrix::zeros(2, 2);
            for &i in &rows {
                let d: Vec<f64> = (0..2).map(|a| e.u[(i, a)] - centers[(c, a)]).collect();
                for a in 0..2 {
                    for b in 0..2 {
                        direct[(a, b)] += d[a] * d[b] / m;
                    }
                }
            }
            assert!(direct.sub(&covs[c]).unwrap().max_abs() <= 1e-12);
            assert!(covs[c].is_symmetric(0.0));
        }
    }

    #[test]
    fn ridge_keeps_spd() {
        let single = Matrix::zeros(2, 2);
        let reg = regularize(&[single.clone(), single], 1e-6);
        for m in reg {
            assert_eq!(m[(0, 0)], 1e-6 / 2.0);
            assert!(chol_spd(&m).is_ok());
        }
    }

    #[test]
    fn label_permutation_equivariance() {
        let (e, init) = noisy_embedding(2, 90);
        let cfg = CopoConfig {
            max_iters: Some(8),
            ..CopoConfig::new(3)
        };
        let base = copo(&e, &init, &cfg).unwrap();
        for perm in [[1, 2, 0], [2, 1, 0], [0, 2, 1]] {
            let relabeled: LabelVector = init.iter().map(|&z| perm[z]).collect();
            let r = copo(&e, &relabeled, &cfg).unwrap();
            let expected: LabelVector = base.labels.iter().map(|&z| perm[z]).collect();
            assert_eq!(r.labels, expected);
        }
    }

    #[test]
    fn rotation_invariance() {
        let (e, init) = noisy_embedding(3, 90);
        let (c, s) = (0.6f64, 0.8f64);
        let q = Matrix::from_vec(2, 2, vec![c, -s, s, c]).unwrap();
        let rotated = embedding(e.u.matmul(&q).unwrap());
        let cfg = CopoConfig {
            max_iters: Some(8),
            ..CopoConfig::new(3)
        };
        let a = copo(&e, &init, &cfg).unwrap();
        let b = copo(&rotated, &init, &cfg).unwrap();
        assert_eq!(a.history(), b.history());
    }

    #[test]
    fn fixed_point_stops_early() {
        let (e, init) = noisy_embedding(4, 90);
        let cfg = CopoConfig {
            max_iters: Some(50),
            ..CopoConfig::new(3)
        };
        let r = copo(&e, &init, &cfg).unwrap();
        if r.converged {
            let again = copo(&e, &r.labels, &cfg).unwrap();
            assert_eq!(again.labels, r.labels);
            assert_eq!(again.iterations, 1);
        }
        assert!(r.iterations <= 50);
    }

    #[test]
    fn invalid_init_is_rejected() {
        let e = embedding(Matrix::from_fn(4, 2, |i, j| (i + j) as f64));
        let cfg = CopoConfig::new(2);
        assert!(matches!(copo(&e, &[0, 0, 0, 1], &cfg), Err(Error::Contract(_))));
        assert!(matches!(copo(&e, &[0, 0, 2, 1], &cfg), Err(Error::Contract(_))));
        assert!(matches!(copo(&e, &[0, 1], &cfg), Err(Error::Dimension(_))));
    }

    #[test]
    fn every_cluster_survives() {
        let (e, init) = noisy_embedding(5, 30);
        let r = copo(&e, &init, &CopoConfig::new(3)).unwrap();
        for c in 0..3 {
            assert!(r.labels.contains(&c));
        }
    }
}
