use crate::embed::{hollowed_embedding, scaled_rows, svd_embedding, Embedding, EmbeddingKind};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, SeededRng};
use crate::LabelVector;

pub const MAX_LLOYD_ITERS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: LabelVector,
    pub inertia: f64,
    /// Lloyd iterations used by the winning restart.
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Best of `restarts` k-means++ / Lloyd runs.
///
/// Restart `r` draws from `SeededRng::new(base, r)` where `base` is the next
/// output of `rng`; the winner is the lowest `(inertia, r)`.
pub fn kmeans(x: &Matrix, k: usize, rng: &mut SeededRng, restarts: usize) -> Result<KmeansResult> {
    let n = x.rows();
    if k == 0 || n < k {
        return Err(Error::Dimension(format!(
            "k-means with k = {k} on {n} points"
        )));
    }
    let base = rng.next_u64();
    let mut best: Option<KmeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut sub = SeededRng::new(base, r as u64);
        let run = lloyd(x, k, &mut sub);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus(x: &Matrix, k: usize, rng: &mut SeededRng) -> Vec<usize> {
    let n = x.rows();
    let mut chosen = vec![rng.below(n as u64) as usize];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            rng.categorical(&d2)
        } else {
            // all remaining points coincide with a center
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.below(free.len() as u64) as usize]
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    chosen
}

fn centers_of(x: &Matrix, labels: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let p = x.cols();
    let mut c = Matrix::zeros(k, p);
    let mut counts = vec![0usize; k];
    for (i, &z) in labels.iter().enumerate() {
        counts[z] += 1;
        for (cv, xv) in c.row_mut(z).iter_mut().zip(x.row(i)) {
            *cv += xv;
        }
    }
    for (z, &m) in counts.iter().enumerate() {
        if m > 0 {
            for v in c.row_mut(z) {
                *v /= m as f64;
            }
        }
    }
    (c, counts)
}

fn nearest(row: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.rows() {
        let d = sq_dist(row, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(x: &Matrix, k: usize, rng: &mut SeededRng) -> KmeansResult {
    let n = x.rows();
    let seeds = plus_plus(x, k, rng);
    let mut centers = x.select_rows(&seeds);
    let mut labels = vec![usize::MAX; n];
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERS {
        iterations += 1;
        let mut dist = vec![0.0; n];
        let mut next = vec![0; n];
        for i in 0..n {
            let (c, d) = nearest(x.row(i), &centers);
            next[i] = c;
            dist[i] = d;
        }
        reseed_empty(&mut next, &dist, k);
        let changed = next != labels;
        labels = next;
        centers = centers_of(x, &labels, k).0;
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| sq_dist(x.row(i), centers.row(labels[i])))
        .sum();
    KmeansResult {
        labels,
        inertia,
        iterations,
    }
}

/// Gives every empty cluster the point farthest from its own center, taken
/// from clusters with more than one member (ties to the lowest index).
pub(crate) fn reseed_empty(labels: &mut [usize], dist: &[f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &z in labels.iter() {
        counts[z] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for i in 0..labels.len() {
            if counts[labels[i]] > 1 && pick.is_none_or(|j| dist[i] > dist[j]) {
                pick = Some(i);
            }
        }
        if let Some(i) = pick {
            counts[labels[i]] -= 1;
            labels[i] = c;
            counts[c] = 1;
        }
    }
}

/// k-means on the unscaled rows of `U`.
pub fn spectral_init(
    e: &Embedding,
    k: usize,
    rng: &mut SeededRng,
    restarts: usize,
) -> Result<LabelVector> {
    Ok(kmeans(&e.u, k, rng, restarts)?.labels)
}

/// k-means on the scaled embedding rows; a degenerate hollowed embedding
/// falls back to the unscaled rows.
pub fn spectral_cluster_from(
    e: &Embedding,
    rng: &mut SeededRng,
    restarts: usize,
) -> Result<KmeansResult> {
    let rows = if e.degenerate { e.u.clone() } else { scaled_rows(e) };
    kmeans(&rows, e.k(), rng, restarts)
}

pub fn spectral_cluster(
    y: &Matrix,
    k: usize,
    variant: EmbeddingKind,
    rng: &mut SeededRng,
    restarts: usize,
) -> Result<LabelVector> {
    let e = match variant {
        EmbeddingKind::Hollowed => hollowed_embedding(y, k)?,
        EmbeddingKind::VanillaSvd => svd_embedding(y, k)?,
    };
    Ok(spectral_cluster_from(&e, rng, restarts)?.labels)
}
