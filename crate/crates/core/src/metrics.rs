//! Misclustering rate, weighted loss and label matching.

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Largest `K` matched by exhaustive search.
pub const EXHAUSTIVE_MAX_K: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// `permutation[a]` is the estimated label matched to true label `a`.
    pub permutation: Vec<usize>,
    pub h: f64,
    /// `confusion[a][b]` counts samples with true label `a` and estimate `b`.
    pub confusion: Vec<Vec<usize>>,
}

fn check_labels(z: &[usize], z_star: &[usize], k: usize) -> Result<()> {
    if z.len() != z_star.len() {
        return Err(Error::Contract(format!(
            "label vectors of length {} and {}",
            z.len(),
            z_star.len()
        )));
    }
    if z.is_empty() || k == 0 {
        return Err(Error::Contract("empty labelling".into()));
    }
    if let Some(&bad) = z.iter().chain(z_star).find(|&&l| l >= k) {
        return Err(Error::Contract(format!("label {bad} outside 0..{k}")));
    }
    Ok(())
}

pub fn confusion(z: &[usize], z_star: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    check_labels(z, z_star, k)?;
    let mut c = vec![vec![0; k]; k];
    for (&a, &b) in z_star.iter().zip(z) {
        c[a][b] += 1;
    }
    Ok(c)
}

/// Advances `p` to the next permutation in lexicographic order.
pub fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `h(z, z*)`: the smallest fraction of mismatches over label permutations.
///
/// Exhaustive for `K ≤ 8` (ties go to the lexicographically smallest
/// permutation), Hungarian assignment above that.
pub fn misclustering(z: &[usize], z_star: &[usize], k: usize) -> Result<MatchResult> {
    let conf = confusion(z, z_star, k)?;
    let n = z.len();
    let permutation = if k <= EXHAUSTIVE_MAX_K {
        let mut p: Vec<usize> = (0..k).collect();
        let mut best = (p.clone(), 0usize);
        best.1 = (0..k).map(|a| conf[a][p[a]]).sum();
        while next_permutation(&mut p) {
            let agree: usize = (0..k).map(|a| conf[a][p[a]]).sum();
            if agree > best.1 {
                best = (p.clone(), agree);
            }
        }
        best.0
    } else {
        let cost = Matrix::from_fn(k, k, |a, b| -(conf[a][b] as f64));
        hungarian(&cost)?
    };
    let agree: usize = (0..k).map(|a| conf[a][permutation[a]]).sum();
    Ok(MatchResult {
        permutation,
        h: (n - agree) as f64 / n as f64,
        confusion: conf,
    })
}

/// `Σᵢ ω_{zᵢ, π*(z*ᵢ)}·1{zᵢ ≠ π*(z*ᵢ)}` with `π*` from [`misclustering`].
pub fn weighted_loss(z: &[usize], z_star: &[usize], omega: &Matrix) -> Result<f64> {
    let k = omega.rows();
    if !omega.is_square() {
        return Err(Error::Dimension("omega must be square".into()));
    }
    let m = misclustering(z, z_star, k)?;
    Ok(z.iter()
        .zip(z_star)
        .map(|(&zi, &si)| {
            let mapped = m.permutation[si];
            if zi != mapped {
                omega[(zi, mapped)]
            } else {
                0.0
            }
        })
        .sum())
}

/// Minimum-cost perfect matching; `result[row]` is the assigned column.
///
/// Shortest augmenting paths with row/column potentials, `O(K³)`.
pub fn hungarian(cost: &Matrix) -> Result<Vec<usize>> {
    if !cost.is_square() {
        return Err(Error::Dimension(format!(
            "assignment needs a square cost matrix, got {}x{}",
            cost.rows(),
            cost.cols()
        )));
    }
    let n = cost.rows();
    // 1-based arrays with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[col_owner[j] - 1] = j - 1;
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::SeededRng;
    use proptest::prelude::*;

    fn brute_h(z: &[usize], z_star: &[usize], k: usize) -> f64 {
        let mut p: Vec<usize> = (0..k).collect();
        let mut best = usize::MAX;
        loop {
            let miss = z.iter().zip(z_star).filter(|(&a, &b)| a != p[b]).count();
            best = best.min(miss);
            if !next_permutation(&mut p) {
                break;
            }
        }
        best as f64 / z.len() as f64
    }

    fn assignment_cost(c: &Matrix, p: &[usize]) -> f64 {
        p.iter().enumerate().map(|(i, &j)| c[(i, j)]).sum()
    }

    #[test]
    fn identical_and_swapped() {
        let z = vec![0, 1, 1, 0, 2];
        let m = misclustering(&z, &z, 3).unwrap();
        assert_eq!(m.h, 0.0);
        assert_eq!(m.permutation, vec![0, 1, 2]);
        let swapped: Vec<usize> = [0, 1, 1, 0].iter().map(|&l| 1 - l).collect();
        let m = misclustering(&swapped, &[0, 1, 1, 0], 2).unwrap();
        assert_eq!(m.h, 0.0);
        assert_eq!(m.permutation, vec![1, 0]);
    }

    #[test]
    fn three_cluster_examples() {
        let zs = [1, 1, 2, 2, 0, 0];
        assert_eq!(misclustering(&[0, 0, 1, 1, 2, 2], &zs, 3).unwrap().h, 0.0);
        let m = misclustering(&[0, 1, 1, 1, 2, 2], &zs, 3).unwrap();
        assert!((m.h - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn unused_estimated_labels_are_padded() {
        let m = misclustering(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(m.h, 0.5);
        assert_eq!(m.confusion, vec![vec![2, 0], vec![2, 0]]);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(misclustering(&[0, 1], &[0], 2), Err(Error::Contract(_))));
        assert!(matches!(misclustering(&[0, 2], &[0, 1], 2), Err(Error::Contract(_))));
        assert!(matches!(
            hungarian(&Matrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn weighted_loss_examples() {
        let omega = Matrix::from_vec(2, 2, vec![0.0, 4.0, 4.0, 0.0]).unwrap();
        assert_eq!(weighted_loss(&[0, 0, 1], &[0, 0, 1], &omega).unwrap(), 0.0);
        assert_eq!(weighted_loss(&[0, 1, 1, 0, 0], &[0, 1, 1, 0, 1], &omega).unwrap(), 4.0);
    }

    #[test]
    fn weighted_loss_matches_direct_sum() {
        let mut rng = SeededRng::new(11, 0);
        for _ in 0..200 {
            let k = 3;
            let z: Vec<usize> = (0..15).map(|_| rng.below(3) as usize).collect();
            let zs: Vec<usize> = (0..15).map(|_| rng.below(3) as usize).collect();
            let omega = Matrix::from_fn(k, k, |a, b| if a == b { 0.0 } else { rng.uniform() + 0.1 });
            let pi = misclustering(&z, &zs, k).unwrap().permutation;
            let mut direct = 0.0;
            for i in 0..15 {
                let t = pi[zs[i]];
                if z[i] != t {
                    direct += omega[(z[i], t)];
                }
            }
            assert_eq!(weighted_loss(&z, &zs, &omega).unwrap(), direct);
        }
    }

    #[test]
    fn hungarian_examples() {
        let eye_favoring = Matrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(hungarian(&eye_favoring).unwrap(), vec![0, 1, 2]);
        let swap = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(hungarian(&swap).unwrap(), vec![1, 0]);
    }

    #[test]
    fn hungarian_matches_exhaustive_up_to_k8() {
        let mut rng = SeededRng::new(12, 0);
        for trial in 0..300 {
            let k = 1 + trial % 8;
            let c = Matrix::from_fn(k, k, |_, _| (rng.below(20) as f64) - 5.0);
            let mut p: Vec<usize> = (0..k).collect();
            let mut best = f64::INFINITY;
            loop {
                best = best.min(assignment_cost(&c, &p));
                if !next_permutation(&mut p) {
                    break;
                }
            }
            assert_eq!(assignment_cost(&c, &hungarian(&c).unwrap()), best);
        }
    }

    #[test]
    fn large_k_uses_assignment() {
        let k = 10;
        let zs: Vec<usize> = (0..50).map(|i| i % k).collect();
        let z: Vec<usize> = zs.iter().map(|&l| (l + 3) % k).collect();
        let m = misclustering(&z, &zs, k).unwrap();
        assert_eq!(m.h, 0.0);
    }

    fn labels(k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>, usize)> {
        (1..=k).prop_flat_map(|k| {
            (
                proptest::collection::vec(0..k, 12),
                proptest::collection::vec(0..k, 12),
                Just(k),
            )
        })
    }

    proptest! {
        #[test]
        fn rate_is_symmetric((z, zs, k) in labels(5)) {
            let a = misclustering(&z, &zs, k).unwrap().h;
            let b = misclustering(&zs, &z, k).unwrap().h;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn relabeling_estimate_is_free((z, zs, k) in labels(5), shift in 0usize..5) {
            let relabeled: Vec<usize> = z.iter().map(|&l| (l + shift) % k).collect();
            let a = misclustering(&z, &zs, k).unwrap().h;
            let b = misclustering(&relabeled, &zs, k).unwrap().h;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn rate_is_bounded((z, zs, k) in labels(5)) {
            let h = misclustering(&z, &zs, k).unwrap().h;
            prop_assert!(h >= 0.0 && h <= 1.0 - 1.0 / k as f64 + 1e-15);
            prop_assert_eq!(h, brute_h(&z, &zs, k));
        }
    }
}
