//! The SNR family: distance from a center to the quadratic boundary where
//! two clusters' weighted distances coincide.

use super::{ProjectedParams, TruthSpectral};
use crate::datagen::{CovSpec, MixtureTruth};
use crate::error::{Error, Result};
use crate::numcore::{chol_spd, forward_sub, spd_solve, symmetric_eigen, Matrix};

pub const GRID_POINTS: usize = 1024;
const BISECT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PairSolution {
    /// Square root of the minimal weighted distance.
    pub value: f64,
    /// Multiplier of the minimizing stationary point.
    pub mu: f64,
    /// `w1` already satisfies `q1 ≥ q2 + offset`; `value` is 0.
    pub center_on_boundary: bool,
}

/// Problem in whitened, diagonalized coordinates:
/// minimize `Σ y²` subject to `Σ y² − Σ d_j (y_j − m_j)² = c`.
///
/// Stationary points are `y_j(μ) = μ d_j m_j / (1 − μ + μ d_j)`.
struct Diagonal<'a> {
    d: &'a [f64],
    m: &'a [f64],
    c: f64,
}

impl Diagonal<'_> {
    fn point(&self, mu: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.d
            .iter()
            .zip(self.m)
            .map(move |(&d, &m)| (mu * d * m / (1.0 - mu + mu * d), d, m))
    }

    fn g(&self, mu: f64) -> f64 {
        let (mut q1, mut q2) = (0.0, 0.0);
        for (y, d, m) in self.point(mu) {
            q1 += y * y;
            q2 += d * (y - m) * (y - m);
        }
        q1 - q2 - self.c
    }

    fn objective(&self, mu: f64) -> f64 {
        self.point(mu).map(|(y, _, _)| y * y).sum()
    }

    fn scale(&self) -> f64 {
        1.0 + self.c.abs() + self.d.iter().zip(self.m).map(|(d, m)| d * m * m).sum::<f64>()
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        let mut glo = self.g(lo);
        let tol = BISECT_TOL * self.scale();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let gm = self.g(mid);
            if gm.abs() <= tol || mid == lo || mid == hi {
                return mid;
            }
            if (gm < 0.0) == (glo < 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Roots of `g` between consecutive grid points.
    fn roots_on(&self, grid: &[f64], trace: &mut Vec<(f64, f64)>) -> Vec<f64> {
        let values: Vec<f64> = grid.iter().map(|&mu| self.g(mu)).collect();
        trace.extend(grid.iter().cloned().zip(values.iter().cloned()));
        let mut roots = Vec::new();
        for i in 0..grid.len() {
            if values[i] == 0.0 {
                roots.push(grid[i]);
            } else if i + 1 < grid.len()
                && values[i + 1] != 0.0
                && (values[i] < 0.0) != (values[i + 1] < 0.0)
            {
                roots.push(self.bisect(grid[i], grid[i + 1]));
            }
        }
        roots
    }

    fn solve(&self) -> Result<PairSolution> {
        if self.g(0.0) >= 0.0 {
            return Ok(PairSolution {
                value: 0.0,
                mu: 0.0,
                center_on_boundary: true,
            });
        }
        let mut trace = Vec::new();
        let unit: Vec<f64> = (0..=GRID_POINTS).map(|i| i as f64 / GRID_POINTS as f64).collect();
        let mut roots = self.roots_on(&unit, &mut trace);
        if roots.is_empty() {
            // extend to every μ with (1 − μ)I + μD positive definite
            let hi = self
                .d
                .iter()
                .filter(|&&d| d < 1.0)
                .map(|&d| 1.0 / (1.0 - d))
                .fold(f64::INFINITY, f64::min);
            let lo = self
                .d
                .iter()
                .filter(|&&d| d > 1.0)
                .map(|&d| -1.0 / (d - 1.0))
                .fold(f64::NEG_INFINITY, f64::max);
            roots.extend(self.roots_on(&extension(1.0, hi), &mut trace));
            roots.extend(self.roots_on(&extension(0.0, lo), &mut trace));
        }
        let best = roots
            .iter()
            .map(|&mu| (self.objective(mu), mu))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((obj, mu)) => Ok(PairSolution {
                value: obj.sqrt(),
                mu,
                center_on_boundary: false,
            }),
            None => Err(Error::SolverFailure {
                message: "constraint has no sign change on the multiplier grid".into(),
                grid: trace,
            }),
        }
    }
}

/// Grid from `start` (exclusive) towards `end` (exclusive, possibly
/// infinite), denser near both ends.
fn extension(start: f64, end: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(GRID_POINTS + 16);
    if end.is_finite() {
        let span = end - start;
        for i in 1..GRID_POINTS {
            out.push(start + span * i as f64 / GRID_POINTS as f64);
        }
        for e in 4..=12 {
            out.push(start + span * (1.0 - 10f64.powi(-e)));
        }
    } else {
        let dir = if end > start { 1.0 } else { -1.0 };
        for i in 1..GRID_POINTS {
            let t = i as f64 / GRID_POINTS as f64;
            out.push(start + dir * 10f64.powf(-6.0 + 18.0 * t));
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Eigen-whitening of one block: returns `(d, Qᵀ R⁻¹ δ)` with `R = chol(s1)`
/// and `RᵀS₂⁻¹R = Q diag(d) Qᵀ`.
fn whiten(s1: &Matrix, s2: &Matrix, delta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = chol_spd(s1)?;
    chol_spd(s2)?;
    let mut mp = delta.to_vec();
    forward_sub(&r, &mut mp);
    let c = r.transpose().matmul(&spd_solve(s2, &r)?)?;
    let c = Matrix::from_fn(c.rows(), c.cols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let spec = symmetric_eigen(&c)?;
    let m = spec.eigenvectors.transpose().matvec(&mp)?;
    Ok((spec.eigenvalues, m))
}

/// `√ min (x−w1)ᵀs1⁻¹(x−w1)` over `x` with
/// `(x−w1)ᵀs1⁻¹(x−w1) = (x−w2)ᵀs2⁻¹(x−w2) + offset`.
pub fn snr_pair(w1: &[f64], w2: &[f64], s1: &Matrix, s2: &Matrix, offset: f64) -> Result<PairSolution> {
    let k = w1.len();
    if w2.len() != k || s1.rows() != k || s2.rows() != k || !s1.is_square() || !s2.is_square() {
        return Err(Error::Dimension(format!("SNR pair inputs must be {k}-dimensional")));
    }
    let (d, m) = whiten(s1, s2, &sub(w2, w1))?;
    Diagonal { d: &d, m: &m, c: offset }.solve()
}

/// Full-dimensional version for structured covariances, with the
/// log-determinant offset `½(log|Σ₂| − log|Σ₁|)`.
pub fn snr_full_pair(
    theta1: &[f64],
    theta2: &[f64],
    s1: &CovSpec,
    s2: &CovSpec,
) -> Result<PairSolution> {
    if !s1.is_structured() || !s2.is_structured() {
        return Err(Error::Unsupported(
            "full-dimensional SNR needs diagonal or block-diagonal covariances".into(),
        ));
    }
    let p = theta1.len();
    if theta2.len() != p || s1.dim() != p || s2.dim() != p {
        return Err(Error::Dimension("SNR^full inputs disagree in dimension".into()));
    }
    let delta = sub(theta2, theta1);
    let mut d = Vec::with_capacity(p);
    let mut m = Vec::with_capacity(p);
    for (start, len) in s1.common_partition(s2) {
        if len == 1 {
            let (a, b) = (s1.entry(start, start), s2.entry(start, start));
            if !(a > 0.0) || !(b > 0.0) {
                let (pivot, value) = if a > 0.0 { (start, b) } else { (start, a) };
                return Err(Error::NotPositiveDefinite { pivot, value });
            }
            d.push(a / b);
            m.push(delta[start] / a.sqrt());
        } else {
            let (db, mb) = whiten(
                &s1.sub_block(start, len),
                &s2.sub_block(start, len),
                &delta[start..start + len],
            )?;
            d.extend(db);
            m.extend(mb);
        }
    }
    let offset = 0.5 * (s2.log_det()? - s1.log_det()?);
    Diagonal { d: &d, m: &m, c: offset }.solve()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSnr {
    pub j1: usize,
    pub j2: usize,
    pub snr: f64,
    pub snr_mod: f64,
    pub snr_exc: f64,
    pub snr_full: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrReport {
    pub snr: f64,
    pub snr_mod: f64,
    pub snr_exc: f64,
    pub snr_full: Option<f64>,
    /// Ordered pairs `j1 ≠ j2`.
    pub pairs: Vec<PairSnr>,
}

/// Every SNR variant, each the minimum over ordered cluster pairs.
/// `snr_full` is present only when all covariances are structured.
pub fn snr_report(pp: &ProjectedParams, truth: &MixtureTruth, _ts: &TruthSpectral) -> Result<SnrReport> {
    let k = pp.k();
    let structured = truth.covariances.iter().all(CovSpec::is_structured);
    let mut pairs = Vec::new();
    for j1 in 0..k {
        for j2 in 0..k {
            if j1 == j2 {
                continue;
            }
            let (w1, w2) = (pp.center(j1), pp.center(j2));
            let snr = snr_pair(&w1, &w2, &pp.s_star[j1], &pp.s_star[j2], 0.0)?.value;
            let snr_mod = snr_pair(&w1, &w2, &pp.s_mod[j1], &pp.s_mod[j2], 0.0)?.value;
            let snr_exc = snr_pair(&w1, &w2, &pp.s_exc[j1], &pp.s_exc[j2], 0.0)?.value;
            let snr_full = if structured {
                Some(
                    snr_full_pair(
                        &truth.center(j1),
                        &truth.center(j2),
                        &truth.covariances[j1],
                        &truth.covariances[j2],
                    )?
                    .value,
                )
            } else {
                None
            };
            pairs.push(PairSnr {
                j1,
                j2,
                snr,
                snr_mod,
                snr_exc,
                snr_full,
            });
        }
    }
    let min = |f: &dyn Fn(&PairSnr) -> f64| pairs.iter().map(f).fold(f64::INFINITY, f64::min);
    let snr_full = if structured {
        Some(min(&|p| p.snr_full.unwrap_or(f64::INFINITY)))
    } else {
        None
    };
    Ok(SnrReport {
        snr: min(&|p| p.snr),
        snr_mod: min(&|p| p.snr_mod),
        snr_exc: min(&|p| p.snr_exc),
        snr_full,
        pairs,
    })
}
