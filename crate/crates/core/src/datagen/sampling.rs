//! Scalar samplers and normal-distribution helpers driven by [`SeededRng`].

use crate::numcore::SeededRng;

/// Upper tail `P(Z ≥ x)` of the standard normal.
pub fn normal_upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Bivariate normal density with unit variances and correlation `rho`.
fn bivariate_pdf(a: f64, b: f64, rho: f64) -> f64 {
    let om = 1.0 - rho * rho;
    (-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * om)).exp()
        / (2.0 * std::f64::consts::PI * om.sqrt())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P(Z₁ ≥ a, Z₂ ≥ b)` for standard normals with correlation `rho`.
///
/// Integrates the bivariate density over the correlation parameter,
/// `Φ̄(a)Φ̄(b) + ∫₀^ρ φ₂(a, b; r) dr`, with composite Gauss–Legendre.
pub fn bivariate_upper_orthant(a: f64, b: f64, rho: f64) -> f64 {
    assert!(rho.abs() < 1.0, "|rho| must be < 1");
    let base = normal_upper_tail(a) * normal_upper_tail(b);
    if rho == 0.0 {
        return base;
    }
    let (nodes, weights) = gauss_legendre(20);
    let panels = 16;
    let h = rho / panels as f64;
    let mut integral = 0.0;
    for k in 0..panels {
        let lo = k as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in nodes.iter().zip(&weights) {
            integral += w * 0.5 * h * bivariate_pdf(a, b, mid + 0.5 * h * x);
        }
    }
    base + integral
}

/// Gamma(shape, scale) by Marsaglia–Tsang; shapes below one are boosted
/// with `U^{1/shape}`.
pub fn gamma(shape: f64, scale: f64, rng: &mut SeededRng) -> f64 {
    debug_assert!(shape > 0.0 && scale > 0.0);
    if shape < 1.0 {
        let g = gamma(shape + 1.0, 1.0, rng);
        let u = rng.uniform_open0();
        return scale * g * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x = rng.normal();
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = rng.uniform_open0();
        if u < 1.0 - 0.0331 * x.powi(4) {
            return scale * d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return scale * d * v;
        }
    }
}

/// Poisson(λ): sequential inversion below λ = 10, PTRS (Hörmann) above.
pub fn poisson(lambda: f64, rng: &mut SeededRng) -> u64 {
    debug_assert!(lambda >= 0.0);
    if lambda == 0.0 {
        return 0;
    }
    if lambda < 10.0 {
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let u = rng.uniform();
        let mut k = 0u64;
        while u > cdf {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            if p == 0.0 {
                break;
            }
        }
        return k;
    }
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform_open0();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Negative binomial: failures before the `r`-th success with success
/// probability `p`, sampled as a gamma–Poisson mixture.
pub fn negative_binomial(r: f64, p: f64, rng: &mut SeededRng) -> u64 {
    let lambda = gamma(r, (1.0 - p) / p, rng);
    poisson(lambda, rng)
}
