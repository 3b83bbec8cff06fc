//! Deterministic random streams.
//!
//! The generator is xoshiro256** (Blackman & Vigna). A stream is keyed by a
//! `(seed, stream_id)` pair; the 256-bit state is filled as
//!
//! ```text
//! a = SplitMix64(seed)
//! b = SplitMix64(stream_id ^ 0xD1B5_4A32_D192_ED03)
//! s[j] = a.next() ^ b.next().rotate_left(23)      for j = 0..4
//! ```
//!
//! with the usual SplitMix64 step (increment `0x9E37_79B9_7F4A_7C15`, mixing
//! multipliers `0xBF58_476D_1CE4_E5B9` and `0x94D0_49BB_1331_11EB`). Uniform
//! doubles take the top 53 bits. Normals use the Box–Muller transform with
//! both outputs consumed in order; nothing depends on a platform library
//! sampler, so streams port bit-for-bit to other languages.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

#[inline]
pub fn splitmix_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(GOLDEN);
        splitmix_mix(self.0)
    }
}

/// Combines several integers into one well-mixed stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C909, |h, &p| {
        splitmix_mix(h ^ splitmix_mix(p.wrapping_add(GOLDEN)))
    })
}

/// xoshiro256** keyed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut a = SplitMix64(seed);
        let mut b = SplitMix64(stream_id ^ STREAM_SALT);
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = a.next() ^ b.next().rotate_left(23);
        }
        if s == [0; 4] {
            s[0] = GOLDEN;
        }
        SeededRng {
            seed,
            stream: stream_id,
            s,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// A fresh generator on a sub-stream derived from this one's key.
    pub fn substream(&self, tag: u64) -> SeededRng {
        SeededRng::new(self.seed, stream_id(&[self.stream, tag]))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Uniform integer in `0..n` (Lemire's nearly-divisionless method).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut m = (self.next_u64() as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = (self.next_u64() as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Index drawn from unnormalised nonnegative weights.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let target = self.uniform() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_keys_reproduce() {
        let mut a = SeededRng::new(42, 7);
        let mut b = SeededRng::new(42, 7);
        let xs: Vec<u64> = (0..100).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..100).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        let na: Vec<u64> = (0..50).map(|_| a.normal().to_bits()).collect();
        let nb: Vec<u64> = (0..50).map(|_| b.normal().to_bits()).collect();
        assert_eq!(na, nb);
    }

    #[test]
    fn streams_differ() {
        let mut a = SeededRng::new(42, 0);
        let mut b = SeededRng::new(42, 1);
        let same = (0..1000).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn streams_are_uncorrelated() {
        let mut a = SeededRng::new(1, 10);
        let mut b = SeededRng::new(1, 11);
        let n = 20000;
        let corr: f64 = (0..n).map(|_| a.normal() * b.normal()).sum::<f64>() / n as f64;
        // 4 sigma for a product of independent standard normals
        assert!(corr.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn normal_moments() {
        let mut r = SeededRng::new(99, 3);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn below_is_in_range_and_covers() {
        let mut r = SeededRng::new(5, 5);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[r.below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = SeededRng::new(0, 0);
        let mut v: Vec<usize> = (0..50).collect();
        r.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
