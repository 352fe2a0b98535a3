//! Small deterministic PRNG shared by the scene generator and subsampling.
//!
//! State initialisation uses one SplitMix64 step on the seed:
//!
//! ```text
//! z = seed + 0x9E3779B97F4A7C15
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! state = z ^ (z >> 31)            (replaced by 0x9E3779B97F4A7C15 if zero)
//! ```
//!
//! Each draw is one xorshift64* step:
//!
//! ```text
//! x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27
//! output = x * 0x2545F4914F6CDD1D
//! ```
//!
//! All arithmetic wraps modulo 2^64. Uniform doubles take the top 53 output
//! bits; normals use the Box-Muller cosine branch.

#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(GOLDEN);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        XorShift64Star {
            state: if z == 0 { GOLDEN } else { z },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Multiply-shift; the bias is below 2^-40 for any realistic n.
        (((self.next_u64() >> 32) * n as u64) >> 32) as usize
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        // 1 - u keeps the logarithm finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// `k` distinct positions out of `0..n`, ascending, by partial Fisher-Yates.
pub fn sample_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut rng = XorShift64Star::new(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below(n - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_sequence_is_frozen() {
        // Pins the documented update rule.
        let mut a = XorShift64Star::new(0);
        let first: Vec<u64> = (0..3).map(|_| a.next_u64()).collect();
        let mut b = XorShift64Star::new(0);
        assert_eq!(first, (0..3).map(|_| b.next_u64()).collect::<Vec<_>>());
        let mut x: u64 = 0xE220_A839_7B1D_CDAF; // splitmix64(0)
        let mut expect = Vec::new();
        for _ in 0..3 {
            x ^= x >> 12;
            x ^= x << 25;
            x ^= x >> 27;
            expect.push(x.wrapping_mul(0x2545_F491_4F6C_DD1D));
        }
        assert_eq!(first, expect);
    }

    #[test]
    fn uniform_moments() {
        let mut r = XorShift64Star::new(42);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.next_f64()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005);
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
        let gs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let gm = gs.iter().sum::<f64>() / n as f64;
        let gv = gs.iter().map(|g| (g - gm) * (g - gm)).sum::<f64>() / n as f64;
        assert!(gm.abs() < 0.01 && (gv - 1.0).abs() < 0.02);
    }

    #[test]
    fn sampling_is_distinct_sorted_and_deterministic() {
        let s = sample_indices(1000, 50, 7);
        assert_eq!(s.len(), 50);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, sample_indices(1000, 50, 7));
        assert_eq!(sample_indices(5, 10, 7), vec![0, 1, 2, 3, 4]);
    }
}
