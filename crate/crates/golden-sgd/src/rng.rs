//! Deterministic, splittable random number generation.
//!
//! Every source of randomness in the crate flows through [`Rng`], a
//! SplitMix64-style generator: a 64-bit counter advanced by a fixed odd
//! increment, pushed through an avalanche mixer. The same seed produces the
//! same stream on every platform (including wasm), and [`Rng::derive`] forks
//! an independent stream from a key without disturbing the parent, so adding
//! a consumer never perturbs existing streams.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stafford variant 13 finalizer; full avalanche on 64 bits.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with a derivation key into a new independent seed.
#[inline]
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    mix(seed ^ mix(key.wrapping_add(GAMMA)))
}

/// Counter-based deterministic generator.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fork an independent stream for `key`. The parent state is untouched
    /// and streams for distinct keys do not overlap in practice.
    pub fn derive(&self, key: u64) -> Rng {
        Rng::new(derive_seed(self.seed, key))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform draw from [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). Uses the multiply-shift reduction; the
    /// bias is on the order of n / 2^64 and irrelevant at our scales.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// `k` distinct indices drawn without replacement from [0, n),
    /// returned in ascending order. Panics if k > n.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n} without replacement");
        // Partial Fisher-Yates over an index vector.
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }
}
