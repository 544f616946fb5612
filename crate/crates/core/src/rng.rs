//! Portable seeded pseudo-random numbers.
//!
//! Model training and fold assignment must be reproducible from a seed in any
//! language, so the generator is pinned here instead of delegated to a crate
//! whose stream may change between releases:
//!
//! * state is four 64-bit words filled from the seed by SplitMix64
//!   (Steele, Lea & Flood 2014);
//! * outputs come from xoshiro256** (Blackman & Vigna 2018);
//! * bounded integers use Lemire's multiply-and-reject method, so
//!   `below(n)` is exactly uniform.

/// One step of SplitMix64. Advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a sequence of words into one seed. Used to derive independent
/// streams (per tree, per condition and fold) from a single user seed.
pub fn mix_seed(words: &[u64]) -> u64 {
    let mut state = 0u64;
    let mut out = 0u64;
    for &w in words {
        state ^= w;
        out = splitmix64(&mut state);
        state = out;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xoshiro256 {
    s: [u64; 4],
}

impl Xoshiro256 {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Xoshiro256 { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Fisher-Yates shuffle, iterating from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// Draws `k` distinct elements of `pool` (partial Fisher-Yates over a
    /// copy). Returns the whole pool unchanged when `k >= pool.len()`.
    pub fn sample<T: Copy>(&mut self, pool: &[T], k: usize) -> Vec<T> {
        if k >= pool.len() {
            return pool.to_vec();
        }
        let mut buf = pool.to_vec();
        for i in 0..k {
            let j = i + self.index(buf.len() - i);
            buf.swap(i, j);
        }
        buf.truncate(k);
        buf
    }
}
