//! Counter-based random numbers for reproducible test suites.
//!
//! Value `k` of stream `seed` is `splitmix64(seed ^ 0x9E3779B97F4A7C15 * (k + 1))`
//! where the multiplication wraps modulo 2^64 and `splitmix64` is the
//! standard finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Uniform doubles take the top 53 bits: `(v >> 11) * 2^-53`. Any port that
//! reproduces these two lines draws the same shapes.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream of values indexed by a counter.
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    /// Independent stream derived from this seed and a label.
    pub fn substream(seed: u64, label: u64) -> Self {
        CounterRng::new(splitmix64(seed ^ splitmix64(label.wrapping_add(1))))
    }

    pub fn value_at(seed: u64, k: u64) -> u64 {
        splitmix64(seed ^ GOLDEN.wrapping_mul(k.wrapping_add(1)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = Self::value_at(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
