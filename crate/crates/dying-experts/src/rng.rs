//! Counter-based random numbers.
//!
//! Every draw is a pure function of (seed, stream ids, counter), so loss
//! streams can be generated in any order, regenerated per round, or sharded
//! across threads without any sequential RNG state. The mixer is SplitMix64's
//! finalizer, which is cheap and passes the usual statistical batteries for
//! this kind of simulation work.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `x + GOLDEN`.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream key from a seed and a list of stream ids (e.g.
/// `[kind, day, expert]`). Folding through the mixer keeps distinct id
/// tuples on distinct streams.
pub fn stream_key(seed: u64, ids: &[u64]) -> u64 {
    let mut k = splitmix64(seed);
    for &id in ids {
        k = splitmix64(k ^ splitmix64(id));
    }
    k
}

/// The `counter`-th draw on stream `key`.
#[inline]
pub fn draw(key: u64, counter: u64) -> u64 {
    splitmix64(key ^ splitmix64(counter))
}

/// Uniform in [0, 1) with 53 random bits.
#[inline]
pub fn unit(key: u64, counter: u64) -> f64 {
    (draw(key, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Bernoulli(p) as a 0.0/1.0 loss. p = 0 and p = 1 are exact.
#[inline]
pub fn bernoulli(key: u64, counter: u64, p: f64) -> f64 {
    if unit(key, counter) < p {
        1.0
    } else {
        0.0
    }
}

/// Sequential convenience over one stream; just tracks the counter.
#[derive(Debug, Clone)]
pub struct Substream {
    key: u64,
    counter: u64,
}

impl Substream {
    pub fn new(seed: u64, ids: &[u64]) -> Self {
        Substream {
            key: stream_key(seed, ids),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = draw(self.key, self.counter);
        self.counter += 1;
        v
    }

    pub fn next_unit(&mut self) -> f64 {
        let v = unit(self.key, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in 0..n.
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // multiply-shift; bias is negligible at simulation scale
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
