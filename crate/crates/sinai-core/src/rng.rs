//! Counter-based random number generation.
//!
//! Everything stochastic in this crate flows from 64-bit seeds through the
//! two primitives here:
//!
//! * [`site_u64`] is a pure function of `(key, counter)`. Environment sites
//!   use it with the site index as the counter, which is what makes window
//!   extension deterministic: site `x` has the same draw no matter in which
//!   order, or from which window, it is materialized.
//! * [`Stream`] is a sequential generator for consumers that just need a
//!   stream of uniforms (walk steps, rejection sampling). A stream seeded
//!   from `mix(master, replicate)` is independent of every other replicate's
//!   stream for Monte Carlo purposes.
//!
//! The mixer is the SplitMix64 finalizer (Stafford's mix13 variant), driven
//! by a Weyl sequence with the golden-ratio increment. It is the standard
//! counter-mode construction: cheap (a few multiplies), full-period in the
//! counter, and statistically clean for simulation work.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and an index. Used for per-replicate
/// streams and for domain separation between unrelated consumers of a master
/// seed.
#[inline]
pub fn mix(seed: u64, k: u64) -> u64 {
    // Pre-mix the seed so that (seed, k) and (seed + GOLDEN, k - 1) do not
    // alias through the Weyl sequence.
    mix64(mix64(seed ^ 0x6A09_E667_F3BC_C909).wrapping_add(GOLDEN.wrapping_mul(k)))
}

/// Pure site draw: the value depends only on `(key, site)`.
#[inline]
pub fn site_u64(key: u64, site: i64) -> u64 {
    mix64(mix64(key).wrapping_add(GOLDEN.wrapping_mul(site as u64)))
}

/// Map a u64 to a double in `[0, 1)` using the top 53 bits.
#[inline]
pub fn u64_to_f64(z: u64) -> f64 {
    (z >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Sequential SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { state: mix64(seed ^ 0xBB67_AE85_84CA_A73B) }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        u64_to_f64(self.next_u64())
    }

    /// One biased coin flip: true with probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}
