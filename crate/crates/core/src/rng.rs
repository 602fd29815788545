//! Deterministic pseudo-random streams.
//!
//! Every consumer of randomness (per-station backoff draws, per-link loss
//! lotteries, per-session traffic processes) owns its own [`SimRng`] derived
//! from the run seed and a stable label.  Streams therefore never shift when
//! unrelated parts of a scenario change, which keeps paired-seed comparisons
//! between algorithms meaningful.
//!
//! The generator is splitmix64: tiny, fast, and with 64-bit state that is
//! fully determined by the derivation labels — identical across platforms.

/// Stream labels.  Kept in one place so derivations never collide.
pub const STREAM_BACKOFF: u64 = 0x01;
pub const STREAM_LINK_LOSS: u64 = 0x02;
pub const STREAM_TRAFFIC: u64 = 0x03;
pub const STREAM_ORACLE: u64 = 0x04;

#[derive(Clone, Debug)]
pub struct SimRng {
    state: u64,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SimRng {
    /// A root stream seeded directly.
    pub fn new(seed: u64) -> Self {
        SimRng { state: seed }
    }

    /// Derive an independent stream from `(seed, label, a, b)`.
    ///
    /// The tuple is absorbed through the output function so that nearby seeds
    /// and labels land in unrelated parts of the state space.
    pub fn substream(seed: u64, label: u64, a: u64, b: u64) -> Self {
        let mut s = seed;
        let mut acc = splitmix64(&mut s);
        s ^= label.wrapping_mul(0xA24B_AED4_963E_E407);
        acc ^= splitmix64(&mut s);
        s ^= a.wrapping_mul(0x9FB2_1C65_1E98_DF25);
        acc ^= splitmix64(&mut s);
        s ^= b.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        acc ^= splitmix64(&mut s);
        SimRng { state: acc }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        splitmix64(&mut self.state)
    }

    /// Uniform integer in `[0, n)`, unbiased via rejection sampling.
    #[inline]
    pub fn uniform(&mut self, n: u32) -> u32 {
        assert!(n > 0, "uniform range must be non-empty");
        let n = n as u64;
        let limit = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < limit {
                return (v % n) as u32;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponentially distributed value with the given mean (seconds).
    pub fn exp_secs(&mut self, mean: f64) -> f64 {
        debug_assert!(mean > 0.0);
        let u = self.unit_f64();
        -mean * (1.0 - u).ln()
    }

    /// Bernoulli draw.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit_f64() < p
    }
}
