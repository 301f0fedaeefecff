//! Counter-based random streams.
//!
//! Draw `i` of stream `s` under seed `seed` is
//!
//! ```text
//! key    = mix64(seed ^ mix64(s + GAMMA))
//! bits_i = mix64(key + (i + 1) · GAMMA)        (wrapping u64 arithmetic)
//! ```
//!
//! where `GAMMA = 0x9E37_79B9_7F4A_7C15` and `mix64` is the SplitMix64
//! finaliser (`z ^= z >> 30; z *= 0xBF58_476D_1CE4_E5B9; z ^= z >> 27;
//! z *= 0x94D0_49BB_1331_11EB; z ^= z >> 31`). Streams are identified by
//! the FNV-1a 64-bit hash of a short ASCII label (see [`stream_id`]).
//!
//! Uniforms take the top 53 bits: `u = (bits >> 11) · 2⁻⁵³ ∈ [0, 1)`.
//! Normals use the cosine branch of Box–Muller on two consecutive draws:
//! `z = sqrt(−2 ln(1 − u₁)) · cos(2π u₂)`.

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a 64-bit hash of a label.
pub fn stream_id(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// One independent stream of draws.
#[derive(Clone, Debug)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: mix64(seed ^ mix64(stream.wrapping_add(GAMMA))),
            counter: 0,
        }
    }

    pub fn named(seed: u64, label: &str) -> Self {
        Self::new(seed, stream_id(label))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn fill_uniform(&mut self, out: &mut [f64], lo: f64, hi: f64) {
        for v in out {
            *v = self.uniform_in(lo, hi);
        }
    }

    pub fn fill_normal(&mut self, out: &mut [f64], scale: f64) {
        for v in out {
            *v = scale * self.normal();
        }
    }
}
