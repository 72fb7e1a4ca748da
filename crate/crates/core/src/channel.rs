//! BPSK over AWGN with the all-zero codeword, and reproducible random streams.
//!
//! Every random draw in the toolkit comes from a [`ChaCha8Rng`] selected by a
//! master seed plus a stream key, so results never depend on how work is
//! split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub ebno_db: f64,
    pub rate: f64,
}

impl ChannelParams {
    pub fn new(ebno_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidInput(format!("code rate {rate} outside (0, 1)")));
        }
        if !ebno_db.is_finite() {
            return Err(Error::InvalidInput(format!("Eb/N0 {ebno_db} dB is not finite")));
        }
        Ok(Self { ebno_db, rate })
    }

    /// Noise variance `1 / (2 R 10^(Eb/N0 / 10))` for unit-energy BPSK.
    pub fn sigma2(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebno_db / 10.0))
    }

    /// Scale factor turning a received sample into an LLR.
    pub fn llr_scale(&self) -> f64 {
        2.0 / self.sigma2()
    }

    /// Fills `out` with channel LLRs `2y / sigma^2` for `y = 1 + noise`.
    pub fn fill_llrs<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) {
        let sigma = self.sigma2().sqrt();
        let scale = self.llr_scale();
        for llr in out.iter_mut() {
            let noise: f64 = rng.sample(StandardNormal);
            *llr = scale * (1.0 + sigma * noise);
        }
    }
}

/// Channel LLRs of `n` all-zero-codeword symbols.
pub fn llr_vector<R: Rng + ?Sized>(n: usize, params: &ChannelParams, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; n];
    params.fill_llrs(&mut out, rng);
    out
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Folds a list of integers into a single stream identifier.
pub fn stream_key(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// The random stream `(seed, key)`. Two distinct keys give independent
/// ChaCha keystreams.
pub fn stream_rng(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_key(key));
    rng
}

/// Stream domains, so that different consumers never share draws.
pub mod domain {
    pub const SIMULATION: u64 = 1;
    pub const ACTIVE_COLLECTION: u64 = 2;
    pub const VALIDATION: u64 = 3;
    pub const EP_COLLECTION: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const TRAINING_BATCH: u64 = 6;
}
