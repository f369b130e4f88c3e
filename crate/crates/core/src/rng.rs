//! Seedable, splittable random streams.
//!
//! Every stochastic operation takes an explicit [`RngStream`]. A stream is a
//! ChaCha20 generator keyed by a 64-bit seed and positioned on one of its
//! 2^64 independent word streams, so a `(seed, stream id)` pair names a
//! reproducible sequence and distinct ids never overlap.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream { inner }
    }

    /// Stream dedicated to one Monte Carlo cell. The id packs the SNR index
    /// into the high word and the trial index into the low word, which is
    /// injective as long as both fit in 32 bits.
    pub fn for_cell(seed: u64, trial_index: u32, snr_index: u32) -> Self {
        Self::with_stream(seed, cell_stream_id(trial_index, snr_index))
    }

    pub fn stream_id(&self) -> u64 {
        self.inner.get_stream()
    }
}

pub fn cell_stream_id(trial_index: u32, snr_index: u32) -> u64 {
    (u64::from(snr_index) << 32) | u64::from(trial_index)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
