use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8, whose output is specified bit-for-bit, so the same
/// pair yields the same samples on every platform. Independent work units
/// (Monte Carlo trials, users, noise draws) each get their own stream id.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream for a tuple of indices, e.g. `(trial, snr_index, user, purpose)`.
    pub fn derived(seed: u64, indices: &[u64]) -> Self {
        Self::new(seed, stream_id_for(indices))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// One draw from CN(0, variance).
    #[inline]
    pub fn complex_normal(&mut self, variance: f64) -> Complex64 {
        let scale = (0.5 * variance).sqrt();
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re * scale, im * scale)
    }

    pub fn complex_normal_vec(&mut self, len: usize, variance: f64) -> Vec<Complex64> {
        (0..len).map(|_| self.complex_normal(variance)).collect()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_id_for(indices: &[u64]) -> u64 {
    indices.iter().fold(0x9e37_79b9_7f4a_7c15, |acc, &x| {
        mix(acc ^ mix(x.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

/// Matrix with i.i.d. CN(0, variance) entries.
pub fn sample_complex_gaussian(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::param(format!("variance must be positive, got {variance}")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::shape(format!("empty matrix {rows}x{cols}")));
    }
    let data = rng.complex_normal_vec(rows * cols, variance);
    Ok(ComplexMatrix::from_vec_unchecked(rows, cols, data))
}
