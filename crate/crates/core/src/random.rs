//! Seeded random streams shared by the generators and Monte-Carlo workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrixkit::{CMat, C64};

/// Random stream type used everywhere in the crate.
pub type Stream = ChaCha8Rng;

/// Opens a stream from a 64-bit seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a master seed and a path of counters
/// (for example sweep point and trial index).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(master), |acc, &c| splitmix(acc ^ splitmix(c.wrapping_add(0xA5A5))))
}

/// One CN(0, 1) sample.
pub fn complex_normal(rng: &mut Stream) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0, 1) entries.
pub fn complex_normal_matrix(rng: &mut Stream, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Matrix with i.i.d. equiprobable ±1 entries.
pub fn bpsk_matrix(rng: &mut Stream, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| C64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
}

/// Circularly-symmetric complex Gaussian vector with covariance `L·Lᴴ`.
pub fn colored_noise(rng: &mut Stream, chol: &CMat) -> Vec<C64> {
    let w: Vec<C64> = (0..chol.cols()).map(|_| complex_normal(rng)).collect();
    chol.mul_vec(&w)
}
