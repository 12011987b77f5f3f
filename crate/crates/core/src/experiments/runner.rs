//! Deterministic parallel Monte-Carlo execution.
//!
//! Trial `t` of sweep point `p` draws from its own stream seeded by
//! `derive_seed(master, [p, t])`, and results come back in trial order, so the
//! outcome does not depend on the number of worker threads.

use rayon::prelude::*;

use crate::random::{derive_seed, stream, Stream};

pub fn run_trials<T, F>(master: u64, point: u64, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream) -> T + Sync,
{
    (0..trials as u64).into_par_iter().map(|t| f(&mut stream(derive_seed(master, &[point, t])))).collect()
}

/// Same as [`run_trials`] for fallible trials; the first error in trial order wins.
pub fn try_run_trials<T, E, F>(master: u64, point: u64, trials: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(&mut Stream) -> Result<T, E> + Sync,
{
    run_trials(master, point, trials, f).into_iter().collect()
}

/// Element-wise sum of equal-length rows, accumulated in row order.
pub fn ordered_sum<const N: usize>(rows: &[[f64; N]]) -> [f64; N] {
    rows.iter().fold([0.0; N], |mut acc, r| {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
        acc
    })
}
