//! Scalar figures of merit.

use super::runner::run_trials;
use crate::matrixkit::{cholesky_lower, CMat, LinalgError, C64};
use crate::random::{bpsk_matrix, colored_noise, Stream};

/// `E{‖√ρ·H·x‖²} / E{‖n‖²}` over `trials` draws of the channel, i.i.d. BPSK
/// `x` and noise with covariance `r_n`.
pub fn empirical_snr<F>(draw: F, r_n: &CMat, rho: f64, trials: usize, seed: u64) -> Result<f64, LinalgError>
where
    F: Fn(&mut Stream) -> CMat + Sync,
{
    let chol = cholesky_lower(r_n)?;
    let parts = run_trials(seed, 0, trials, |rng| {
        let h = draw(rng);
        let x = bpsk_matrix(rng, h.cols(), 1).column(0);
        let s: f64 = h.mul_vec(&x).iter().map(|v| v.norm_sqr()).sum::<f64>() * rho;
        let n: f64 = colored_noise(rng, &chol).iter().map(|v| v.norm_sqr()).sum();
        (s, n)
    });
    let (s, n) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    Ok(s / n)
}

/// `Σ‖x̂ − x‖² / Σ‖x‖²` over paired estimates and truths.
pub fn nmse(estimates: &[Vec<C64>], truths: &[Vec<C64>]) -> f64 {
    let mut err = 0.0;
    let mut pow = 0.0;
    for (e, t) in estimates.iter().zip(truths) {
        err += e.iter().zip(t).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        pow += t.iter().map(|b| b.norm_sqr()).sum::<f64>();
    }
    err / pow
}

/// `tr(E) / tr(R)`.
pub fn theoretical_nmse(e: &CMat, r: &CMat) -> f64 {
    e.trace().re / r.trace().re
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va * vb).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}
