//! OFDM channel model and estimators.
//!
//! Subcarrier `k` sees `𝗛_eff[k] = 𝗤[k]·𝗛[k]·𝗙[k]` with `𝗛[k]` the length-`K`
//! DFT of `L` propagation taps. Observations `y[k,t]` are stacked subcarrier
//! first, then time slot, so block `t·K + k` of `ȳ` holds `y[k,t]`.
//!
//! Vectorized channels order receive antenna fastest, then transmit antenna,
//! then tap (time domain) or subcarrier (frequency domain).

mod estimators;
mod stacking;

use crate::channel::{subcarrier_noise, ChannelError, RfChain};
use crate::estimate_sc::{EstimateError, Result};
use crate::matrixkit::{cholesky_lower, inverse, CMat, LinalgError, C64};
use crate::random::{bpsk_matrix, colored_noise, complex_normal_matrix, Stream};

pub use estimators::{
    aa_mse_ofdm, aa_mse_trace_ofdm, ab_estimate_ofdm, ab_mse_ofdm, ab_mse_trace_ofdm, freq_covariance_and_constants,
    ofdm_constants, AaOfdm, AbOfdm,
};
pub use stacking::{
    b_prime_matrix, build_stacking, c1_matrix, c2_matrix, d_matrix, partial_dft, sensing_matrix,
    subcarrier_permutation, tap_permutation, McStacking,
};

/// Subcarrier frequencies `f_k = f_start + k·B/K`.
pub fn subcarrier_grid(f_start: f64, bandwidth: f64, subcarriers: usize) -> Result<Vec<f64>> {
    if subcarriers == 0 || !(bandwidth > 0.0) || !(f_start > 0.0) {
        return Err(EstimateError::InvalidArgument("subcarrier grid needs K ≥ 1 and positive band".into()));
    }
    Ok((0..subcarriers).map(|k| f_start + k as f64 * bandwidth / subcarriers as f64).collect())
}

fn nonpassive(e: LinalgError) -> EstimateError {
    match e {
        LinalgError::Singular { .. } => ChannelError::NonPassiveArray.into(),
        other => other.into(),
    }
}

/// `(I − SᴴS)⁻¹`.
pub fn inverse_front(s: &CMat) -> Result<CMat> {
    if !s.is_square() {
        return Err(EstimateError::DimensionMismatch("S must be square".into()));
    }
    let g = &CMat::identity(s.rows()) - &s.adjoint_mul(s);
    cholesky_lower(&g.hermitian_part()).map_err(|_| EstimateError::Channel(ChannelError::NonPassiveArray))?;
    Ok(inverse(&g).map_err(nonpassive)?.hermitian_part())
}

/// `𝗙[k] = (I − S_T(f_k)ᴴS_T(f_k))⁻¹` and `𝗤[k] = (β/4)(I − S_R(f_k)ᴴS_R(f_k))⁻¹`.
pub fn per_subcarrier_fronts(s_t: &[CMat], s_r: &[CMat], beta: f64) -> Result<(Vec<CMat>, Vec<CMat>)> {
    if s_t.len() != s_r.len() {
        return Err(EstimateError::DimensionMismatch("transmit and receive grids differ".into()));
    }
    let f = s_t.iter().map(inverse_front).collect::<Result<Vec<_>>>()?;
    let q = s_r.iter().map(|s| Ok(inverse_front(s)?.scale_re(beta / 4.0))).collect::<Result<Vec<_>>>()?;
    Ok((f, q))
}

/// Entrywise length-`K` DFT of the zero-padded taps.
pub fn taps_to_freq(taps: &[CMat], subcarriers: usize) -> Result<Vec<CMat>> {
    let Some(first) = taps.first() else {
        return Err(EstimateError::InvalidArgument("no taps".into()));
    };
    if taps.len() > subcarriers {
        return Err(EstimateError::InvalidArgument(format!("{} taps exceed {subcarriers} subcarriers", taps.len())));
    }
    if taps.iter().any(|h| h.shape() != first.shape()) {
        return Err(EstimateError::DimensionMismatch("taps differ in shape".into()));
    }
    Ok((0..subcarriers)
        .map(|k| {
            taps.iter().enumerate().fold(CMat::zeros(first.rows(), first.cols()), |acc, (l, h)| {
                &acc + &h.scale(twiddle(-((l * k) as f64), subcarriers))
            })
        })
        .collect())
}

/// `e^{j2π·m/K}`.
pub(crate) fn twiddle(m: f64, subcarriers: usize) -> C64 {
    let k = subcarriers as f64;
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (m.rem_euclid(k)) / k)
}

/// `L` independent taps with i.i.d. CN(0, 1) entries.
pub fn draw_taps(rng: &mut Stream, taps: usize, n_r: usize, n_t: usize) -> Vec<CMat> {
    (0..taps).map(|_| complex_normal_matrix(rng, n_r, n_t)).collect()
}

/// Per-subcarrier fronts and noise of an OFDM link.
#[derive(Debug, Clone)]
pub struct OfdmLink {
    pub freqs: Vec<f64>,
    pub f: Vec<CMat>,
    pub q: Vec<CMat>,
    /// `(B/K)·R_n(f_k)`.
    pub r_n: Vec<CMat>,
    pub chol: Vec<CMat>,
}

impl OfdmLink {
    /// Link from S-matrices sampled at the subcarrier frequencies.
    pub fn from_scattering(freqs: &[f64], s_t: &[CMat], s_r: &[CMat], chain: &RfChain) -> Result<Self> {
        if freqs.len() != s_t.len() || freqs.is_empty() {
            return Err(EstimateError::DimensionMismatch("one S-matrix per subcarrier is required".into()));
        }
        let (f, q) = per_subcarrier_fronts(s_t, s_r, chain.beta)?;
        let k = freqs.len();
        let r_n = s_r.iter().map(|s| Ok(subcarrier_noise(s, chain, k)?)).collect::<Result<Vec<_>>>()?;
        let chol = r_n.iter().map(|r| Ok(cholesky_lower(r)?)).collect::<Result<Vec<_>>>()?;
        Ok(Self { freqs: freqs.to_vec(), f, q, r_n, chol })
    }

    pub fn subcarriers(&self) -> usize {
        self.freqs.len()
    }

    pub fn n_t(&self) -> usize {
        self.f[0].rows()
    }

    pub fn n_r(&self) -> usize {
        self.q[0].rows()
    }

    /// `𝗛_eff[k]` for a tap realization.
    pub fn effective_freq(&self, taps: &[CMat]) -> Result<Vec<CMat>> {
        let h = taps_to_freq(taps, self.subcarriers())?;
        Ok(h.iter().enumerate().map(|(k, h)| &(&self.q[k] * h) * &self.f[k]).collect())
    }
}

/// Pilot symbols `x[k,t]`, one `N_t × L_t` matrix per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmPilots {
    per_k: Vec<CMat>,
}

impl OfdmPilots {
    pub fn new(per_k: Vec<CMat>) -> Result<Self> {
        let Some(first) = per_k.first() else {
            return Err(EstimateError::InvalidArgument("no subcarriers".into()));
        };
        if first.rows() == 0 || first.cols() == 0 || per_k.iter().any(|x| x.shape() != first.shape() || !x.is_finite())
        {
            return Err(EstimateError::InvalidArgument(
                "pilot blocks must be non-empty, finite and equal-sized".into(),
            ));
        }
        Ok(Self { per_k })
    }

    /// I.i.d. BPSK on every subcarrier and slot.
    pub fn bpsk(rng: &mut Stream, subcarriers: usize, n_t: usize, slots: usize) -> Result<Self> {
        Self::new((0..subcarriers).map(|_| bpsk_matrix(rng, n_t, slots)).collect())
    }

    /// Multiplies the symbols of subcarrier `k` by `gains[k]`.
    pub fn scaled(&self, gains: &[f64]) -> Result<Self> {
        if gains.len() != self.per_k.len() {
            return Err(EstimateError::DimensionMismatch("one gain per subcarrier".into()));
        }
        Self::new(self.per_k.iter().zip(gains).map(|(x, g)| x.scale_re(*g)).collect())
    }

    pub fn subcarriers(&self) -> usize {
        self.per_k.len()
    }

    pub fn n_t(&self) -> usize {
        self.per_k[0].rows()
    }

    pub fn slots(&self) -> usize {
        self.per_k[0].cols()
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.per_k[k]
    }

    pub fn symbol(&self, k: usize, t: usize) -> Vec<C64> {
        self.per_k[k].column(t)
    }
}

/// `ȳ` with `y[k,t] = √ρ·𝗛_eff[k]·x[k,t] + n[k,t]`.
pub fn observe_ofdm(
    h_eff: &[CMat],
    pilots: &OfdmPilots,
    rho: f64,
    chol: &[CMat],
    rng: &mut Stream,
) -> Result<Vec<C64>> {
    let k_n = pilots.subcarriers();
    if h_eff.len() != k_n || chol.len() != k_n {
        return Err(EstimateError::DimensionMismatch("one channel and noise factor per subcarrier".into()));
    }
    let n_r = h_eff[0].rows();
    let mut y = Vec::with_capacity(k_n * pilots.slots() * n_r);
    for t in 0..pilots.slots() {
        for k in 0..k_n {
            let s = h_eff[k].mul_vec(&pilots.symbol(k, t));
            let n = colored_noise(rng, &chol[k]);
            y.extend(s.iter().zip(&n).map(|(s, n)| s * rho.sqrt() + n));
        }
    }
    Ok(y)
}

/// Applies `𝗟[k]⁻¹` to every `y[k,t]` block of `ȳ`.
pub fn whiten_ofdm(y_bar: &[C64], chol: &[CMat], slots: usize) -> Result<Vec<C64>> {
    let k_n = chol.len();
    let n_r = chol.first().map_or(0, CMat::rows);
    if y_bar.len() != k_n * slots * n_r {
        return Err(EstimateError::DimensionMismatch("observation length".into()));
    }
    let inv: Vec<CMat> =
        chol.iter().map(|l| Ok(crate::matrixkit::solve_lower(l, &CMat::identity(n_r))?)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(y_bar.len());
    for (b, chunk) in y_bar.chunks(n_r).enumerate() {
        out.extend(inv[b % k_n].mul_vec(chunk));
    }
    Ok(out)
}

/// Splits a frequency-domain vector `vec(𝗛̄_eff)` into its `K` matrices.
pub fn split_freq(vec_freq: &[C64], n_r: usize, n_t: usize) -> Result<Vec<CMat>> {
    let block = n_r * n_t;
    if block == 0 || !vec_freq.len().is_multiple_of(block) {
        return Err(EstimateError::DimensionMismatch("vector does not tile into channel matrices".into()));
    }
    vec_freq.chunks(block).map(|c| Ok(CMat::unvec(c, n_r, n_t)?)).collect()
}

/// `vec(𝗛̄_eff)` from per-subcarrier matrices.
pub fn stack_freq(h: &[CMat]) -> Vec<C64> {
    h.iter().flat_map(CMat::vec).collect()
}

/// Time-domain effective taps `h_eff[n] = (1/K)·Σ_k 𝗤[k]𝗛[k]𝗙[k]·e^{j2πnk/K}`.
fn effective_time_response(f: &[CMat], q: &[CMat], taps: &[CMat]) -> Result<Vec<CMat>> {
    let k_n = f.len();
    let h = taps_to_freq(taps, k_n)?;
    let eff: Vec<CMat> = (0..k_n).map(|k| &(&q[k] * &h[k]) * &f[k]).collect();
    Ok((0..k_n)
        .map(|n| {
            eff.iter()
                .enumerate()
                .fold(CMat::zeros(eff[0].rows(), eff[0].cols()), |acc, (k, e)| {
                    &acc + &e.scale(twiddle((n * k) as f64, k_n))
                })
                .scale_re(1.0 / k_n as f64)
        })
        .collect())
}

/// Fraction of the effective channel's time-domain energy outside the first
/// `taps.len()` taps.
pub fn tap_spreading_energy(f: &[CMat], q: &[CMat], taps: &[CMat]) -> Result<f64> {
    if f.len() != q.len() {
        return Err(EstimateError::DimensionMismatch("front lists differ in length".into()));
    }
    let resp = effective_time_response(f, q, taps)?;
    let total: f64 = resp.iter().map(CMat::fro_norm_sqr).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(resp[taps.len()..].iter().map(CMat::fro_norm_sqr).sum::<f64>() / total)
}

/// Expected out-of-window energy fraction over i.i.d. CN(0, 1) taps of length `l`.
pub fn expected_tap_spreading(f: &[CMat], q: &[CMat], l: usize) -> Result<f64> {
    let k_n = f.len();
    if k_n == 0 || q.len() != k_n || l == 0 || l > k_n {
        return Err(EstimateError::InvalidArgument("need 1 ≤ L ≤ K and matching fronts".into()));
    }
    let d: Vec<CMat> = (0..k_n).map(|k| f[k].transpose().kron(&q[k])).collect();
    // ‖A_m‖², A_m = (1/K)·Σ_k e^{j2πmk/K}·(𝗙[k]ᵀ ⊗ 𝗤[k]).
    let a_norm: Vec<f64> = (0..k_n)
        .map(|m| {
            d.iter()
                .enumerate()
                .fold(CMat::zeros(d[0].rows(), d[0].cols()), |acc, (k, dk)| {
                    &acc + &dk.scale(twiddle((m * k) as f64, k_n))
                })
                .fro_norm_sqr()
                / (k_n * k_n) as f64
        })
        .collect();
    let energy = |n: usize| -> f64 { (0..l).map(|ell| a_norm[(n + k_n - ell) % k_n]).sum() };
    let total: f64 = (0..k_n).map(energy).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok((l..k_n).map(energy).sum::<f64>() / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::stream;

    #[test]
    fn grid_spacing() {
        let g = subcarrier_grid(1e9, 8e8, 4).unwrap();
        assert_eq!(g, vec![1e9, 1.2e9, 1.4e9, 1.6e9]);
        assert!(subcarrier_grid(1e9, 0.0, 4).is_err());
    }

    #[test]
    fn matched_fronts_identity() {
        let z = vec![CMat::zeros(2, 2); 3];
        let (f, q) = per_subcarrier_fronts(&z, &z, 4.0).unwrap();
        assert!(f.iter().chain(&q).all(|m| *m == CMat::identity(2)));
    }

    #[test]
    fn scalar_inverse_front() {
        let s = CMat::from_real_diag(&[0.6]);
        let f = inverse_front(&s).unwrap();
        assert!((f[(0, 0)].re - 1.0 / 0.64).abs() < 1e-14);
        assert!(inverse_front(&CMat::from_real_diag(&[1.0])).is_err());
    }

    #[test]
    fn single_tap_is_flat() {
        let h = complex_normal_matrix(&mut stream(2), 2, 3);
        let freq = taps_to_freq(std::slice::from_ref(&h), 6).unwrap();
        assert!(freq.iter().all(|m| *m == h));
    }

    #[test]
    fn delayed_tap_gives_phase_ramp() {
        let j = CMat::from_real(2, 2, &[1.0; 4]).unwrap();
        let freq = taps_to_freq(&[CMat::zeros(2, 2), j.clone()], 8).unwrap();
        for (k, m) in freq.iter().enumerate() {
            let expected = j.scale(C64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / 8.0));
            assert!(m.max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn whitening_inverts_cholesky() {
        let chol = vec![CMat::from_real_diag(&[2.0, 4.0]), CMat::from_real_diag(&[1.0, 0.5])];
        let y = vec![C64::new(2.0, 0.0), C64::new(4.0, 0.0), C64::new(1.0, 0.0), C64::new(0.5, 0.0)];
        let w = whiten_ofdm(&[y.clone(), y].concat(), &chol, 2).unwrap();
        assert!(w.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn flat_fronts_do_not_spread() {
        let f = vec![CMat::identity(2); 8];
        let q = vec![CMat::identity(2).scale_re(0.7); 8];
        let taps = draw_taps(&mut stream(4), 3, 2, 2);
        assert!(tap_spreading_energy(&f, &q, &taps).unwrap() < 1e-12);
        assert!(expected_tap_spreading(&f, &q, 3).unwrap() < 1e-12);
    }
}
