//! Effective channels, spatial correlations and noise covariances built from
//! array network parameters.
//!
//! The scattering description with matched source and load terminations is the
//! primary model: `H_eff = Q·H·F` with `H = R_R^{1/2}·H_w·R_T^{1/2}`. The
//! impedance description lives in [`impedance`] and is used to cross-check.

mod impedance;

use serde::{Deserialize, Serialize};

use crate::consts::{BOLTZMANN, SPEED_OF_LIGHT};
use crate::matrixkit::{cholesky_lower, hermitian_sqrt, CMat, LinalgError, C64};
use crate::random::{complex_normal_matrix, stream, Stream};

pub use impedance::{
    effective_channel_impedance, noise_covariance_impedance, open_circuit_z_rt, terminated_from_open_circuit,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("port {index} is not passive: diag(SᴴS) = {value}")]
    NonPassivePort { index: usize, value: f64 },
    #[error("array is not strictly passive: I − SᴴS is not positive definite")]
    NonPassiveArray,
    #[error("termination is singular (condition estimate {cond:.3e})")]
    SingularTermination { cond: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Receiver RF chain and noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfChain {
    /// LNA voltage gain β.
    pub beta: f64,
    /// Reference impedance Z₀ in ohms.
    pub z_ref: f64,
    /// LNA input resistance in ohms.
    pub r_in: f64,
    /// Noise figure (linear, ≥ 1).
    pub noise_figure: f64,
    /// Noise temperature in kelvin.
    pub temperature: f64,
    /// Bandwidth in Hz.
    pub bandwidth: f64,
}

impl Default for RfChain {
    fn default() -> Self {
        Self { beta: 4.0, z_ref: 50.0, r_in: 50.0, noise_figure: 2.0, temperature: 290.0, bandwidth: 5e6 }
    }
}

impl RfChain {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("beta", self.beta),
            ("z_ref", self.z_ref),
            ("r_in", self.r_in),
            ("temperature", self.temperature),
            ("bandwidth", self.bandwidth),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(ChannelError::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.noise_figure.is_finite() && self.noise_figure >= 1.0) {
            return Err(ChannelError::InvalidArgument(format!(
                "noise_figure = {} must be at least 1",
                self.noise_figure
            )));
        }
        Ok(())
    }

    /// Intrinsic amplifier noise density `4β²k_bT(N_f − 1)R_in`.
    pub fn intrinsic_density(&self) -> f64 {
        4.0 * self.beta.powi(2) * BOLTZMANN * self.temperature * (self.noise_figure - 1.0) * self.r_in
    }

    /// Noise density per port with perfectly matched antennas,
    /// `k_bTβ²(Z₀ + 4(N_f − 1)R_in)`.
    pub fn matched_density(&self) -> f64 {
        BOLTZMANN * self.temperature * self.beta.powi(2) * self.z_ref + self.intrinsic_density()
    }
}

/// `I − SᴴS`.
fn gram_complement(s: &CMat) -> Result<CMat> {
    if !s.is_square() {
        return Err(ChannelError::DimensionMismatch(format!("S must be square, got {}x{}", s.rows(), s.cols())));
    }
    Ok(&CMat::identity(s.rows()) - &s.adjoint_mul(s))
}

/// Diagonal of `I − SᴴS`, each entry checked positive.
fn port_efficiencies(s: &CMat) -> Result<Vec<f64>> {
    let g = gram_complement(s)?;
    (0..g.rows())
        .map(|i| {
            let e = g[(i, i)].re;
            if e > 0.0 {
                Ok(e)
            } else {
                Err(ChannelError::NonPassivePort { index: i, value: 1.0 - e })
            }
        })
        .collect()
}

/// `sqrt(I − diag(SᴴS))`.
pub fn port_front(s: &CMat) -> Result<CMat> {
    Ok(CMat::from_real_diag(&port_efficiencies(s)?.iter().map(|e| e.sqrt()).collect::<Vec<_>>()))
}

/// `F = sqrt(I − diag(S_TᴴS_T))` and `Q = (β/4)·sqrt(I − diag(S_RᴴS_R))`.
pub fn front_matrices(s_t: &CMat, s_r: &CMat, beta: f64) -> Result<(CMat, CMat)> {
    Ok((port_front(s_t)?, port_front(s_r)?.scale_re(beta / 4.0)))
}

/// Principal square root of `I − SᴴS` and the diagonal of `I − SᴴS`.
fn root_and_diag(s: &CMat) -> Result<(CMat, Vec<f64>)> {
    let g = gram_complement(s)?;
    cholesky_lower(&g.hermitian_part()).map_err(|_| ChannelError::NonPassiveArray)?;
    let diag = port_efficiencies(s)?;
    Ok((hermitian_sqrt(&g.hermitian_part())?, diag))
}

/// `(R_T^{1/2}, R_R^{1/2})` with
/// `R_R^{1/2} = (I − diag(S_RᴴS_R))^{−1/2}(I − S_RᴴS_R)^{1/2}` and
/// `R_T^{1/2} = (I − S_TᴴS_T)^{1/2}(I − diag(S_TᴴS_T))^{−1/2}`.
pub fn spatial_correlation_halves(s_t: &CMat, s_r: &CMat) -> Result<(CMat, CMat)> {
    let (gt, dt) = root_and_diag(s_t)?;
    let (gr, dr) = root_and_diag(s_r)?;
    let rt = CMat::from_fn(gt.rows(), gt.cols(), |i, j| gt[(i, j)] / dt[j].sqrt());
    let rr = CMat::from_fn(gr.rows(), gr.cols(), |i, j| gr[(i, j)] / dr[i].sqrt());
    Ok((rt, rr))
}

/// Noise power spectral density matrix of the scattering description with a
/// matched load: `k_bTβ²Z₀(I − S_RᴴS_R) + 4β²k_bT(N_f − 1)R_in·I`.
pub fn noise_covariance_scattering(s_r: &CMat, chain: &RfChain) -> Result<CMat> {
    chain.validate()?;
    let g = gram_complement(s_r)?;
    cholesky_lower(&g.hermitian_part()).map_err(|_| ChannelError::NonPassiveArray)?;
    let extrinsic = g.scale_re(BOLTZMANN * chain.temperature * chain.beta.powi(2) * chain.z_ref);
    Ok((&extrinsic + &CMat::identity(s_r.rows()).scale_re(chain.intrinsic_density())).hermitian_part())
}

/// Discrete single-carrier noise covariance `B·R_n(f_c)`.
pub fn single_carrier_noise(s_r: &CMat, chain: &RfChain) -> Result<CMat> {
    Ok(noise_covariance_scattering(s_r, chain)?.scale_re(chain.bandwidth))
}

/// Per-subcarrier noise covariance `(B/K)·R_n(f_k)`.
pub fn subcarrier_noise(s_r: &CMat, chain: &RfChain, subcarriers: usize) -> Result<CMat> {
    Ok(noise_covariance_scattering(s_r, chain)?.scale_re(chain.bandwidth / subcarriers as f64))
}

/// `(β/4)·sqrt(I − diag(S_RᴴS_R))·𝓗·sqrt(I − diag(S_TᴴS_T))`.
pub fn effective_channel_scattering(s_t: &CMat, s_r: &CMat, h_prop: &CMat, beta: f64) -> Result<CMat> {
    let (f, q) = front_matrices(s_t, s_r, beta)?;
    if h_prop.shape() != (q.cols(), f.rows()) {
        return Err(ChannelError::DimensionMismatch(format!(
            "propagation channel is {}x{}, arrays need {}x{}",
            h_prop.rows(),
            h_prop.cols(),
            q.cols(),
            f.rows()
        )));
    }
    Ok(&(&q * h_prop) * &f)
}

/// Line-of-sight channel `(c/(4πfd))·gain·1·1ᵀ` between `n_t` and `n_r` ports.
pub fn friis_los_channel(f: f64, d: f64, gain: C64, n_r: usize, n_t: usize) -> CMat {
    let scale = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f * d);
    CMat::from_fn(n_r, n_t, |_, _| gain * scale)
}

/// Extended Friis large-scale gain `(c/(4πf·d_ref))²·(d_ref/d)^α`.
pub fn large_scale_rho(f: f64, d: f64, d_ref: f64, alpha: f64) -> f64 {
    (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f * d_ref)).powi(2) * (d_ref / d).powf(alpha)
}

/// Covariances of the vectorized propagation and effective channels.
#[derive(Debug, Clone)]
pub struct VecCovariances {
    /// `R_H = (R_T^{1/2ᵀ}·R_T^{1/2*}) ⊗ (R_R^{1/2}·R_R^{1/2ᴴ})`.
    pub r_h: CMat,
    /// `R_Heff = T·R_H·Tᴴ`.
    pub r_heff: CMat,
    /// `T = Fᵀ ⊗ Q`.
    pub t: CMat,
}

pub fn vec_covariances(f: &CMat, q: &CMat, rt_half: &CMat, rr_half: &CMat) -> VecCovariances {
    let tx = rt_half.transpose() * rt_half.conj();
    let rx = rr_half.mul_adjoint(rr_half);
    let r_h = tx.kron(&rx).hermitian_part();
    let t = f.transpose().kron(q);
    let r_heff = (&t * &r_h).mul_adjoint(&t).hermitian_part();
    VecCovariances { r_h, r_heff, t }
}

/// Everything describing a single-carrier link at one frequency.
#[derive(Debug, Clone)]
pub struct LinkModel {
    pub f_c: f64,
    pub f: CMat,
    pub q: CMat,
    pub rt_half: CMat,
    pub rr_half: CMat,
    /// Discrete noise covariance `B·R_n(f_c)`.
    pub r_n: CMat,
    pub rho: f64,
}

impl LinkModel {
    /// Link from transmit and receive S-matrices at `f_c`.
    pub fn from_scattering(s_t: &CMat, s_r: &CMat, chain: &RfChain, rho: f64, f_c: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(ChannelError::InvalidArgument(format!("rho = {rho} must be positive")));
        }
        let (f, q) = front_matrices(s_t, s_r, chain.beta)?;
        let (rt_half, rr_half) = spatial_correlation_halves(s_t, s_r)?;
        let r_n = single_carrier_noise(s_r, chain)?;
        Ok(Self { f_c, f, q, rt_half, rr_half, r_n, rho })
    }

    pub fn n_t(&self) -> usize {
        self.f.rows()
    }

    pub fn n_r(&self) -> usize {
        self.q.rows()
    }

    pub fn covariances(&self) -> VecCovariances {
        vec_covariances(&self.f, &self.q, &self.rt_half, &self.rr_half)
    }

    /// Draws a channel realization from `rng`.
    pub fn draw(&self, rng: &mut Stream) -> ChannelRealization {
        draw_channel_with(&self.rt_half, &self.rr_half, &self.f, &self.q, rng)
    }
}

/// One channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub hw: CMat,
    pub h: CMat,
    pub h_eff: CMat,
}

/// Draws `H_w` with i.i.d. CN(0, 1) entries from a fresh stream seeded by `seed`.
pub fn draw_channel(rt_half: &CMat, rr_half: &CMat, f: &CMat, q: &CMat, seed: u64) -> ChannelRealization {
    draw_channel_with(rt_half, rr_half, f, q, &mut stream(seed))
}

/// Same as [`draw_channel`] but consuming an existing stream.
pub fn draw_channel_with(rt_half: &CMat, rr_half: &CMat, f: &CMat, q: &CMat, rng: &mut Stream) -> ChannelRealization {
    let hw = complex_normal_matrix(rng, rr_half.cols(), rt_half.rows());
    let h = &(rr_half * &hw) * rt_half;
    let h_eff = &(q * &h) * f;
    ChannelRealization { hw, h, h_eff }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn coupled() -> CMat {
        CMat::from_rows(&[vec![c(0.2, 0.1), c(0.3, -0.2)], vec![c(0.3, -0.2), c(-0.1, 0.25)]]).unwrap()
    }

    #[test]
    fn matched_fronts_are_identity() {
        let (f, q) = front_matrices(&CMat::zeros(3, 3), &CMat::zeros(2, 2), 4.0).unwrap();
        assert_eq!(f, CMat::identity(3));
        assert_eq!(q, CMat::identity(2));
    }

    #[test]
    fn scalar_front() {
        let s = CMat::from_real_diag(&[0.5]);
        let (f, _) = front_matrices(&s, &s, 4.0).unwrap();
        assert!((f[(0, 0)].re - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn front_is_column_norm() {
        let s = coupled();
        let (f, q) = front_matrices(&s, &s, 2.0).unwrap();
        for i in 0..2 {
            let col: f64 = (0..2).map(|k| s[(k, i)].norm_sqr()).sum();
            assert!((f[(i, i)].re - (1.0 - col).sqrt()).abs() < 1e-15);
            assert!((q[(i, i)].re - 0.5 * (1.0 - col).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn non_passive_port_rejected() {
        let s = CMat::from_real_diag(&[1.0, 0.2]);
        assert!(matches!(front_matrices(&s, &s, 4.0), Err(ChannelError::NonPassivePort { index: 0, .. })));
        let s = CMat::from_real(2, 2, &[0.7, 0.7, 0.7, 0.7]).unwrap();
        assert!(matches!(spatial_correlation_halves(&s, &s), Err(ChannelError::NonPassiveArray)));
    }

    #[test]
    fn halves_trivial_cases() {
        let (rt, rr) = spatial_correlation_halves(&CMat::zeros(2, 2), &CMat::zeros(3, 3)).unwrap();
        assert!(rt.max_abs_diff(&CMat::identity(2)) < 1e-15);
        assert!(rr.max_abs_diff(&CMat::identity(3)) < 1e-15);
        let d = CMat::from_real_diag(&[0.3, 0.6]);
        let (rt, rr) = spatial_correlation_halves(&d, &d).unwrap();
        assert!(rt.max_abs_diff(&CMat::identity(2)) < 1e-14);
        assert!(rr.max_abs_diff(&CMat::identity(2)) < 1e-14);
    }

    #[test]
    fn halves_have_unit_diagonal_correlation() {
        let (rt, rr) = spatial_correlation_halves(&coupled(), &coupled()).unwrap();
        let rx = rr.mul_adjoint(&rr);
        let tx = rt.adjoint_mul(&rt);
        for i in 0..2 {
            assert!((rx[(i, i)] - c(1.0, 0.0)).norm() < 1e-10);
            assert!((tx[(i, i)] - c(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn matched_channel_is_scaled_core() {
        let link =
            LinkModel::from_scattering(&CMat::zeros(2, 2), &CMat::zeros(2, 2), &RfChain::default(), 1.0, 1e9).unwrap();
        let a = draw_channel(&link.rt_half, &link.rr_half, &link.f, &link.q, 3);
        assert!(a.h_eff.max_abs_diff(&a.hw) < 1e-15);
        let b = draw_channel(&link.rt_half, &link.rr_half, &link.f, &link.q, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn scattering_channel_scalar_case() {
        let s = CMat::from_diag(&[c(0.3, 0.4)]);
        let h = CMat::from_diag(&[c(2.0, -1.0)]);
        let out = effective_channel_scattering(&s, &s, &h, 4.0).unwrap();
        assert!((out[(0, 0)] - c(2.0, -1.0) * 0.75).norm() < 1e-15);
        let same = effective_channel_scattering(&CMat::zeros(1, 1), &CMat::zeros(1, 1), &h, 4.0).unwrap();
        assert_eq!(same, h);
    }

    #[test]
    fn noise_covariance_examples() {
        let mut chain = RfChain { noise_figure: 1.0, ..RfChain::default() };
        let kt = BOLTZMANN * chain.temperature * chain.beta.powi(2);
        let r = noise_covariance_scattering(&CMat::zeros(2, 2), &chain).unwrap();
        assert!(r.max_abs_diff(&CMat::identity(2).scale_re(kt * chain.z_ref)) < 1e-30);
        chain.noise_figure = 2.0;
        let r2 = noise_covariance_scattering(&CMat::zeros(2, 2), &chain).unwrap();
        let extra = 4.0 * kt * chain.r_in;
        assert!((r2[(0, 0)].re - r[(0, 0)].re - extra).abs() < 1e-30);
        let s = coupled();
        let rc = noise_covariance_scattering(&s, &chain).unwrap();
        let g = s.adjoint_mul(&s);
        assert!((rc[(0, 1)] + g[(0, 1)] * (kt * chain.z_ref)).norm() < 1e-30);
        assert!(cholesky_lower(&rc).is_ok());
    }

    #[test]
    fn friis_examples() {
        let h = friis_los_channel(1e9, 1.0, c(1.0, 0.0), 2, 2);
        assert!((h[(1, 0)].re - 0.023873241463784303).abs() < 1e-12);
        let h2 = friis_los_channel(1e9, 2.0, c(1.0, 0.0), 2, 2);
        assert!(h2.max_abs_diff(&h.scale_re(0.5)) < 1e-18);
        assert_eq!(friis_los_channel(1e9, 1.0, c(0.0, 0.0), 2, 3).max_abs(), 0.0);
    }

    #[test]
    fn rho_examples() {
        let base = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * 1e9)).powi(2);
        assert!((large_scale_rho(1e9, 1.0, 1.0, 3.7) - base).abs() < 1e-18);
        let plain = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * 1e9 * 100.0)).powi(2);
        assert!((large_scale_rho(1e9, 100.0, 1.0, 2.0) - plain).abs() < 1e-20);
        assert!((large_scale_rho(1e9, 100.0, 1.0, 2.0) - 5.70e-8).abs() < 0.01e-8);
    }

    #[test]
    fn identity_covariances() {
        let i = CMat::identity(2);
        let v = vec_covariances(&i, &i, &i, &i);
        assert_eq!(v.r_h, CMat::identity(4));
        assert_eq!(v.r_heff, CMat::identity(4));
    }

    #[test]
    fn chain_validation() {
        assert!(RfChain::default().validate().is_ok());
        assert!(RfChain { noise_figure: 0.5, ..RfChain::default() }.validate().is_err());
        assert!(RfChain { bandwidth: 0.0, ..RfChain::default() }.validate().is_err());
    }
}
