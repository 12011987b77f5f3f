//! AB and AA OFDM estimators and their MSE matrices.
//!
//! The printed forms invert matrices the size of the observation vector. The
//! estimator objects and `*_trace_*` functions use the equivalent parameter-size
//! forms `(c₃I + ρc₄BᴴB)⁻¹` and `(I + ρMᴴM)⁻¹`.

use crate::channel::RfChain;
use crate::estimate_sc::{EstimateError, Result};
use crate::matrixkit::{hermitian_solve, CMat, C64};

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(EstimateError::InvalidArgument(format!("rho = {rho} must be non-negative")))
    }
}

/// `tr(A·B)`.
fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// `c₃ = (B/K)·k_bTβ²(Z₀ + 4(N_f − 1)R_in)` and the per-tap channel power
/// `c₄ = tr(C₁C₁ᴴ)/(K·N_rN_t·L)`.
pub fn ofdm_constants(c1: &CMat, subcarriers: usize, assumed_taps: usize, chain: &RfChain) -> (f64, f64) {
    let c3 = chain.bandwidth / subcarriers as f64 * chain.matched_density();
    let c4 = c1.fro_norm_sqr() / (c1.rows() * assumed_taps) as f64;
    (c3, c4)
}

/// `R_𝗛eff = C₁C₁ᴴ` together with `c₃` and `c₄`.
pub fn freq_covariance_and_constants(
    c1: &CMat,
    subcarriers: usize,
    assumed_taps: usize,
    chain: &RfChain,
) -> (CMat, f64, f64) {
    let (c3, c4) = ofdm_constants(c1, subcarriers, assumed_taps, chain);
    (c1.mul_adjoint(c1).hermitian_part(), c3, c4)
}

/// `vec(Ĥ̄_eff) = W_ABᴴ·ȳ` with `W_AB = √ρ(c₃I + ρc₄BBᴴ)⁻¹B·c₄`, evaluated as printed.
pub fn ab_estimate_ofdm(y_bar: &[C64], b: &CMat, rho: f64, c3: f64, c4: f64) -> Result<Vec<C64>> {
    check_rho(rho)?;
    if y_bar.len() != b.rows() {
        return Err(EstimateError::DimensionMismatch("observation length".into()));
    }
    let sigma = (&CMat::identity(b.rows()).scale_re(c3) + &b.mul_adjoint(b).scale_re(rho * c4)).hermitian_part();
    let w = hermitian_solve(&sigma, b)?.scale_re(rho.sqrt() * c4);
    Ok(w.adjoint().mul_vec(y_bar))
}

/// Four-term AB MSE in the frequency domain, evaluated as printed:
/// `R − ρR·B′ᴴΣ̃⁻¹B·R̃·C₂ᴴ − ρC₂R̃ᴴBᴴΣ̃⁻ᴴB′Rᴴ + ρC₂R̃ᴴBᴴΣ̃⁻ᴴ(R_n + ρB′RB′ᴴ)Σ̃⁻¹BR̃C₂ᴴ`
/// with `Σ̃ = c₃I + ρc₄BBᴴ` and `R̃ = c₄I`.
#[allow(clippy::too_many_arguments)]
pub fn ab_mse_ofdm(
    b: &CMat,
    b_prime: &CMat,
    c2: &CMat,
    rho: f64,
    c3: f64,
    c4: f64,
    r_true: &CMat,
    n_true: &CMat,
) -> Result<CMat> {
    check_rho(rho)?;
    let n = b.rows();
    if b_prime.rows() != n || n_true.shape() != (n, n) || r_true.shape() != (b_prime.cols(), b_prime.cols()) {
        return Err(EstimateError::DimensionMismatch("OFDM MSE operands do not conform".into()));
    }
    if c2.shape() != (r_true.rows(), b.cols()) {
        return Err(EstimateError::DimensionMismatch("C₂ does not conform".into()));
    }
    let r_tilde = CMat::identity(b.cols()).scale_re(c4);
    let sigma = (&CMat::identity(n).scale_re(c3) + &(&(b * &r_tilde) * &b.adjoint()).scale_re(rho)).hermitian_part();
    // Σ̃⁻¹·B·R̃·C₂ᴴ
    let g = hermitian_solve(&sigma, &(&(b * &r_tilde) * &c2.adjoint()))?;
    let term1 = &(r_true * &b_prime.adjoint()) * &g;
    let term2 = term1.adjoint();
    let sigma_true = n_true + &(&(b_prime * r_true) * &b_prime.adjoint()).scale_re(rho);
    let term3 = g.adjoint_mul(&(&sigma_true * &g));
    Ok((&(r_true - &term1.scale_re(rho)) - &(&term2.scale_re(rho) - &term3.scale_re(rho))).hermitian_part())
}

/// Antenna blind OFDM estimator in parameter-size form.
#[derive(Debug, Clone)]
pub struct AbOfdm {
    /// `√ρc₄(c₃I + ρc₄BᴴB)⁻¹Bᴴ`, equal to `W_ABᴴ`.
    g_h: CMat,
    sigma_p: CMat,
    c2: CMat,
    rho: f64,
    c4: f64,
}

impl AbOfdm {
    pub fn new(b: &CMat, c2: &CMat, rho: f64, c3: f64, c4: f64) -> Result<Self> {
        check_rho(rho)?;
        if c2.cols() != b.cols() {
            return Err(EstimateError::DimensionMismatch("C₂ does not match B".into()));
        }
        let sigma_p = (&CMat::identity(b.cols()).scale_re(c3) + &b.adjoint_mul(b).scale_re(rho * c4)).hermitian_part();
        let g_h = hermitian_solve(&sigma_p, &b.adjoint())?.scale_re(rho.sqrt() * c4);
        Ok(Self { g_h, sigma_p, c2: c2.clone(), rho, c4 })
    }

    /// `vec(Ĥ̄_eff)` in the time domain.
    pub fn estimate_time(&self, y_bar: &[C64]) -> Result<Vec<C64>> {
        if y_bar.len() != self.g_h.cols() {
            return Err(EstimateError::DimensionMismatch("observation length".into()));
        }
        Ok(self.g_h.mul_vec(y_bar))
    }

    /// `C₂·vec(Ĥ̄_eff)`.
    pub fn estimate_freq(&self, y_bar: &[C64]) -> Result<Vec<C64>> {
        Ok(self.c2.mul_vec(&self.estimate_time(y_bar)?))
    }

    /// `tr(E_AB,eff)` when the data follow `ȳ = √ρ·V·vec(H̄) + n̄` with
    /// `vec(𝗛̄_eff) = C₁·vec(H̄)` and per-subcarrier noise `r_n[k]`.
    pub fn mse_trace(&self, b: &CMat, v: &CMat, c1_true: &CMat, r_n: &[CMat]) -> Result<f64> {
        ab_mse_trace_ofdm(self, b, v, c1_true, r_n)
    }
}

/// Parameter-size evaluation of `tr(E_AB,eff)`:
/// `‖C₁ − √ρC₂GᴴV‖²_F + tr(C₂ᴴC₂·GᴴR_nG)`.
pub fn ab_mse_trace_ofdm(est: &AbOfdm, b: &CMat, v: &CMat, c1_true: &CMat, r_n: &[CMat]) -> Result<f64> {
    let n = b.rows();
    let n_r = r_n.first().map_or(0, CMat::rows);
    if v.rows() != n
        || c1_true.cols() != v.cols()
        || c1_true.rows() != est.c2.rows()
        || n_r == 0
        || !n.is_multiple_of(n_r)
    {
        return Err(EstimateError::DimensionMismatch("OFDM MSE operands do not conform".into()));
    }
    let gv = est.g_h.try_mul(v)?;
    let bias = c1_true - &(&est.c2 * &gv).scale_re(est.rho.sqrt());
    let mut nb = CMat::zeros(n, b.cols());
    for blk in 0..n / n_r {
        let rows = b.submatrix(blk * n_r, 0, n_r, b.cols());
        nb.set_block(blk * n_r, 0, &(&r_n[blk % r_n.len()] * &rows));
    }
    // GᴴR_nG = ρc₄²·Σ_p⁻¹(BᴴR_nB)Σ_p⁻¹
    let inner = hermitian_solve(&est.sigma_p, &b.adjoint_mul(&nb))?;
    let noise = hermitian_solve(&est.sigma_p, &inner.adjoint())?.adjoint().scale_re(est.rho * est.c4 * est.c4);
    let c2g = est.c2.adjoint_mul(&est.c2);
    Ok(bias.fro_norm_sqr() + trace_prod(&c2g, &noise).re)
}

/// `E_AA = I − ρMᴴ(I + ρMMᴴ)⁻¹M` and `E_AA,eff = C₁·E_AA·C₁ᴴ`, evaluated as printed.
pub fn aa_mse_ofdm(m: &CMat, rho: f64, c1: &CMat) -> Result<(CMat, CMat)> {
    check_rho(rho)?;
    if c1.cols() != m.cols() {
        return Err(EstimateError::DimensionMismatch("C₁ does not match M".into()));
    }
    let sigma = (&CMat::identity(m.rows()) + &m.mul_adjoint(m).scale_re(rho)).hermitian_part();
    let g = hermitian_solve(&sigma, m)?;
    let e = (&CMat::identity(m.cols()) - &m.adjoint_mul(&g).scale_re(rho)).hermitian_part();
    let e_eff = (c1 * &e).mul_adjoint(c1).hermitian_part();
    Ok((e, e_eff))
}

/// `tr(C₁(I + ρMᴴM)⁻¹C₁ᴴ)`.
pub fn aa_mse_trace_ofdm(m: &CMat, rho: f64, c1: &CMat) -> Result<f64> {
    Ok(AaOfdm::new(m, c1, rho)?.mse_trace())
}

/// Antenna aware OFDM estimator in parameter-size form.
#[derive(Debug, Clone)]
pub struct AaOfdm {
    /// `√ρ(I + ρMᴴM)⁻¹Mᴴ`, equal to `W_AAᴴ`.
    g_h: CMat,
    /// `E_AA = (I + ρMᴴM)⁻¹`.
    e: CMat,
    c1: CMat,
}

impl AaOfdm {
    pub fn new(m: &CMat, c1: &CMat, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        if c1.cols() != m.cols() {
            return Err(EstimateError::DimensionMismatch("C₁ does not match M".into()));
        }
        let sigma = (&CMat::identity(m.cols()) + &m.adjoint_mul(m).scale_re(rho)).hermitian_part();
        let e = hermitian_solve(&sigma, &CMat::identity(m.cols()))?.hermitian_part();
        let g_h = (&e * &m.adjoint()).scale_re(rho.sqrt());
        Ok(Self { g_h, e, c1: c1.clone() })
    }

    /// `vec(Ĥ̄)` from whitened observations.
    pub fn estimate_taps(&self, y_white: &[C64]) -> Result<Vec<C64>> {
        if y_white.len() != self.g_h.cols() {
            return Err(EstimateError::DimensionMismatch("observation length".into()));
        }
        Ok(self.g_h.mul_vec(y_white))
    }

    /// `C₁·vec(Ĥ̄)`.
    pub fn estimate_freq(&self, y_white: &[C64]) -> Result<Vec<C64>> {
        Ok(self.c1.mul_vec(&self.estimate_taps(y_white)?))
    }

    pub fn mse(&self) -> &CMat {
        &self.e
    }

    pub fn mse_trace(&self) -> f64 {
        trace_prod(&self.c1.adjoint_mul(&self.c1), &self.e).re
    }
}
