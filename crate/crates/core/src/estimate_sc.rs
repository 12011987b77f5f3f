//! Single-carrier LMMSE channel estimation.
//!
//! The antenna blind (AB) estimator works on `ỹ = √ρ·A·vec(H_eff) + ñ` with
//! scaled-identity covariances `c₁I`, `c₂I`. The antenna aware (AA) estimator
//! whitens the noise and estimates the propagation channel through
//! `ỹ′ = √ρ·A′·vec(H) + ñ′`, then maps back with `T`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelError, LinkModel, RfChain};
use crate::matrixkit::{cholesky_lower, hermitian_solve, solve_lower, CMat, LinalgError, C64};
use crate::random::{bpsk_matrix, colored_noise, Stream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

pub type Result<T> = std::result::Result<T, EstimateError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ab,
    Aa,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ab => "AB",
            Method::Aa => "AA",
        })
    }
}

/// Pilot matrix `X` (`N_t × N_p`).
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    x: CMat,
}

impl PilotBlock {
    pub fn new(x: CMat) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(EstimateError::InvalidArgument("pilot block must be non-empty".into()));
        }
        if !x.is_finite() {
            return Err(EstimateError::InvalidArgument("pilot block has non-finite entries".into()));
        }
        Ok(Self { x })
    }

    /// I.i.d. BPSK pilots.
    pub fn bpsk(rng: &mut Stream, n_t: usize, n_p: usize) -> Result<Self> {
        Self::new(bpsk_matrix(rng, n_t, n_p))
    }

    /// First `n_t` rows of the Sylvester Hadamard matrix of order `n_p`, so
    /// `X·Xᴴ = n_p·I`. `n_p` must be a power of two not below `n_t`.
    pub fn orthogonal(n_t: usize, n_p: usize) -> Result<Self> {
        if !n_p.is_power_of_two() || n_p < n_t {
            return Err(EstimateError::InvalidArgument(format!(
                "orthogonal pilots need a power-of-two length of at least {n_t}, got {n_p}"
            )));
        }
        Self::new(CMat::from_fn(n_t, n_p, |i, j| C64::new(if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)))
    }

    pub fn x(&self) -> &CMat {
        &self.x
    }

    pub fn n_t(&self) -> usize {
        self.x.rows()
    }

    pub fn n_p(&self) -> usize {
        self.x.cols()
    }
}

/// An estimate of `vec(H_eff)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScEstimate {
    pub vec_h_eff_hat: Vec<C64>,
    pub method: Method,
}

/// Receives `Y = √ρ·H_eff·X + N` with noise columns drawn from `L·Lᴴ`.
pub fn observe(h_eff: &CMat, pilots: &PilotBlock, rho: f64, noise_chol: &CMat, rng: &mut Stream) -> Result<CMat> {
    if h_eff.cols() != pilots.n_t() || noise_chol.rows() != h_eff.rows() {
        return Err(EstimateError::DimensionMismatch("channel, pilots and noise do not conform".into()));
    }
    let mut y = (h_eff * pilots.x()).scale_re(rho.sqrt());
    for t in 0..pilots.n_p() {
        for (i, n) in colored_noise(rng, noise_chol).into_iter().enumerate() {
            y[(i, t)] += n;
        }
    }
    Ok(y)
}

/// `ỹ = vec(Y)` and `A = Xᵀ ⊗ I_{N_r}`.
pub fn stack_observations(y: &CMat, pilots: &PilotBlock) -> Result<(Vec<C64>, CMat)> {
    if y.cols() != pilots.n_p() {
        return Err(EstimateError::DimensionMismatch(format!(
            "Y has {} columns but there are {} pilots",
            y.cols(),
            pilots.n_p()
        )));
    }
    Ok((y.vec(), pilots.x().transpose().kron(&CMat::identity(y.rows()))))
}

/// `c₁ = B·k_bTβ²(Z₀ + 4(N_f − 1)R_in)` and `c₂ = tr(R_Heff)/(N_rN_t)`.
pub fn mismatch_constants(r_heff: &CMat, chain: &RfChain) -> (f64, f64) {
    (chain.bandwidth * chain.matched_density(), r_heff.trace().re / r_heff.rows() as f64)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(EstimateError::InvalidArgument(format!("rho = {rho} must be non-negative")))
    }
}

/// LMMSE weights `W = √ρ(R_n + ρ·A·R·Aᴴ)⁻¹·A·R` for `y = √ρ·A·h + n`.
pub fn lmmse_weights(a: &CMat, rho: f64, r_prior: &CMat, r_noise: &CMat) -> Result<CMat> {
    check_rho(rho)?;
    if r_prior.shape() != (a.cols(), a.cols()) || r_noise.shape() != (a.rows(), a.rows()) {
        return Err(EstimateError::DimensionMismatch("covariances do not conform to the sensing matrix".into()));
    }
    let ar = a * r_prior;
    let sigma = (r_noise + &ar.mul_adjoint(a).scale_re(rho)).hermitian_part();
    Ok(hermitian_solve(&sigma, &ar)?.scale_re(rho.sqrt()))
}

/// MSE matrix of the estimator built from assumed covariances `R̃`, `R̃_n`
/// when the data follow the true covariances `R`, `R_n`:
/// `R − ρR·Aᴴ·Σ̃⁻¹·A·R̃ − ρR̃ᴴ·Aᴴ·Σ̃⁻ᴴ·A·Rᴴ + ρR̃ᴴ·Aᴴ·Σ̃⁻ᴴ·(R_n + ρA·R·Aᴴ)·Σ̃⁻¹·A·R̃`
/// with `Σ̃ = R̃_n + ρA·R̃·Aᴴ`.
pub fn mismatched_mse(
    a: &CMat,
    rho: f64,
    r_assumed: &CMat,
    n_assumed: &CMat,
    r_true: &CMat,
    n_true: &CMat,
) -> Result<CMat> {
    check_rho(rho)?;
    let p = a.cols();
    let n = a.rows();
    for (m, d, name) in [(r_assumed, p, "R̃"), (r_true, p, "R"), (n_assumed, n, "R̃_n"), (n_true, n, "R_n")] {
        if m.shape() != (d, d) {
            return Err(EstimateError::DimensionMismatch(format!("{name} must be {d}x{d}")));
        }
    }
    let sigma_tilde = (n_assumed + &(&(a * r_assumed) * &a.adjoint()).scale_re(rho)).hermitian_part();
    let sigma_true = n_true + &(&(a * r_true) * &a.adjoint()).scale_re(rho);
    // Σ̃⁻¹·A·R̃
    let g = hermitian_solve(&sigma_tilde, &(a * r_assumed))?;
    let term1 = &(r_true * &a.adjoint()) * &g;
    let term2 = term1.adjoint();
    let term3 = g.adjoint_mul(&(&sigma_true * &g));
    Ok((&(r_true - &term1.scale_re(rho)) - &(&term2.scale_re(rho) - &term3.scale_re(rho))).hermitian_part())
}

/// Antenna blind estimator `W_ABᴴ` with `R̃_ñ = c₁I`, `R̃ = c₂I`.
#[derive(Debug, Clone)]
pub struct AbEstimator {
    w_h: CMat,
}

impl AbEstimator {
    pub fn new(a: &CMat, rho: f64, c1: f64, c2: f64) -> Result<Self> {
        let p = a.cols();
        let w = lmmse_weights(a, rho, &CMat::identity(p).scale_re(c2), &CMat::identity(a.rows()).scale_re(c1))?;
        Ok(Self { w_h: w.adjoint() })
    }

    pub fn apply(&self, y_tilde: &[C64]) -> Result<ScEstimate> {
        if y_tilde.len() != self.w_h.cols() {
            return Err(EstimateError::DimensionMismatch("observation length".into()));
        }
        Ok(ScEstimate { vec_h_eff_hat: self.w_h.mul_vec(y_tilde), method: Method::Ab })
    }
}

/// `vec(Ĥ_eff) = W_ABᴴ·ỹ`.
pub fn ab_estimate(y_tilde: &[C64], a: &CMat, rho: f64, c1: f64, c2: f64) -> Result<ScEstimate> {
    AbEstimator::new(a, rho, c1, c2)?.apply(y_tilde)
}

/// Four-term AB MSE matrix; `r_n_true` is the per-slot covariance, expanded
/// to `I_{N_p} ⊗ R_n`.
pub fn ab_mse_matrix(a: &CMat, rho: f64, c1: f64, c2: f64, r_heff_true: &CMat, r_n_true: &CMat) -> Result<CMat> {
    let n_r = r_n_true.rows();
    if n_r == 0 || !a.rows().is_multiple_of(n_r) {
        return Err(EstimateError::DimensionMismatch("noise covariance does not tile the observations".into()));
    }
    let n_true = CMat::identity(a.rows() / n_r).kron(r_n_true);
    mismatched_mse(
        a,
        rho,
        &CMat::identity(a.cols()).scale_re(c2),
        &CMat::identity(a.rows()).scale_re(c1),
        r_heff_true,
        &n_true,
    )
}

/// `A′ = (F·X)ᵀ ⊗ (L⁻¹·Q)`.
pub fn whitened_sensing(link: &LinkModel, pilots: &PilotBlock, noise_chol: &CMat) -> Result<CMat> {
    if pilots.n_t() != link.n_t() {
        return Err(EstimateError::DimensionMismatch("pilots do not match the transmit array".into()));
    }
    let p = solve_lower(noise_chol, &link.q)?;
    Ok((&link.f * pilots.x()).transpose().kron(&p))
}

/// Output of the antenna aware estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct AaOutput {
    /// `vec(Ĥ)`.
    pub vec_h_hat: Vec<C64>,
    pub estimate: ScEstimate,
}

/// Antenna aware estimator with precomputed whitening and weights.
#[derive(Debug, Clone)]
pub struct AaEstimator {
    noise_chol: CMat,
    a_prime: CMat,
    w_h: CMat,
    r_h: CMat,
    t: CMat,
    rho: f64,
}

impl AaEstimator {
    pub fn new(link: &LinkModel, pilots: &PilotBlock, rho: f64) -> Result<Self> {
        let noise_chol = cholesky_lower(&link.r_n)?;
        let a_prime = whitened_sensing(link, pilots, &noise_chol)?;
        let cov = link.covariances();
        let w = lmmse_weights(&a_prime, rho, &cov.r_h, &CMat::identity(a_prime.rows()))?;
        Ok(Self { noise_chol, a_prime, w_h: w.adjoint(), r_h: cov.r_h, t: cov.t, rho })
    }

    pub fn a_prime(&self) -> &CMat {
        &self.a_prime
    }

    pub fn noise_chol(&self) -> &CMat {
        &self.noise_chol
    }

    /// Whitens `Y`, estimates `vec(H)` and maps it through `T`.
    pub fn apply(&self, y: &CMat) -> Result<AaOutput> {
        if y.rows() != self.noise_chol.rows() || y.rows() * y.cols() != self.w_h.cols() {
            return Err(EstimateError::DimensionMismatch("observation shape".into()));
        }
        let y_white = solve_lower(&self.noise_chol, y)?;
        let vec_h_hat = self.w_h.mul_vec(&y_white.vec());
        let vec_h_eff_hat = self.t.mul_vec(&vec_h_hat);
        Ok(AaOutput { vec_h_hat, estimate: ScEstimate { vec_h_eff_hat, method: Method::Aa } })
    }

    pub fn mse_matrices(&self) -> Result<(CMat, CMat)> {
        aa_mse_matrices(&self.a_prime, self.rho, &self.r_h, &self.t)
    }
}

pub fn aa_estimate(y: &CMat, pilots: &PilotBlock, link: &LinkModel, rho: f64) -> Result<AaOutput> {
    AaEstimator::new(link, pilots, rho)?.apply(y)
}

/// `E_AA = R_H − ρR_H·A′ᴴ(I + ρA′R_HA′ᴴ)⁻¹A′R_H` and `E_AA,eff = T·E_AA·Tᴴ`.
pub fn aa_mse_matrices(a_prime: &CMat, rho: f64, r_h: &CMat, t: &CMat) -> Result<(CMat, CMat)> {
    check_rho(rho)?;
    let ar = a_prime * r_h;
    let sigma = (&CMat::identity(a_prime.rows()) + &ar.mul_adjoint(a_prime).scale_re(rho)).hermitian_part();
    let g = hermitian_solve(&sigma, &ar)?;
    let e = (r_h - &ar.adjoint_mul(&g).scale_re(rho)).hermitian_part();
    let e_eff = (t * &e).mul_adjoint(t).hermitian_part();
    Ok((e, e_eff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{complex_normal_matrix, stream};

    #[test]
    fn single_pilot_stacking() {
        let pilots = PilotBlock::new(CMat::from_real(3, 1, &[1.0, 1.0, 1.0]).unwrap()).unwrap();
        let (_, a) = stack_observations(&CMat::zeros(2, 1), &pilots).unwrap();
        let ones = CMat::from_real(1, 3, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(a, ones.kron(&CMat::identity(2)));
    }

    #[test]
    fn identity_pilots_stack_to_identity() {
        let pilots = PilotBlock::new(CMat::identity(3)).unwrap();
        let (_, a) = stack_observations(&CMat::zeros(2, 3), &pilots).unwrap();
        assert_eq!(a, CMat::identity(6));
    }

    #[test]
    fn vec_identity_holds() {
        let mut rng = stream(3);
        let h = complex_normal_matrix(&mut rng, 3, 2);
        let pilots = PilotBlock::bpsk(&mut rng, 2, 5).unwrap();
        let (_, a) = stack_observations(&CMat::zeros(3, 5), &pilots).unwrap();
        let lhs = CMat::col_vec(&a.mul_vec(&h.vec()));
        let rhs = CMat::col_vec(&(&h * pilots.x()).vec());
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn hadamard_pilots_are_orthogonal() {
        let p = PilotBlock::orthogonal(3, 4).unwrap();
        assert_eq!(p.x().mul_adjoint(p.x()), CMat::identity(3).scale_re(4.0));
        assert!(PilotBlock::orthogonal(3, 6).is_err());
        assert!(PilotBlock::orthogonal(5, 4).is_err());
    }

    #[test]
    fn constants() {
        let chain = RfChain { noise_figure: 1.0, ..RfChain::default() };
        let (c1, c2) = mismatch_constants(&CMat::identity(4), &chain);
        let expected = chain.bandwidth * crate::consts::BOLTZMANN * chain.temperature * 16.0 * 50.0;
        assert!((c1 - expected).abs() < 1e-12 * expected);
        assert_eq!(c2, 1.0);
    }

    #[test]
    fn zero_power_gives_prior_mean() {
        let pilots = PilotBlock::orthogonal(2, 4).unwrap();
        let (_, a) = stack_observations(&CMat::zeros(2, 4), &pilots).unwrap();
        let y = vec![C64::new(1.0, 0.5); 8];
        let est = ab_estimate(&y, &a, 0.0, 1.0, 1.0).unwrap();
        assert!(est.vec_h_eff_hat.iter().all(|z| z.norm() == 0.0));
        let r = CMat::identity(4).scale_re(0.7);
        let e = ab_mse_matrix(&a, 0.0, 1.0, 1.0, &r, &CMat::identity(2)).unwrap();
        assert!(e.max_abs_diff(&r) < 1e-15);
    }

    #[test]
    fn mismatched_mse_collapses_when_assumptions_hold() {
        let mut rng = stream(11);
        let a = complex_normal_matrix(&mut rng, 6, 4);
        let g = complex_normal_matrix(&mut rng, 4, 4);
        let r = &g.mul_adjoint(&g) + &CMat::identity(4);
        let n = CMat::identity(6).scale_re(0.3);
        let e = mismatched_mse(&a, 2.0, &r, &n, &r, &n).unwrap();
        let sigma = &n + &(&(&a * &r) * &a.adjoint()).scale_re(2.0);
        let standard = &r - &(&(&r * &a.adjoint()) * &hermitian_solve(&sigma, &(&a * &r)).unwrap()).scale_re(2.0);
        assert!(e.rel_diff(&standard) < 1e-12);
    }
}
