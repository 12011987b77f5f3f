//! Water-filling and SINR lower bounds on the achievable rate with SVD
//! precoding designed from (possibly imperfect) channel estimates.

use serde::{Deserialize, Serialize};

use crate::matrixkit::{cholesky_lower, solve_lower, svd, CMat, LinalgError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("every channel gain is zero")]
    AllZeroGains,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, RateError>;

/// Power per stream and the budget it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub budget: f64,
    /// Water level `μ`.
    pub level: f64,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Maximizes `Σ log(1 + g_j·P_j)` subject to `Σ P_j = budget`, `P_j ≥ 0`.
///
/// The water level is bracketed by bisection on `μ ∈ (0, budget + max 1/g]`
/// and then solved exactly on the active set the bisection settles on.
pub fn waterfill(gains: &[f64], budget: f64) -> Result<PowerAllocation> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(RateError::InvalidArgument(format!("budget = {budget} must be positive")));
    }
    if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(RateError::InvalidArgument(format!("gain {g} must be finite and non-negative")));
    }
    let inv: Vec<f64> = gains.iter().map(|&g| if g > 0.0 { 1.0 / g } else { f64::INFINITY }).collect();
    let max_inv = inv.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if max_inv == f64::NEG_INFINITY {
        return Err(RateError::AllZeroGains);
    }
    let filled = |mu: f64| inv.iter().map(|&v| (mu - v).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, budget + max_inv);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if filled(mid) > budget {
            hi = mid;
        } else {
            lo = mid;
        }
        if (filled(lo) - budget).abs() <= 1e-10 * budget.max(1.0) && hi - lo <= 1e-12 * hi {
            break;
        }
    }
    // Exact level on the active set {j : 1/g_j < μ}.
    let active: Vec<usize> = (0..inv.len()).filter(|&j| inv[j] < hi).collect();
    let mut mu = (budget + active.iter().map(|&j| inv[j]).sum::<f64>()) / active.len() as f64;
    let mut set = active;
    while let Some(pos) = set.iter().position(|&j| inv[j] >= mu) {
        set.swap_remove(pos);
        mu = (budget + set.iter().map(|&j| inv[j]).sum::<f64>()) / set.len() as f64;
    }
    let mut powers = vec![0.0; inv.len()];
    for &j in &set {
        powers[j] = mu - inv[j];
    }
    Ok(PowerAllocation { powers, budget, level: mu })
}

/// Result of a rate evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Bits per channel use (per subcarrier on average for OFDM).
    pub rate_bpcu: f64,
    /// SINR per stream, subcarrier-major for OFDM.
    pub per_stream_sinr: Vec<f64>,
    /// Allocated power per stream, in the same order.
    pub per_stream_power: Vec<f64>,
    /// `Σ_j P_kj` per subcarrier; a single entry for single-carrier links.
    pub per_subcarrier_power: Vec<f64>,
}

/// Whitened estimate SVD and whitened true channel for one carrier.
struct Carrier {
    u: CMat,
    sigma: Vec<f64>,
    v: CMat,
    g_true: CMat,
}

fn prepare(h_true: &CMat, h_hat: &CMat, r_n: &CMat) -> Result<Carrier> {
    if h_true.shape() != h_hat.shape() {
        return Err(RateError::DimensionMismatch(format!(
            "true channel is {:?}, estimate is {:?}",
            h_true.shape(),
            h_hat.shape()
        )));
    }
    if r_n.shape() != (h_true.rows(), h_true.rows()) {
        return Err(RateError::DimensionMismatch("noise covariance does not match the receive array".into()));
    }
    let l = cholesky_lower(r_n)?;
    let d = svd(&solve_lower(&l, h_hat)?)?;
    Ok(Carrier { u: d.u, sigma: d.sigma, v: d.v, g_true: solve_lower(&l, h_true)? })
}

/// `SINR_j` for every stream of one carrier given powers `p` and SNR scale `c = ρP_T/N_t`.
fn stream_sinrs(car: &Carrier, p: &[f64], c: f64) -> Vec<f64> {
    let gv = &car.g_true * &car.v;
    // a[(j, l)] = u_jᴴ·G·v_l
    let a = car.u.adjoint_mul(&gv);
    (0..p.len())
        .map(|j| {
            let sig = c * p[j] * a[(j, j)].norm_sqr();
            let interf: f64 = (0..p.len()).filter(|&l| l != j).map(|l| p[l] * a[(j, l)].norm_sqr()).sum();
            sig / (1.0 + c * interf)
        })
        .collect()
}

fn check_power(rho: f64, p_t: f64) -> Result<()> {
    if !(rho.is_finite() && rho >= 0.0 && p_t.is_finite() && p_t > 0.0) {
        return Err(RateError::InvalidArgument(format!("rho = {rho}, P_T = {p_t} out of range")));
    }
    Ok(())
}

/// Rate lower bound when precoding with `V̂` and combining with `Ûᴴ` from the
/// SVD of `L⁻¹Ĥ_eff`, water-filling on `σ̂²` with budget `N_t`.
pub fn sc_rate_lower_bound(h_true: &CMat, h_hat: &CMat, r_n: &CMat, rho: f64, p_t: f64) -> Result<RateReport> {
    ofdm_rate_lower_bound(
        std::slice::from_ref(h_true),
        std::slice::from_ref(h_hat),
        std::slice::from_ref(r_n),
        &[rho],
        p_t,
    )
}

/// OFDM rate lower bound with joint water-filling over space and frequency
/// (budget `K·N_t`), normalized by `K`.
pub fn ofdm_rate_lower_bound(
    h_true: &[CMat],
    h_hat: &[CMat],
    r_n: &[CMat],
    rho: &[f64],
    p_t: f64,
) -> Result<RateReport> {
    let k_n = h_true.len();
    if k_n == 0 || h_hat.len() != k_n || r_n.len() != k_n || rho.len() != k_n {
        return Err(RateError::DimensionMismatch(format!(
            "{k_n} true channels, {} estimates, {} noise covariances, {} gains",
            h_hat.len(),
            r_n.len(),
            rho.len()
        )));
    }
    let n_t = h_true[0].cols();
    if h_true.iter().any(|h| h.shape() != h_true[0].shape()) {
        return Err(RateError::DimensionMismatch("subcarrier channels differ in shape".into()));
    }
    for &r in rho {
        check_power(r, p_t)?;
    }
    let carriers: Vec<Carrier> = (0..k_n).map(|k| prepare(&h_true[k], &h_hat[k], &r_n[k])).collect::<Result<_>>()?;
    let scale: Vec<f64> = rho.iter().map(|r| r * p_t / n_t as f64).collect();
    let gains: Vec<f64> =
        carriers.iter().zip(&scale).flat_map(|(car, &c)| car.sigma.iter().map(move |s| c * s * s)).collect();
    let alloc = waterfill(&gains, (k_n * n_t) as f64)?;

    let mut sinr = Vec::with_capacity(gains.len());
    let mut per_sub = Vec::with_capacity(k_n);
    let mut offset = 0;
    for (car, &c) in carriers.iter().zip(&scale) {
        let p = &alloc.powers[offset..offset + car.sigma.len()];
        sinr.extend(stream_sinrs(car, p, c));
        per_sub.push(p.iter().sum());
        offset += car.sigma.len();
    }
    let rate = sinr.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / k_n as f64;
    Ok(RateReport {
        rate_bpcu: rate,
        per_stream_sinr: sinr,
        per_stream_power: alloc.powers,
        per_subcarrier_power: per_sub,
    })
}

/// Perfect-CSI capacity `Σ log₂(1 + (ρP_T/N_t)σ_j²P_j)` of one whitened carrier.
pub fn capacity(h: &CMat, r_n: &CMat, rho: f64, p_t: f64) -> Result<f64> {
    Ok(sc_rate_lower_bound(h, h, r_n, rho, p_t)?.rate_bpcu)
}
