//! Stacking matrices of the OFDM observation model.

use super::{twiddle, OfdmLink, OfdmPilots};
use crate::estimate_sc::{EstimateError, Result};
use crate::matrixkit::{solve_lower, CMat, C64};

/// Partial DFT `𝓕` (`L × K`), `𝓕_{mn} = e^{j2πmn/K}` with zero-based indices.
pub fn partial_dft(taps: usize, subcarriers: usize) -> CMat {
    CMat::from_fn(taps, subcarriers, |m, n| twiddle((m * n) as f64, subcarriers))
}

fn permutation(n: usize, map: impl Fn(usize) -> usize) -> CMat {
    let mut p = CMat::zeros(n, n);
    for old in 0..n {
        p[(map(old), old)] = C64::new(1.0, 0.0);
    }
    p
}

/// `P_L`: reorders `vec(H̄)` from (rx, tx, tap) to (rx, tap, tx) so that each
/// transmit antenna's taps sit next to each other.
pub fn tap_permutation(n_r: usize, n_t: usize, taps: usize) -> CMat {
    permutation(n_r * n_t * taps, |old| {
        let (r, rest) = (old % n_r, old / n_r);
        let (t, l) = (rest % n_t, rest / n_t);
        r + n_r * (l + taps * t)
    })
}

/// `P_K`: reorders (rx, subcarrier, tx) to (rx, tx, subcarrier).
pub fn subcarrier_permutation(n_r: usize, n_t: usize, subcarriers: usize) -> CMat {
    permutation(n_r * n_t * subcarriers, |old| {
        let (r, rest) = (old % n_r, old / n_r);
        let (k, t) = (rest % subcarriers, rest / subcarriers);
        r + n_r * (t + n_t * k)
    })
}

/// `C₂ = 𝓕ᴴ ⊗ I_{N_rN_t}`, identical to `P_K(I_{N_t} ⊗ (𝓕ᴴ ⊗ I_{N_r}))P_L`.
pub fn c2_matrix(n_r: usize, n_t: usize, taps: usize, subcarriers: usize) -> CMat {
    partial_dft(taps, subcarriers).adjoint().kron(&CMat::identity(n_r * n_t))
}

/// `D = blockdiag(𝗙[k]ᵀ ⊗ 𝗤[k])`.
pub fn d_matrix(f: &[CMat], q: &[CMat]) -> CMat {
    CMat::block_diag(&f.iter().zip(q).map(|(f, q)| f.transpose().kron(q)).collect::<Vec<_>>())
}

/// `C₁ = D·C₂`, assembled block by block.
pub fn c1_matrix(f: &[CMat], q: &[CMat], taps: usize) -> CMat {
    let k_n = f.len();
    let blocks: Vec<CMat> = f.iter().zip(q).map(|(f, q)| f.transpose().kron(q)).collect();
    let b = blocks[0].rows();
    let mut c1 = CMat::zeros(k_n * b, taps * b);
    for (k, d) in blocks.iter().enumerate() {
        for l in 0..taps {
            c1.set_block(k * b, l * b, &d.scale(twiddle(-((l * k) as f64), k_n)));
        }
    }
    c1
}

fn check_pilots(pilots: &OfdmPilots, k_n: usize, taps: usize) -> Result<()> {
    if pilots.subcarriers() != k_n {
        return Err(EstimateError::DimensionMismatch(format!(
            "pilots cover {} subcarriers, expected {k_n}",
            pilots.subcarriers()
        )));
    }
    if taps == 0 || taps > k_n {
        return Err(EstimateError::InvalidArgument(format!("tap count {taps} must lie in 1..={k_n}")));
    }
    Ok(())
}

/// Rows `u[k]ᵀ ⊗ (R[k]·x[k,t])ᵀ ⊗ P[k]` stacked over `t·K + k`.
///
/// `right = None` means `R[k] = I`; `left = None` means `P[k] = I_{n_r}`.
pub fn sensing_matrix(
    taps: usize,
    pilots: &OfdmPilots,
    right: Option<&[CMat]>,
    left: Option<&[CMat]>,
    n_r: usize,
) -> Result<CMat> {
    let k_n = pilots.subcarriers();
    check_pilots(pilots, k_n, taps)?;
    let n_t = right.map_or(pilots.n_t(), |r| r[0].rows());
    let eye = CMat::identity(n_r);
    let mut out = CMat::zeros(k_n * pilots.slots() * n_r, n_r * n_t * taps);
    for t in 0..pilots.slots() {
        for k in 0..k_n {
            let x = pilots.symbol(k, t);
            let x = match right {
                Some(r) => r[k].mul_vec(&x),
                None => x,
            };
            let p = left.map_or(&eye, |p| &p[k]);
            let row = (t * k_n + k) * n_r;
            for l in 0..taps {
                let u = twiddle(-((l * k) as f64), k_n);
                for (j, xj) in x.iter().enumerate() {
                    out.set_block(row, n_r * (j + n_t * l), &p.scale(u * xj));
                }
            }
        }
    }
    Ok(out)
}

/// `B′`: block row `(k,t)` is `x[k,t]ᵀ ⊗ I` placed in column block `k`.
pub fn b_prime_matrix(pilots: &OfdmPilots, n_r: usize) -> CMat {
    let (k_n, n_t) = (pilots.subcarriers(), pilots.n_t());
    let block = n_r * n_t;
    let mut out = CMat::zeros(k_n * pilots.slots() * n_r, k_n * block);
    for t in 0..pilots.slots() {
        for k in 0..k_n {
            let x = CMat::col_vec(&pilots.symbol(k, t)).transpose();
            out.set_block((t * k_n + k) * n_r, k * block, &x.kron(&CMat::identity(n_r)));
        }
    }
    out
}

/// All stacking matrices of one OFDM problem.
#[derive(Debug, Clone)]
pub struct McStacking {
    pub b_mat: CMat,
    pub b_prime: CMat,
    pub m: CMat,
    pub c1: CMat,
    pub c2: CMat,
    pub d: CMat,
    pub p_k: CMat,
    pub p_l: CMat,
    pub partial_dft: CMat,
}

/// Assembles the stacking matrices for `taps` time-domain taps, building
/// `C₂ = P_K(I ⊗ (𝓕ᴴ ⊗ I))P_L` from its factors.
pub fn build_stacking(taps: usize, pilots: &OfdmPilots, link: &OfdmLink) -> Result<McStacking> {
    let (k_n, n_r, n_t) = (link.subcarriers(), link.n_r(), link.n_t());
    check_pilots(pilots, k_n, taps)?;
    if pilots.n_t() != n_t {
        return Err(EstimateError::DimensionMismatch("pilots do not match the transmit array".into()));
    }
    let p: Vec<CMat> = link.chol.iter().zip(&link.q).map(|(l, q)| Ok(solve_lower(l, q)?)).collect::<Result<_>>()?;
    let b_mat = sensing_matrix(taps, pilots, None, None, n_r)?;
    let m = sensing_matrix(taps, pilots, Some(&link.f), Some(&p), n_r)?;
    let b_prime = b_prime_matrix(pilots, n_r);
    let partial_dft = partial_dft(taps, k_n);
    let p_l = tap_permutation(n_r, n_t, taps);
    let p_k = subcarrier_permutation(n_r, n_t, k_n);
    let middle = CMat::identity(n_t).kron(&partial_dft.adjoint().kron(&CMat::identity(n_r)));
    let c2 = &(&p_k * &middle) * &p_l;
    let d = d_matrix(&link.f, &link.q);
    let c1 = &d * &c2;
    Ok(McStacking { b_mat, b_prime, m, c1, c2, d, p_k, p_l, partial_dft })
}
