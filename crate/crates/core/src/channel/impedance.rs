//! Impedance description of the link and its bridge to the scattering one.

use super::{port_front, ChannelError, Result, RfChain};
use crate::consts::BOLTZMANN;
use crate::matrixkit::{inverse, CMat, LinalgError};
use crate::netparams::{z_to_s, NetParamsError};

fn termination_inverse(a: &CMat) -> Result<CMat> {
    inverse(a).map_err(|e| match e {
        LinalgError::Singular { cond } => ChannelError::SingularTermination { cond },
        other => other.into(),
    })
}

fn require_square(name: &str, m: &CMat, n: usize) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(ChannelError::DimensionMismatch(format!("{name} is {}x{}, expected {n}x{n}", m.rows(), m.cols())));
    }
    Ok(())
}

/// `β·Z_L(Z_R + Z_L)⁻¹·Z_RT·(Z_T + Z_S)⁻¹`.
pub fn effective_channel_impedance(
    z_s: &CMat,
    z_t: &CMat,
    z_r: &CMat,
    z_l: &CMat,
    z_rt: &CMat,
    beta: f64,
) -> Result<CMat> {
    let (n_r, n_t) = z_rt.shape();
    require_square("Z_S", z_s, n_t)?;
    require_square("Z_T", z_t, n_t)?;
    require_square("Z_R", z_r, n_r)?;
    require_square("Z_L", z_l, n_r)?;
    let rx = z_l * &termination_inverse(&(z_r + z_l))?;
    let tx = termination_inverse(&(z_t + z_s))?;
    Ok((&(&rx * z_rt) * &tx).scale_re(beta))
}

/// Noise spectral density of the impedance description:
/// `4k_bTβ²·Z_L(Z_R+Z_L)⁻¹·Re{Z_R}·(Z_R+Z_L)⁻ᴴZ_Lᴴ + 4k_bTβ²(N_f−1)R_in·I`.
pub fn noise_covariance_impedance(z_r: &CMat, z_l: &CMat, chain: &RfChain) -> Result<CMat> {
    chain.validate()?;
    let n = z_r.rows();
    require_square("Z_R", z_r, n)?;
    require_square("Z_L", z_l, n)?;
    let a = z_l * &termination_inverse(&(z_r + z_l))?;
    let re = z_r.hermitian_part();
    let extrinsic = (&a * &re).mul_adjoint(&a).scale_re(4.0 * BOLTZMANN * chain.temperature * chain.beta.powi(2));
    Ok((&extrinsic + &CMat::identity(n).scale_re(chain.intrinsic_density())).hermitian_part())
}

fn sqrt_resistance(z: &CMat, name: &str) -> Result<CMat> {
    let d = (0..z.rows())
        .map(|i| {
            let r = z[(i, i)].re;
            if r > 0.0 {
                Ok(r.sqrt())
            } else {
                Err(ChannelError::InvalidArgument(format!("{name}[{i},{i}] has non-positive resistance {r}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CMat::from_real_diag(&d))
}

/// `Z_RT = diag(√Re{Z_R})·𝓗_OC·diag(√Re{Z_T})`.
pub fn open_circuit_z_rt(z_t: &CMat, z_r: &CMat, h_oc: &CMat) -> Result<CMat> {
    let dr = sqrt_resistance(z_r, "Z_R")?;
    let dt = sqrt_resistance(z_t, "Z_T")?;
    if h_oc.shape() != (dr.rows(), dt.rows()) {
        return Err(ChannelError::DimensionMismatch("open-circuit channel does not match the arrays".into()));
    }
    Ok(&(&dr * h_oc) * &dt)
}

fn conversion(e: NetParamsError) -> ChannelError {
    match e {
        NetParamsError::SingularConversion { cond } => ChannelError::SingularTermination { cond },
        NetParamsError::Linalg(l) => l.into(),
        other => ChannelError::InvalidArgument(other.to_string()),
    }
}

/// Terminated-pattern propagation channel equivalent to an open-circuit one
/// when both arrays are loaded by `z_ref`:
/// `𝓗 = F_R⁻¹(I − S_R)·diag(√Re Z_R)·𝓗_OC·diag(√Re Z_T)·(I − S_T)F_T⁻¹ / z_ref`.
pub fn terminated_from_open_circuit(h_oc: &CMat, z_t: &CMat, z_r: &CMat, z_ref: f64) -> Result<CMat> {
    let s_t = z_to_s(z_t, z_ref).map_err(conversion)?;
    let s_r = z_to_s(z_r, z_ref).map_err(conversion)?;
    let inv_front = |s: &CMat| -> Result<CMat> {
        let f = port_front(s)?;
        Ok(CMat::from_fn(f.rows(), f.cols(), |i, j| if i == j { f[(i, i)].inv() } else { f[(i, j)] }))
    };
    let z_rt = open_circuit_z_rt(z_t, z_r, h_oc)?;
    let rx = &inv_front(&s_r)? * &(&CMat::identity(s_r.rows()) - &s_r);
    let tx = &(&CMat::identity(s_t.rows()) - &s_t) * &inv_front(&s_t)?;
    Ok((&(&rx * &z_rt) * &tx).scale_re(1.0 / z_ref))
}
