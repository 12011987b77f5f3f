//! Parametric stand-in for a measured coupled array: symmetric, passive
//! S-parameters whose coupling decays with port distance and whose frequency
//! ripple is set by a selectivity knob.

use std::f64::consts::PI;

use rand::Rng;

use super::{FrequencyGrid, NetParamsError, NetworkParams, ParamKind, Result};
use crate::matrixkit::{svd, CMat, C64};
use crate::random::stream;

/// Largest singular value allowed in synthesized S-matrices.
pub const SYNTH_SIGMA_MAX: f64 = 0.98;

/// Relative ripple depth of the entry magnitudes.
const RIPPLE: f64 = 0.3;

/// Seeded generator of coupled-array S-parameters.
///
/// Entry `(i, j)` at frequency `f` is
/// `coupling·e^{−|i−j|}·(1 + 0.3·sin(2π·sel·x + φ_ij))/1.3 · e^{j(θ_ij + 2π·sel·τ_ij·x)}`
/// with `x = f / 1 GHz` and seeded random `θ, φ ∈ [0, 2π)`, `τ ∈ [0.5, 1.5]`.
/// The matrix is then clipped to singular values at most [`SYNTH_SIGMA_MAX`].
#[derive(Debug, Clone)]
pub struct SynthArray {
    n_ports: usize,
    coupling: f64,
    selectivity: f64,
    theta: Vec<f64>,
    phi: Vec<f64>,
    tau: Vec<f64>,
}

impl SynthArray {
    pub fn new(n_ports: usize, coupling: f64, selectivity: f64, seed: u64) -> Result<Self> {
        if n_ports == 0 {
            return Err(NetParamsError::InvalidArgument("synthetic array needs at least one port".into()));
        }
        if !(0.0..1.0).contains(&coupling) {
            return Err(NetParamsError::InvalidArgument(format!("coupling {coupling} outside [0, 1)")));
        }
        if !(selectivity.is_finite() && selectivity >= 0.0) {
            return Err(NetParamsError::InvalidArgument(format!("selectivity {selectivity} must be ≥ 0")));
        }
        let mut rng = stream(seed);
        let pairs = n_ports * (n_ports + 1) / 2;
        let mut draw = |lo: f64, hi: f64| -> Vec<f64> { (0..pairs).map(|_| rng.random_range(lo..hi)).collect() };
        let theta = draw(0.0, 2.0 * PI);
        let phi = draw(0.0, 2.0 * PI);
        let tau = draw(0.5, 1.5);
        Ok(Self { n_ports, coupling, selectivity, theta, phi, tau })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        a * self.n_ports - a * (a + 1) / 2 + b
    }

    /// S-matrix at frequency `f` in Hz.
    pub fn s_at(&self, f: f64) -> Result<CMat> {
        let x = f * 1e-9;
        let w = 2.0 * PI * self.selectivity * x;
        let raw = CMat::from_fn(self.n_ports, self.n_ports, |i, j| {
            let p = self.pair_index(i, j);
            let mag = self.coupling * (-(i.abs_diff(j) as f64)).exp() * (1.0 + RIPPLE * (w + self.phi[p]).sin())
                / (1.0 + RIPPLE);
            C64::from_polar(mag, self.theta[p] + w * self.tau[p])
        });
        let dec = svd(&raw)?;
        let clipped = if dec.sigma[0] > SYNTH_SIGMA_MAX {
            let u = &dec.u;
            let scaled = CMat::from_fn(u.rows(), u.cols(), |r, k| u[(r, k)] * dec.sigma[k].min(SYNTH_SIGMA_MAX));
            scaled.mul_adjoint(&dec.v)
        } else {
            raw
        };
        Ok((&clipped + &clipped.transpose()).scale_re(0.5))
    }
}

/// Synthetic symmetric passive array sampled on `grid`, with 50 Ω reference.
pub fn synth_coupled_array(
    n_ports: usize,
    coupling: f64,
    selectivity: f64,
    grid: &FrequencyGrid,
    seed: u64,
) -> Result<NetworkParams> {
    let gen = SynthArray::new(n_ports, coupling, selectivity, seed)?;
    let mats = grid.points().iter().map(|&f| gen.s_at(f)).collect::<Result<Vec<_>>>()?;
    NetworkParams::new(ParamKind::Scattering, 50.0, grid.clone(), mats)
}
