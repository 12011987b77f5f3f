//! Induced-EMF impedances of two parallel side-by-side thin dipoles with
//! sinusoidal current distributions.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{FrequencyGrid, NetParamsError, NetworkParams, ParamKind, Result};
use crate::consts::{ETA0, SPEED_OF_LIGHT};
use crate::matrixkit::{CMat, C64};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Sine and cosine integrals `(Si(x), Ci(x))` for `x > 0`.
///
/// Power series below `x = 2`, Lentz continued fraction for the complex
/// exponential integral above.
pub fn cisi(x: f64) -> Result<(f64, f64)> {
    const EPS: f64 = 1e-16;
    const MAXIT: usize = 200;
    const FPMIN: f64 = 1e-300;
    if !(x.is_finite() && x > 0.0) {
        return Err(NetParamsError::NumericalFailure(format!("sine/cosine integral at {x}")));
    }
    if x > 2.0 {
        let mut b = C64::new(1.0, x);
        let mut c = C64::new(1.0 / FPMIN, 0.0);
        let mut d = C64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 2..MAXIT {
            let a = -(((i - 1) * (i - 1)) as f64);
            b += 2.0;
            d = C64::new(1.0, 0.0) / (d * a + b);
            c = b + C64::new(a, 0.0) / c;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < EPS {
                let h = C64::new(x.cos(), -x.sin()) * h;
                return Ok((FRAC_PI_2 + h.im, -h.re));
            }
        }
        return Err(NetParamsError::NumericalFailure(format!("continued fraction for Si/Ci({x})")));
    }
    // Si(x) = Σ (−1)^n x^{2n+1} / ((2n+1)(2n+1)!)
    // Ci(x) = γ + ln x + Σ_{n≥1} (−1)^n x^{2n} / (2n (2n)!)
    let (mut sum_s, mut sum_c) = (x, 0.0);
    let (mut term_s, mut term_c) = (x, 1.0);
    for n in 1..MAXIT {
        let m = n as f64;
        term_c *= -x * x / ((2.0 * m - 1.0) * (2.0 * m));
        term_s *= -x * x / ((2.0 * m) * (2.0 * m + 1.0));
        let ds = term_s / (2.0 * m + 1.0);
        let dc = term_c / (2.0 * m);
        sum_s += ds;
        sum_c += dc;
        if ds.abs() < EPS * sum_s.abs() && dc.abs() < EPS * (sum_c.abs() + 1.0) {
            return Ok((sum_s, EULER_GAMMA + x.ln() + sum_c));
        }
    }
    Err(NetParamsError::NumericalFailure(format!("series for Si/Ci({x})")))
}

/// `Ci(x) − j·Si(x)`, an antiderivative of `e^{−jx}/x`.
fn g(x: f64) -> Result<C64> {
    let (si, ci) = cisi(x)?;
    Ok(C64::new(ci, -si))
}

/// `R + t` and `R − t` for `R = √(d² + t²)`, each computed without cancellation.
fn r_plus_minus(d: f64, t: f64) -> (f64, f64) {
    let r = d.hypot(t);
    if t >= 0.0 {
        (r + t, d * d / (r + t))
    } else {
        (d * d / (r - t), r - t)
    }
}

/// `∫_{z0}^{z1} e^{−jkR}/R · sin(k(h − z)) dz` with `R = √(d² + (z − c)²)`.
fn source_term(k: f64, h: f64, d: f64, c: f64, z0: f64, z1: f64) -> Result<C64> {
    let (p1, m1) = r_plus_minus(d, z1 - c);
    let (p0, m0) = r_plus_minus(d, z0 - c);
    let plus = g(k * p1)? - g(k * p0)?;
    let minus = g(k * m1)? - g(k * m0)?;
    let phase = C64::from_polar(1.0, k * (h - c));
    Ok((phase * plus + phase.conj() * minus) / C64::new(0.0, 2.0))
}

/// Thin center-fed dipole geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dipole {
    /// Total length in metres.
    pub length: f64,
    /// Wire radius in metres.
    pub radius: f64,
}

impl Dipole {
    /// Dipole of the given length with the default radius `length/200`.
    pub fn new(length: f64) -> Self {
        Self { length, radius: length / 200.0 }
    }

    /// Input-referred impedance seen between two dipoles whose axes are `d`
    /// apart; `d = radius` gives the self-impedance.
    pub fn impedance_at(&self, f: f64, d: f64) -> Result<C64> {
        if !(f > 0.0 && d > 0.0 && self.length > 0.0 && self.radius > 0.0) {
            return Err(NetParamsError::InvalidArgument(format!(
                "dipole needs positive frequency, distance and size (f = {f}, d = {d})"
            )));
        }
        let k = 2.0 * PI * f / SPEED_OF_LIGHT;
        let h = self.length / 2.0;
        let s = (k * h).sin();
        if s.abs() < 1e-6 {
            return Err(NetParamsError::NumericalFailure(format!(
                "input current vanishes for a {:.4} wavelength dipole",
                2.0 * h * f / SPEED_OF_LIGHT
            )));
        }
        let ends = source_term(k, h, d, h, 0.0, h)? + source_term(k, h, d, -h, 0.0, h)?;
        let centre = source_term(k, h, d, 0.0, 0.0, h)?;
        let bracket = ends - centre * (2.0 * (k * h).cos());
        let z_max = C64::new(0.0, ETA0 / (4.0 * PI)) * bracket * 2.0;
        Ok(z_max / (s * s))
    }
}

/// Symmetric 2×2 impedance matrix of two identical parallel dipoles.
pub fn dipole_pair_impedance(f: f64, spacing: f64, length: f64, radius: Option<f64>) -> Result<CMat> {
    if !(spacing > 0.0 && length > 0.0) {
        return Err(NetParamsError::InvalidArgument("dipole spacing and length must be positive".into()));
    }
    let mut dip = Dipole::new(length);
    if let Some(a) = radius {
        dip.radius = a;
    }
    if dip.radius >= spacing {
        return Err(NetParamsError::InvalidArgument("wire radius must be smaller than the spacing".into()));
    }
    let z11 = dip.impedance_at(f, dip.radius)?;
    let z12 = dip.impedance_at(f, spacing)?;
    Ok(CMat::from_diag(&[z11, z11]) + CMat::from_fn(2, 2, |i, j| if i == j { C64::new(0.0, 0.0) } else { z12 }))
}

/// Impedance parameters of the dipole pair over a frequency grid.
pub fn dipole_pair_params(
    grid: &FrequencyGrid,
    spacing: f64,
    length: f64,
    radius: Option<f64>,
    z_ref: f64,
) -> Result<NetworkParams> {
    let mats =
        grid.points().iter().map(|&f| dipole_pair_impedance(f, spacing, length, radius)).collect::<Result<Vec<_>>>()?;
    NetworkParams::new(ParamKind::Impedance, z_ref, grid.clone(), mats)
}
