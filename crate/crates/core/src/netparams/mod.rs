//! Frequency-dependent network parameters of antenna arrays.
//!
//! A [`NetworkParams`] value holds one square matrix per frequency point, either
//! scattering parameters (`S`) or impedance parameters (`Z`, in ohms), together
//! with the reference impedance. Arrays enter the toolkit from Touchstone
//! files or from the two built-in generators: the analytic dipole pair and a
//! parametric synthetic coupled array.

mod dipole;
mod synth;
mod touchstone;

use serde::{Deserialize, Serialize};

use crate::matrixkit::{inverse, svd, CMat, LinalgError};

pub use dipole::{cisi, dipole_pair_impedance, dipole_pair_params, Dipole};
pub use synth::{synth_coupled_array, SynthArray};
pub use touchstone::{parse_touchstone, parse_touchstone_with_ports, read_touchstone, write_touchstone};

/// Slack allowed above unit singular value before a scattering matrix counts
/// as non-passive.
pub const PASSIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetParamsError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("line {line}: frequency {freq} Hz does not increase")]
    NonMonotoneFrequency { line: usize, freq: f64 },
    #[error("singular conversion (condition estimate {cond:.3e})")]
    SingularConversion { cond: f64 },
    #[error("frequency {f} Hz outside [{min}, {max}] Hz")]
    OutOfBand { f: f64, min: f64, max: f64 },
    #[error("operation needs {expected} parameters")]
    WrongKind { expected: ParamKind },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, NetParamsError>;

/// Kind of network matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    Scattering,
    Impedance,
}

impl std::fmt::Display for ParamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ParamKind::Scattering => "S",
            ParamKind::Impedance => "Z",
        })
    }
}

/// Strictly increasing list of positive frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(NetParamsError::InvalidArgument("frequency grid is empty".into()));
        }
        if let Some(&f) = points.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(NetParamsError::InvalidArgument(format!("frequency {f} Hz is not positive")));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(NetParamsError::NonMonotoneFrequency { line: i + 2, freq: points[i + 1] });
        }
        Ok(Self { points })
    }

    /// `n` equally spaced points from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Self> {
        if n == 1 {
            return Self::new(vec![start]);
        }
        let step = (stop - start) / (n - 1) as f64;
        Self::new((0..n).map(|i| start + step * i as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

/// Per-frequency S or Z matrices of an `n_ports`-port network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    kind: ParamKind,
    z_ref: f64,
    grid: FrequencyGrid,
    matrices: Vec<CMat>,
}

impl NetworkParams {
    pub fn new(kind: ParamKind, z_ref: f64, grid: FrequencyGrid, matrices: Vec<CMat>) -> Result<Self> {
        if !(z_ref.is_finite() && z_ref > 0.0) {
            return Err(NetParamsError::InvalidArgument(format!("reference impedance {z_ref} must be positive")));
        }
        if matrices.len() != grid.len() {
            return Err(NetParamsError::InvalidArgument(format!(
                "{} matrices for {} frequency points",
                matrices.len(),
                grid.len()
            )));
        }
        let n = matrices[0].rows();
        if n == 0 || matrices.iter().any(|m| m.shape() != (n, n)) {
            return Err(NetParamsError::InvalidArgument("matrices must all be square of one size".into()));
        }
        Ok(Self { kind, z_ref, grid, matrices })
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn n_ports(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    /// Matrix at `f` by [`interpolate`].
    pub fn at(&self, f: f64) -> Result<CMat> {
        interpolate(self, f)
    }

    /// Same network expressed as `kind` parameters at the same reference.
    pub fn to_kind(&self, kind: ParamKind) -> Result<NetworkParams> {
        self.convert(kind, self.z_ref)
    }

    /// Converts to `kind` parameters, renormalising S-parameters to `z_ref`.
    pub fn convert(&self, kind: ParamKind, z_ref: f64) -> Result<NetworkParams> {
        let matrices = self
            .matrices
            .iter()
            .map(|m| {
                let z = match self.kind {
                    ParamKind::Impedance => m.clone(),
                    ParamKind::Scattering => s_to_z(m, self.z_ref)?,
                };
                match kind {
                    ParamKind::Impedance => Ok(z),
                    ParamKind::Scattering => z_to_s(&z, z_ref),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        NetworkParams::new(kind, z_ref, self.grid.clone(), matrices)
    }
}

fn check_z_ref(z_ref: f64) -> Result<()> {
    if z_ref.is_finite() && z_ref > 0.0 {
        Ok(())
    } else {
        Err(NetParamsError::InvalidArgument(format!("reference impedance {z_ref} must be positive")))
    }
}

fn singular(e: LinalgError) -> NetParamsError {
    match e {
        LinalgError::Singular { cond } => NetParamsError::SingularConversion { cond },
        other => other.into(),
    }
}

/// `S = (Z − z_ref·I)(Z + z_ref·I)⁻¹`.
pub fn z_to_s(z: &CMat, z_ref: f64) -> Result<CMat> {
    check_z_ref(z_ref)?;
    let shift = CMat::identity(z.rows()).scale_re(z_ref);
    let inv = inverse(&(z + &shift)).map_err(singular)?;
    Ok(&(z - &shift) * &inv)
}

/// `Z = z_ref·(I + S)(I − S)⁻¹`.
pub fn s_to_z(s: &CMat, z_ref: f64) -> Result<CMat> {
    check_z_ref(z_ref)?;
    let eye = CMat::identity(s.rows());
    let inv = inverse(&(&eye - s)).map_err(singular)?;
    Ok((&(&eye + s) * &inv).scale_re(z_ref))
}

/// Entrywise linear interpolation (real and imaginary parts) between the grid
/// points bracketing `f`.
pub fn interpolate(params: &NetworkParams, f: f64) -> Result<CMat> {
    let pts = params.grid.points();
    let (lo, hi) = (params.grid.min(), params.grid.max());
    if !(f >= lo && f <= hi) {
        return Err(NetParamsError::OutOfBand { f, min: lo, max: hi });
    }
    let j = pts.partition_point(|&p| p < f);
    if pts[j] == f {
        return Ok(params.matrices[j].clone());
    }
    let (f0, f1) = (pts[j - 1], pts[j]);
    let w = (f - f0) / (f1 - f0);
    let (a, b) = (&params.matrices[j - 1], &params.matrices[j]);
    Ok(CMat::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)] * (1.0 - w) + b[(r, c)] * w))
}

/// Largest singular value per frequency of a scattering network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassivityReport {
    pub frequencies: Vec<f64>,
    pub max_singular: Vec<f64>,
    pub worst_index: usize,
    pub worst_frequency: f64,
    pub passive: bool,
}

pub fn check_passivity(params: &NetworkParams) -> Result<PassivityReport> {
    if params.kind != ParamKind::Scattering {
        return Err(NetParamsError::WrongKind { expected: ParamKind::Scattering });
    }
    let max_singular = params.matrices.iter().map(|m| Ok(svd(m)?.sigma[0])).collect::<Result<Vec<f64>>>()?;
    let worst_index = (0..max_singular.len()).max_by(|&i, &j| max_singular[i].total_cmp(&max_singular[j])).unwrap_or(0);
    Ok(PassivityReport {
        frequencies: params.grid.points().to_vec(),
        worst_frequency: params.grid.points()[worst_index],
        passive: max_singular.iter().all(|&s| s <= 1.0 + PASSIVITY_TOL),
        max_singular,
        worst_index,
    })
}

/// Largest entrywise asymmetry `max |M_ij − M_ji|`.
pub fn asymmetry(m: &CMat) -> f64 {
    m.max_abs_diff(&m.transpose())
}
