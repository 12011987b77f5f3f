//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};
use crate::channel::RfChain;

/// Which figure-style sweep to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    NmseVsPower,
    NmseVsFrequency,
    NmseVsTaps,
    SnrVsFrequency,
    RateVsPower,
    RateVsFrequency,
    PowerVsSubcarrier,
    ChannelEquivalence,
}

impl SweepKind {
    pub fn axis_name(self) -> &'static str {
        match self {
            SweepKind::NmseVsPower | SweepKind::RateVsPower => "power_dbm",
            SweepKind::NmseVsTaps => "assumed_taps",
            SweepKind::PowerVsSubcarrier => "subcarrier_hz",
            _ => "frequency_hz",
        }
    }

    pub fn needs_ofdm(self) -> bool {
        matches!(self, SweepKind::NmseVsTaps | SweepKind::PowerVsSubcarrier)
    }
}

/// Where the transmit and receive arrays come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArraySource {
    /// Parametric coupled array; the receiver uses `seed + 1`.
    Synthetic {
        ports: usize,
        coupling: f64,
        #[serde(default = "default_selectivity")]
        selectivity: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Two parallel dipoles on each side. Lengths in metres; the defaults
    /// are half a wavelength at 1 GHz for both length and spacing.
    Dipole {
        #[serde(default = "half_wave")]
        length: f64,
        #[serde(default = "half_wave")]
        spacing: f64,
        radius: Option<f64>,
    },
    /// Touchstone files; `rx` defaults to `tx`. Relative paths are resolved
    /// against the configuration file.
    Touchstone { tx: PathBuf, rx: Option<PathBuf> },
}

fn default_selectivity() -> f64 {
    1.0
}

fn half_wave() -> f64 {
    crate::consts::SPEED_OF_LIGHT / 1e9 / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    /// Link distance `d` in metres.
    pub distance: f64,
    /// Reference distance `d_ref` in metres.
    pub reference_distance: f64,
    /// Path-loss exponent `α`.
    pub pathloss_exponent: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { distance: 100.0, reference_distance: 1.0, pathloss_exponent: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// Carrier frequency in Hz when the axis is not frequency.
    pub carrier: f64,
    /// Pilot length `N_p` for single-carrier estimation.
    pub pilots: usize,
    /// Pilot and data power in dBm when the axis is not power.
    pub power_dbm: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { carrier: 1e9, pilots: 8, power_dbm: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmConfig {
    pub subcarriers: usize,
    pub taps_true: usize,
    pub taps_assumed: usize,
    /// Pilot time slots `L_t`.
    pub slots: usize,
    /// Lower band edge in Hz.
    pub band_start: f64,
    /// Upper band edge in Hz.
    pub band_stop: f64,
}

impl OfdmConfig {
    pub fn bandwidth(&self) -> f64 {
        self.band_stop - self.band_start
    }

    /// `f_k = band_start + k·(band_stop − band_start)/K`.
    pub fn grid(&self) -> Vec<f64> {
        let k = self.subcarriers as f64;
        (0..self.subcarriers).map(|i| self.band_start + i as f64 * self.bandwidth() / k).collect()
    }

    /// Band centre, used as the reference for the common pilot gain.
    pub fn centre(&self) -> f64 {
        0.5 * (self.band_start + self.band_stop)
    }
}

/// Sweep grid given either as explicit values or as an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

impl SweepAxis {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let v = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) if n >= 1 => {
                if n == 1 {
                    vec![a]
                } else {
                    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
                }
            }
            _ => {
                return Err(ExperimentError::config(
                    "sweep",
                    "give either `values` or `start`, `stop` and `points ≥ 1`",
                ))
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(ExperimentError::config("sweep", "grid must be non-empty and finite"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: SweepKind,
    pub seed: u64,
    /// Monte-Carlo trials per point; 1000 single-carrier and 10 OFDM when absent.
    pub trials: Option<usize>,
    pub array: ArraySource,
    #[serde(default)]
    pub chain: RfChain,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub sweep: SweepAxis,
    pub ofdm: Option<OfdmConfig>,
}

impl ExperimentConfig {
    /// Parses TOML text, reporting the offending field path on failure.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| ExperimentError::config("", e.message()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ExperimentError::config(if path == "." { "" } else { &path }, e.inner().message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a configuration file and resolves relative Touchstone paths
    /// against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let ArraySource::Touchstone { tx, rx } = &mut cfg.array {
            let base = path.parent().unwrap_or(Path::new("."));
            *tx = base.join(&*tx);
            if let Some(rx) = rx {
                *rx = base.join(&*rx);
            }
        }
        Ok(cfg)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(if self.ofdm.is_some() { 10 } else { 1000 })
    }

    /// SHA-256 of the canonical JSON form, first 16 hex digits.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == Some(0) {
            return Err(ExperimentError::config("trials", "must be at least 1"));
        }
        self.chain.validate().map_err(|e| ExperimentError::config("chain", e.to_string()))?;
        let g = &self.geometry;
        if !(g.distance > 0.0 && g.reference_distance > 0.0 && g.pathloss_exponent.is_finite()) {
            return Err(ExperimentError::config("geometry", "distances must be positive"));
        }
        if !(self.link.carrier > 0.0) {
            return Err(ExperimentError::config("link.carrier", "must be positive"));
        }
        if self.link.pilots == 0 {
            return Err(ExperimentError::config("link.pilots", "must be at least 1"));
        }
        if !self.link.power_dbm.is_finite() {
            return Err(ExperimentError::config("link.power_dbm", "must be finite"));
        }
        match &self.array {
            ArraySource::Synthetic { ports, coupling, selectivity, .. } => {
                if *ports == 0 {
                    return Err(ExperimentError::config("array.ports", "must be at least 1"));
                }
                if !(0.0..1.0).contains(coupling) || !selectivity.is_finite() {
                    return Err(ExperimentError::config("array.coupling", "must lie in [0, 1)"));
                }
            }
            ArraySource::Dipole { length, spacing, .. } => {
                if !(*length > 0.0 && *spacing > 0.0) {
                    return Err(ExperimentError::config("array.length", "length and spacing must be positive"));
                }
            }
            ArraySource::Touchstone { .. } => {}
        }
        if let Some(o) = &self.ofdm {
            if o.subcarriers == 0 || o.slots == 0 {
                return Err(ExperimentError::config("ofdm.subcarriers", "subcarriers and slots must be at least 1"));
            }
            if o.taps_true == 0 || o.taps_true > o.subcarriers || o.taps_assumed == 0 || o.taps_assumed > o.subcarriers
            {
                return Err(ExperimentError::config("ofdm.taps_true", "tap counts must lie in 1..=subcarriers"));
            }
            if !(o.band_start > 0.0 && o.band_stop > o.band_start) {
                return Err(ExperimentError::config("ofdm.band_stop", "band must be increasing and positive"));
            }
        } else if self.kind.needs_ofdm() {
            return Err(ExperimentError::config("ofdm", "this sweep needs an [ofdm] section"));
        }
        if self.kind != SweepKind::PowerVsSubcarrier {
            let axis = self.sweep.resolve()?;
            match self.kind {
                SweepKind::NmseVsTaps => {
                    let k = self.ofdm.map_or(0, |o| o.subcarriers) as f64;
                    if axis.iter().any(|&l| l < 1.0 || l.fract() != 0.0 || l > k) {
                        return Err(ExperimentError::config(
                            "sweep.values",
                            "tap counts must be integers in 1..=subcarriers",
                        ));
                    }
                }
                SweepKind::NmseVsFrequency
                | SweepKind::SnrVsFrequency
                | SweepKind::RateVsFrequency
                | SweepKind::ChannelEquivalence
                    if axis.iter().any(|&f| f <= 0.0) =>
                {
                    return Err(ExperimentError::config("sweep.values", "frequencies must be positive"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
