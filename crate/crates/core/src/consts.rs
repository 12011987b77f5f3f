//! Physical constants.

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 3e8;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.38e-23;

/// Free-space wave impedance 120π Ω.
pub const ETA0: f64 = 120.0 * std::f64::consts::PI;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
