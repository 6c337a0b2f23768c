//! Unit conversions shared across the crate.
//!
//! Internal convention: angular frequencies in rad/s, powers in W,
//! quadrature variances with vacuum = 1/2 and decibels as
//! `10 * log10(2 * variance)`.

use std::f64::consts::TAU;

/// Cyclic frequency (Hz) to angular frequency (rad/s).
pub fn hz_to_rad(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency (rad/s) to cyclic frequency (Hz).
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// Linear power ratio to dB.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dB to linear power ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Quadrature variance (vacuum = 1/2) to dB relative to vacuum.
pub fn variance_to_db(v: f64) -> f64 {
    lin_to_db(2.0 * v)
}

/// dB relative to vacuum to quadrature variance.
pub fn db_to_variance(db: f64) -> f64 {
    db_to_lin(db) / 2.0
}

/// Power in W to dBm.
pub fn watt_to_dbm(p: f64) -> f64 {
    10.0 * (p / 1e-3).log10()
}

/// dBm to power in W.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}
