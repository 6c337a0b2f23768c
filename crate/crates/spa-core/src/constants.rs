//! Physical constants, CODATA 2018 exact values (SI).

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Magnetic flux quantum h / 2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

/// Superconducting resistance quantum h / 4e^2 (ohm).
pub const RESISTANCE_QUANTUM: f64 =
    PLANCK / (4.0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE);
