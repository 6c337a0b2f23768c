//! Flux-dependent device parameters from the SNAIL potential
//! `U(phi)/E_J = -alpha cos(phi) - n cos((phi_e - phi)/n)`, with
//! `phi_e = 2 pi Phi_ext/Phi_0`: Taylor coefficients about the potential
//! minimum and their mapping onto resonator parameters.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::constants::{FLUX_QUANTUM, HBAR, RESISTANCE_QUANTUM};
use crate::dpa::DeviceParams;
use crate::error::ModelError;

/// SNAIL loop and embedding-resonator description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnailSpec {
    /// Number of large junctions in the array.
    pub n_junctions: u32,
    /// Small-to-large junction asymmetry, in (0, 1).
    pub alpha: f64,
    /// Large-junction inductance (H).
    pub lj: f64,
    /// Junction participation ratio, in (0, 1].
    pub participation: f64,
    /// External flux in units of the flux quantum.
    pub phi_ext: f64,
    /// Characteristic impedance of the embedding resonator (ohm).
    pub resonator_impedance: f64,
    /// Resonator frequency at zero flux (rad/s); the flux dependence scales
    /// off this value.
    pub resonator_frequency_scale: f64,
}

impl SnailSpec {
    pub fn new(
        n_junctions: u32,
        alpha: f64,
        lj: f64,
        participation: f64,
        phi_ext: f64,
        resonator_impedance: f64,
        resonator_frequency_scale: f64,
    ) -> Result<Self, ModelError> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(ModelError::InvalidParam { name: "alpha", value: alpha });
        }
        if n_junctions < 2 {
            return Err(ModelError::InvalidParam { name: "n_junctions", value: n_junctions as f64 });
        }
        if !(0.0 < participation && participation <= 1.0) {
            return Err(ModelError::InvalidParam { name: "participation", value: participation });
        }
        if !(lj > 0.0) {
            return Err(ModelError::InvalidParam { name: "lj", value: lj });
        }
        if !(resonator_impedance > 0.0) {
            return Err(ModelError::InvalidParam {
                name: "resonator_impedance",
                value: resonator_impedance,
            });
        }
        Ok(Self {
            n_junctions,
            alpha,
            lj,
            participation,
            phi_ext,
            resonator_impedance,
            resonator_frequency_scale,
        })
    }

    /// Large-junction Josephson energy `(Phi_0 / 2 pi)^2 / L_J` (J).
    pub fn josephson_energy(&self) -> f64 {
        let phi0_red = FLUX_QUANTUM / TAU;
        phi0_red * phi0_red / self.lj
    }

    /// Zero-point phase spread `sqrt(2 pi Z_c / R_Q)`.
    pub fn phi_zpf(&self) -> f64 {
        (TAU * self.resonator_impedance / RESISTANCE_QUANTUM).sqrt()
    }
}

/// Taylor expansion of the SNAIL potential about its minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoeffs {
    /// Location of the potential minimum (rad).
    pub phi_min: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// k-th derivative of `U/E_J` at `phi` (k = 1..=4).
fn potential_derivative(alpha: f64, n: f64, phi_e: f64, phi: f64, k: u32) -> f64 {
    let arg = (phi_e - phi) / n;
    match k {
        1 => alpha * phi.sin() - arg.sin(),
        2 => alpha * phi.cos() + arg.cos() / n,
        3 => -alpha * phi.sin() + arg.sin() / (n * n),
        4 => -alpha * phi.cos() - arg.cos() / (n * n * n),
        _ => unreachable!("derivative order out of range"),
    }
}

/// Locate the potential minimum in the principal branch (within pi of
/// `phi_e`) and expand the potential there. The minimum is bracketed on a
/// grid, refined by bisection on the first derivative to 1e-12 rad, and the
/// coefficients come from the analytic derivatives.
pub fn taylor_coeffs(spec: &SnailSpec) -> Result<TaylorCoeffs, ModelError> {
    let alpha = spec.alpha;
    let n = spec.n_junctions as f64;
    let phi_e = TAU * spec.phi_ext;
    let du = |phi: f64| potential_derivative(alpha, n, phi_e, phi, 1);

    let grid = 4000;
    let span = std::f64::consts::PI;
    let step = 2.0 * span / grid as f64;
    let mut bracket = None;
    for i in 0..grid {
        let a = phi_e - span + i as f64 * step;
        let b = a + step;
        // sign change with positive curvature marks a minimum
        if du(a) <= 0.0 && du(b) > 0.0 {
            bracket = Some((a, b));
            break;
        }
    }
    let (mut a, mut b) = bracket
        .ok_or(ModelError::NoBracketedMinimum { alpha, n: spec.n_junctions })?;
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if du(m) <= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let phi_min = 0.5 * (a + b);
    let c2 = potential_derivative(alpha, n, phi_e, phi_min, 2);
    if !(c2 > 0.0) {
        return Err(ModelError::NoBracketedMinimum { alpha, n: spec.n_junctions });
    }
    Ok(TaylorCoeffs {
        phi_min,
        c2,
        c3: potential_derivative(alpha, n, phi_e, phi_min, 3),
        c4: potential_derivative(alpha, n, phi_e, phi_min, 4),
    })
}

/// Map the flux point onto device parameters.
///
/// Convention (constants exposed here so fitted curves can be rescaled):
/// `omega0 = omega_scale sqrt((1 - p) + p c2/c2(0))`,
/// `g3 = (E_J/hbar)(c3/6) phi_zpf^3 p^2`,
/// `g4 = (E_J/hbar)(c4/24) phi_zpf^4 p^3`,
/// with `c2(0) = alpha + 1/n` the zero-flux curvature.
pub fn device_from_flux(
    spec: &SnailSpec,
    kappa_ext: f64,
    kappa_int: f64,
) -> Result<DeviceParams, ModelError> {
    let coeffs = taylor_coeffs(spec)?;
    let p = spec.participation;
    let c2_zero = spec.alpha + 1.0 / spec.n_junctions as f64;
    let omega0 =
        spec.resonator_frequency_scale * ((1.0 - p) + p * coeffs.c2 / c2_zero).sqrt();
    let ej_over_hbar = spec.josephson_energy() / HBAR;
    let zpf = spec.phi_zpf();
    let g3 = ej_over_hbar * (coeffs.c3 / 6.0) * zpf.powi(3) * p * p;
    let g4 = ej_over_hbar * (coeffs.c4 / 24.0) * zpf.powi(4) * p.powi(3);
    DeviceParams::new(omega0, g3, g4, kappa_ext, kappa_int)
}

/// One row of a flux sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxRow {
    pub phi_ext: f64,
    pub coeffs: TaylorCoeffs,
    pub device: DeviceParams,
}

/// Evaluate the device across a flux grid; rows where the potential loses
/// its minimum are skipped.
pub fn flux_sweep(
    spec: &SnailSpec,
    phi_grid: &[f64],
    kappa_ext: f64,
    kappa_int: f64,
) -> Vec<FluxRow> {
    phi_grid
        .iter()
        .filter_map(|&phi_ext| {
            let at = SnailSpec { phi_ext, ..*spec };
            let coeffs = taylor_coeffs(&at).ok()?;
            let device = device_from_flux(&at, kappa_ext, kappa_int).ok()?;
            Some(FluxRow { phi_ext, coeffs, device })
        })
        .collect()
}
