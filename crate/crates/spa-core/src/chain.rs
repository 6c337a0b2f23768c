//! Measurement-chain efficiency algebra and calibration: reference-plane
//! loss mapping, noise-temperature efficiency, Ramsey-derived drive power,
//! line gain, and thermal occupancy bounds.

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR, PLANCK};
use crate::error::ModelError;
use crate::units::{db_to_lin, lin_to_db};

/// Efficiencies of the three chain segments and their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyChain {
    /// Device coupling efficiency `1 - kappa_int/kappa`.
    pub eta_int: f64,
    /// Cold-path efficiency between squeezer and reference cavity.
    pub eta_cold: f64,
    /// Warm-chain efficiency from the reference cavity to the detector.
    pub eta_hot: f64,
}

impl EfficiencyChain {
    pub fn new(eta_int: f64, eta_cold: f64, eta_hot: f64) -> Result<Self, ModelError> {
        for v in [eta_int, eta_cold, eta_hot] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::EtaOutOfRange { value: v });
            }
        }
        Ok(Self { eta_int, eta_cold, eta_hot })
    }

    /// External (post-device) transmission `eta_cold * eta_hot`.
    pub fn eta_external(&self) -> f64 {
        self.eta_cold * self.eta_hot
    }

    /// Total efficiency `eta_int * eta_cold * eta_hot`.
    pub fn eta_total(&self) -> f64 {
        self.eta_int * self.eta_cold * self.eta_hot
    }
}

/// Total efficiency of a validated chain.
pub fn total_efficiency(chain: &EfficiencyChain) -> f64 {
    chain.eta_total()
}

/// Raw calibration inputs for the chain derivations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    /// Qubit relaxation time (s).
    pub t1: f64,
    /// Ramsey coherence time (s).
    pub t2r: f64,
    /// Dispersive shift (rad/s).
    pub chi: f64,
    /// Readout cavity coupling rate (rad/s).
    pub kappa_c: f64,
    /// Cavity frequency with the qubit excited (rad/s).
    pub omega_ce: f64,
    /// Cavity frequency with the qubit in the ground state (rad/s).
    pub omega_cg: f64,
    /// Detuned drive frequency (rad/s).
    pub omega_d: f64,
    /// Stark-induced Ramsey phase shift (rad).
    pub delta_theta_max: f64,
    /// Ramsey delay (s).
    pub ramsey_delay: f64,
    /// Peak power at the analyzer (W).
    pub p_meas: f64,
    /// Noise power at the analyzer (W), normalized to `bandwidth`.
    pub p_n_meas: f64,
    /// Analyzer resolution bandwidth (Hz).
    pub bandwidth: f64,
}

/// Map measured squeezing (dB) back to the reference plane:
/// `S = 10 log10((10^{S_meas/10} - (1 - eta_hot)) / eta_hot)`.
///
/// Errors when the measured variance sits below the chain noise floor.
pub fn infer_reference_squeezing(s_meas_db: f64, eta_hot: f64) -> Result<f64, ModelError> {
    if !(0.0 < eta_hot && eta_hot <= 1.0) {
        return Err(ModelError::EtaOutOfRange { value: eta_hot });
    }
    let arg = db_to_lin(s_meas_db) - (1.0 - eta_hot);
    if arg <= 0.0 {
        return Err(ModelError::BelowNoiseFloor { s_meas_db, eta_hot });
    }
    Ok(lin_to_db(arg / eta_hot))
}

/// Forward map of [`infer_reference_squeezing`]: reference-plane squeezing
/// (dB) to what the detector records behind `eta_hot`.
pub fn measured_from_reference(s_db: f64, eta_hot: f64) -> f64 {
    lin_to_db(eta_hot * db_to_lin(s_db) + (1.0 - eta_hot))
}

/// Warm-chain efficiency from the system noise temperature:
/// `eta_hot = 1 / (1 + 2 k_B T_sys / (h f_s))`.
pub fn eta_hot_from_tsys(t_sys: f64, f_s: f64) -> Result<f64, ModelError> {
    if t_sys < 0.0 {
        return Err(ModelError::InvalidParam { name: "t_sys", value: t_sys });
    }
    Ok(1.0 / (1.0 + 2.0 * BOLTZMANN * t_sys / (PLANCK * f_s)))
}

/// High-temperature asymptote `h f_s / (2 k_B T_sys)`.
pub fn eta_hot_high_t(t_sys: f64, f_s: f64) -> f64 {
    PLANCK * f_s / (2.0 * BOLTZMANN * t_sys)
}

/// System noise temperature from referred noise power:
/// `T_sys = P_n / (k_B G_line B)`.
pub fn tsys_from_noise(p_n_meas: f64, g_line: f64, bandwidth: f64) -> Result<f64, ModelError> {
    if !(g_line > 0.0) {
        return Err(ModelError::InvalidParam { name: "g_line", value: g_line });
    }
    if !(bandwidth > 0.0) {
        return Err(ModelError::InvalidParam { name: "bandwidth", value: bandwidth });
    }
    Ok(p_n_meas / (BOLTZMANN * g_line * bandwidth))
}

/// Drive power inferred from the Stark-shifted Ramsey experiment, plus the
/// photon number populating the readout cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyDrive {
    /// Power incident on the readout port (W).
    pub p_d: f64,
    /// Inferred cavity photon number `delta_theta_max / (chi T)`.
    pub n_photons: f64,
}

/// `P_d = hbar omega_d dTheta (omega_ce + omega_cg - 2 omega_d)^2 / (4 T chi kappa_c)`.
pub fn drive_power_from_ramsey(rec: &CalibrationRecord) -> Result<RamseyDrive, ModelError> {
    if !(rec.ramsey_delay > 0.0) {
        return Err(ModelError::InvalidParam { name: "ramsey_delay", value: rec.ramsey_delay });
    }
    if !(rec.chi > 0.0) {
        return Err(ModelError::InvalidParam { name: "chi", value: rec.chi });
    }
    if !(rec.kappa_c > 0.0) {
        return Err(ModelError::InvalidParam { name: "kappa_c", value: rec.kappa_c });
    }
    let detune_sum = rec.omega_ce + rec.omega_cg - 2.0 * rec.omega_d;
    let p_d = HBAR * rec.omega_d * rec.delta_theta_max * detune_sum * detune_sum
        / (4.0 * rec.ramsey_delay * rec.chi * rec.kappa_c);
    let n_photons = rec.delta_theta_max / (rec.chi * rec.ramsey_delay);
    Ok(RamseyDrive { p_d, n_photons })
}

/// Output line gain `G_line = P_meas / P_d`.
pub fn line_gain(p_meas: f64, p_d: f64) -> Result<f64, ModelError> {
    if !(p_d > 0.0) {
        return Err(ModelError::InvalidParam { name: "p_d", value: p_d });
    }
    Ok(p_meas / p_d)
}

/// Upper bound on the thermal occupancy of the field incident on the qubit
/// cavity, from excess Ramsey dephasing:
/// `n_th <= (1/T2R - 1/(2 T1)) (kappa_c^2 + chi^2) / (kappa_c chi^2)`.
pub fn thermal_occupancy_bound(
    t1: f64,
    t2r: f64,
    kappa_c: f64,
    chi: f64,
) -> Result<f64, ModelError> {
    if t2r > 2.0 * t1 {
        return Err(ModelError::InvalidParam { name: "t2r", value: t2r });
    }
    let gamma_phi = 1.0 / t2r - 1.0 / (2.0 * t1);
    Ok(gamma_phi * (kappa_c * kappa_c + chi * chi) / (kappa_c * chi * chi))
}
