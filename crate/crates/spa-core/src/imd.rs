//! Two-tone intermodulation observables: pumped susceptibility and the gain
//! phase, forward IIP3, inverse Kerr extraction, and synthetic IMD sweep
//! generation with intercept fitting.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::dpa::{DeviceParams, EffectiveParams};
use crate::error::ModelError;
use crate::units::watt_to_dbm;

/// Two-tone drive geometry. Tone frequencies are absolute (rad/s); the
/// `nu_*` ratios `omega0 / omega_beta` enter the general intercept formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImdSetup {
    pub f1: f64,
    pub f2: f64,
    /// Tone spacing `|f2 - f1|` (rad/s).
    pub delta_imd: f64,
    /// Offset of the lower intermodulation product `2 f1 - f2` from
    /// `omega_p / 2` (rad/s).
    pub offset: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu_imd: f64,
}

impl ImdSetup {
    /// Build the geometry for tones at `f1`, `f2` (rad/s) about a device at
    /// `omega0` pumped at `omega_p`. Rejects coincident tones and tones
    /// outside the narrowband regime (`|nu - 1| < 0.05`).
    pub fn new(omega0: f64, omega_p: f64, f1: f64, f2: f64) -> Result<Self, ModelError> {
        if f1 == f2 {
            return Err(ModelError::InvalidParam { name: "f2", value: f2 });
        }
        let omega_imd = 2.0 * f1 - f2;
        let nu1 = omega0 / f1;
        let nu2 = omega0 / f2;
        let nu_imd = omega0 / omega_imd;
        for (name, nu) in [("nu1", nu1), ("nu2", nu2), ("nu_imd", nu_imd)] {
            if !((nu - 1.0).abs() < 0.05) {
                return Err(ModelError::InvalidParam { name, value: nu });
            }
        }
        Ok(Self {
            f1,
            f2,
            delta_imd: (f2 - f1).abs(),
            offset: omega_imd - omega_p / 2.0,
            nu1,
            nu2,
            nu_imd,
        })
    }

    /// Narrowband setup with all frequency ratios pinned to exactly 1.
    pub fn narrowband(omega0: f64, omega_p: f64, spacing: f64) -> Self {
        Self {
            f1: omega0,
            f2: omega0 + spacing,
            delta_imd: spacing,
            offset: omega0 - spacing - omega_p / 2.0,
            nu1: 1.0,
            nu2: 1.0,
            nu_imd: 1.0,
        }
    }

    /// `nu1^2 nu2 / nu_imd`, the prefactor of the general intercept formula.
    pub fn nu_factor(&self) -> f64 {
        self.nu1 * self.nu1 * self.nu2 / self.nu_imd
    }
}

/// Weak-signal response of the pumped device at offset `delta_omega` from
/// `omega_p / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpedResponse {
    /// Susceptibility `chi_s`.
    pub chi_s: C64,
    /// Complex amplitude gain `i kappa_ext chi_s - 1 = sqrt(G_IL) e^{i theta_g}`.
    pub amp_gain: C64,
    /// Power gain `|amp_gain|^2`.
    pub g_il: f64,
    /// Gain phase `arg(amp_gain)` (rad).
    pub theta_g: f64,
}

/// Pumped weak-signal susceptibility
/// `chi_s = (-d_omega - delta_eff - i kappa/2) / D_eff` with
/// `D_eff = delta_eff^2 - (d_omega + i kappa/2)^2 - g_eff^2`,
/// and the derived amplitude gain and phase.
pub fn pumped_susceptibility(
    eff: &EffectiveParams,
    device: &DeviceParams,
    delta_omega: f64,
) -> Result<PumpedResponse, ModelError> {
    let half_kappa = device.kappa() / 2.0;
    let dw = C64::new(delta_omega, half_kappa);
    let d_eff = C64::new(eff.delta_eff * eff.delta_eff - eff.g_eff * eff.g_eff, 0.0) - dw * dw;
    if d_eff.norm() == 0.0 {
        return Err(ModelError::SingularScattering { d0: 0.0 });
    }
    let chi_s = C64::new(-delta_omega - eff.delta_eff, -half_kappa) / d_eff;
    let amp_gain = C64::new(0.0, device.kappa_ext) * chi_s - C64::new(1.0, 0.0);
    Ok(PumpedResponse {
        chi_s,
        amp_gain,
        g_il: amp_gain.norm_sqr(),
        theta_g: amp_gain.arg(),
    })
}

/// Third-order intercept and the quantities that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iip3Result {
    /// Input-referred intercept power (W).
    pub iip3: f64,
    /// The same in dBm.
    pub iip3_dbm: f64,
    /// Gain phase used (rad).
    pub theta_g: f64,
    /// `|K|` used or inferred (rad/s).
    pub k_abs: f64,
}

/// Magnitude of the gain-phase denominator `|sqrt(G_IL) e^{i theta_g} + 1|`.
pub fn gain_phase_denom(g_il: f64, theta_g: f64) -> f64 {
    (C64::from_polar(g_il.sqrt(), theta_g) + C64::new(1.0, 0.0)).norm()
}

/// Input-referred third-order intercept:
/// `IIP3 = (nu1^2 nu2 / nu_imd) kappa_ext^2 hbar omega0
///         / (|K| |sqrt(G_IL) e^{i theta_g} + 1|^3)`.
///
/// `K = 0` yields an infinite-intercept sentinel rather than an error.
pub fn iip3_forward(
    device: &DeviceParams,
    eff: &EffectiveParams,
    g_il: f64,
    theta_g: f64,
    setup: &ImdSetup,
) -> Result<Iip3Result, ModelError> {
    if !(g_il >= 1.0) {
        return Err(ModelError::InvalidParam { name: "g_il", value: g_il });
    }
    let k_abs = eff.kerr.abs();
    if k_abs == 0.0 {
        return Ok(Iip3Result { iip3: f64::INFINITY, iip3_dbm: f64::INFINITY, theta_g, k_abs });
    }
    let denom = gain_phase_denom(g_il, theta_g);
    let iip3 = setup.nu_factor() * device.kappa_ext * device.kappa_ext * HBAR * device.omega0
        / (k_abs * denom * denom * denom);
    Ok(Iip3Result { iip3, iip3_dbm: watt_to_dbm(iip3), theta_g, k_abs })
}

/// Exact algebraic inverse of [`iip3_forward`] in the narrowband limit:
/// `|K| = kappa_ext^2 hbar omega0 / (IIP3 |sqrt(G_IL) e^{i theta_g} + 1|^3)`.
pub fn kerr_from_iip3(
    iip3_meas: f64,
    device: &DeviceParams,
    g_il: f64,
    theta_g: f64,
) -> Result<f64, ModelError> {
    if !(iip3_meas > 0.0) {
        return Err(ModelError::InvalidParam { name: "iip3_meas", value: iip3_meas });
    }
    if iip3_meas.is_infinite() {
        return Ok(0.0);
    }
    let denom = gain_phase_denom(g_il, theta_g);
    Ok(device.kappa_ext * device.kappa_ext * HBAR * device.omega0
        / (iip3_meas * denom * denom * denom))
}

/// One row of a synthetic two-tone power sweep (equal power per tone).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImdSweepRow {
    /// Per-tone input power (W).
    pub p_in: f64,
    /// Per-tone fundamental output power `G_IL * P_in` (W).
    pub p_fund_out: f64,
    /// Sideband output power at `2 f1 - f2` (W).
    pub p_imd_out: f64,
    /// Intracavity photon number in tone 1.
    pub n1: f64,
    /// Intracavity photon number in tone 2.
    pub n2: f64,
}

/// Exact-cubic IMD sweep: fundamentals grow 1 dB/dB, sidebands 3 dB/dB.
/// Photon numbers follow
/// `n_beta = |sqrt(G_IL) e^{i theta_g} + 1|^2 / nu_beta^2 * P_in / (hbar omega0 kappa_ext)`
/// and the sideband power is
/// `P_imd = G_IL (hbar omega0 / kappa_ext) nu_imd^2 K^2 n1^2 n2`.
pub fn imd_sweep_simulate(
    device: &DeviceParams,
    eff: &EffectiveParams,
    setup: &ImdSetup,
    power_grid: &[f64],
) -> Result<Vec<ImdSweepRow>, ModelError> {
    let resp = pumped_susceptibility(eff, device, 0.0)?;
    let denom_sq = resp.amp_gain.norm_sqr() + 2.0 * resp.amp_gain.re + 1.0;
    let photon_scale = denom_sq / (HBAR * device.omega0 * device.kappa_ext);
    let k2 = eff.kerr * eff.kerr;
    let rows = power_grid
        .iter()
        .map(|&p_in| {
            let n1 = photon_scale / (setup.nu1 * setup.nu1) * p_in;
            let n2 = photon_scale / (setup.nu2 * setup.nu2) * p_in;
            let p_imd_out = resp.g_il * (HBAR * device.omega0 / device.kappa_ext)
                * setup.nu_imd
                * setup.nu_imd
                * k2
                * n1
                * n1
                * n2;
            ImdSweepRow { p_in, p_fund_out: resp.g_il * p_in, p_imd_out, n1, n2 }
        })
        .collect();
    Ok(rows)
}

/// Fit a two-tone power sweep for the input-referred intercept. Works in the
/// dB domain with slopes fixed at 1 (fundamental) and 3 (sideband); only the
/// lowest-power half of the sweep (at least 4 points) enters the fit, since
/// high-power data departs from the cubic law in practice.
pub fn intercept_fit(
    powers_in: &[f64],
    p_fund: &[f64],
    p_side: &[f64],
) -> Result<f64, ModelError> {
    let n = powers_in.len();
    if p_fund.len() != n || p_side.len() != n {
        return Err(ModelError::InsufficientPoints { needed: n, got: p_fund.len().min(p_side.len()) });
    }
    if n < 4 {
        return Err(ModelError::InsufficientPoints { needed: 4, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| powers_in[a].total_cmp(&powers_in[b]));
    let window = (n / 2).max(4);

    let mut b1_sum = 0.0;
    let mut b3_sum = 0.0;
    for &i in order.iter().take(window) {
        if !(powers_in[i] > 0.0 && p_fund[i] > 0.0 && p_side[i] > 0.0) {
            return Err(ModelError::DegenerateFit);
        }
        let x = watt_to_dbm(powers_in[i]);
        b1_sum += watt_to_dbm(p_fund[i]) - x;
        b3_sum += watt_to_dbm(p_side[i]) - 3.0 * x;
    }
    let b1 = b1_sum / window as f64;
    let b3 = b3_sum / window as f64;
    let x_star_dbm = (b1 - b3) / 2.0;
    if !x_star_dbm.is_finite() {
        return Err(ModelError::DegenerateFit);
    }
    Ok(crate::units::dbm_to_watt(x_star_dbm))
}
