//! Linearized pump-biased DPA: drift matrix, port-resolved scattering,
//! reflection gain, and quadrature squeezing with internal loss.
//!
//! The signal-band fluctuations obey a 2x2 drift matrix
//! `N = [[-i*delta_eff - k/2, -i*g], [i*g, i*delta_eff - k/2]]`
//! with total linewidth `k = kappa_ext + kappa_int`. The measurement-port
//! and internal-port scattering blocks at analysis frequency `omega` are
//! `S_ext = -kappa_ext (i*omega*I + N)^-1 - I` and
//! `S_int = -sqrt(kappa_ext*kappa_int) (i*omega*I + N)^-1`, tied together by
//! the generalized Bogoliubov identity
//! `sum_mu (|S_mu,11|^2 - |S_mu,12|^2) = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::units::{hz_to_rad, variance_to_db};

type C64 = Complex64;

/// 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
}

impl Mat2 {
    pub fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::new(one, zero, zero, one)
    }

    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.m11 + other.m11,
            self.m12 + other.m12,
            self.m21 + other.m21,
            self.m22 + other.m22,
        )
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let inv = C64::new(1.0, 0.0) / d;
        Some(Self::new(
            self.m22 * inv,
            -self.m12 * inv,
            -self.m21 * inv,
            self.m11 * inv,
        ))
    }
}

/// Bare device parameters: resonance, nonlinearities, and coupling rates.
/// All fields are angular frequencies (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub omega0: f64,
    pub g3: f64,
    pub g4: f64,
    pub kappa_ext: f64,
    pub kappa_int: f64,
}

impl DeviceParams {
    pub fn new(
        omega0: f64,
        g3: f64,
        g4: f64,
        kappa_ext: f64,
        kappa_int: f64,
    ) -> Result<Self, ModelError> {
        if !(omega0 > 0.0) {
            return Err(ModelError::InvalidParam { name: "omega0", value: omega0 });
        }
        if !(kappa_ext > 0.0) {
            return Err(ModelError::InvalidParam { name: "kappa_ext", value: kappa_ext });
        }
        if !(kappa_int >= 0.0) {
            return Err(ModelError::InvalidParam { name: "kappa_int", value: kappa_int });
        }
        Ok(Self { omega0, g3, g4, kappa_ext, kappa_int })
    }

    /// Build from cyclic frequencies (Hz).
    pub fn from_cyclic(
        f0: f64,
        g3: f64,
        g4: f64,
        kappa_ext: f64,
        kappa_int: f64,
    ) -> Result<Self, ModelError> {
        Self::new(
            hz_to_rad(f0),
            hz_to_rad(g3),
            hz_to_rad(g4),
            hz_to_rad(kappa_ext),
            hz_to_rad(kappa_int),
        )
    }

    /// Total linewidth `kappa_ext + kappa_int`.
    pub fn kappa(&self) -> f64 {
        self.kappa_ext + self.kappa_int
    }

    /// Device coupling efficiency `1 - kappa_int / kappa`.
    pub fn eta_int(&self) -> f64 {
        1.0 - self.kappa_int / self.kappa()
    }
}

/// A pump bias point: pump frequency, intra-resonator pump photon number,
/// and the bare detuning `delta = omega0 - omega_p / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpPoint {
    pub omega_p: f64,
    pub n_p: f64,
    pub delta: f64,
}

impl PumpPoint {
    /// Construct from the pump frequency; `delta` is derived.
    pub fn new(omega_p: f64, n_p: f64, omega0: f64) -> Result<Self, ModelError> {
        if !(n_p >= 0.0) {
            return Err(ModelError::InvalidParam { name: "n_p", value: n_p });
        }
        Ok(Self { omega_p, n_p, delta: omega0 - omega_p / 2.0 })
    }

    /// Construct from the bare detuning; `omega_p` is derived.
    pub fn from_delta(delta: f64, n_p: f64, omega0: f64) -> Result<Self, ModelError> {
        if !(n_p >= 0.0) {
            return Err(ModelError::InvalidParam { name: "n_p", value: n_p });
        }
        Ok(Self { omega_p: 2.0 * (omega0 - delta), n_p, delta })
    }

    /// Check the `delta = omega0 - omega_p/2` consistency to 1e-9 relative.
    pub fn is_consistent(&self, omega0: f64) -> bool {
        let expect = omega0 - self.omega_p / 2.0;
        let scale = omega0.abs().max(1.0);
        (self.delta - expect).abs() <= 1e-9 * scale
    }
}

/// Pump-dressed effective parameters of the linearized DPA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    /// Stark-shifted detuning `delta + (8/9) K n_p` (rad/s).
    pub delta_eff: f64,
    /// Squeezing rate `4 |g3| sqrt(n_p)` (rad/s).
    pub g_eff: f64,
    /// Effective Kerr constant (rad/s, signed).
    pub kerr: f64,
    /// Stability discriminant `delta_eff^2 + (kappa/2)^2 - g_eff^2`.
    pub d0: f64,
}

impl EffectiveParams {
    /// Stable iff the discriminant is positive.
    pub fn is_stable(&self) -> bool {
        self.d0 > 0.0
    }

    /// Parametric instability threshold on `g_eff` for this detuning.
    pub fn threshold(&self) -> f64 {
        (self.g_eff * self.g_eff + self.d0).sqrt()
    }

    fn instability(&self) -> ModelError {
        ModelError::Instability {
            d0: self.d0,
            g_eff: self.g_eff,
            threshold: self.threshold(),
        }
    }
}

/// Pump-dressed parameters from a device, pump point, and effective Kerr.
///
/// `kerr` is an input so a measured value can be used in place of
/// [`kerr_lowest_order`]. An unstable result (`d0 <= 0`) is flagged in the
/// return value, not reported as an error.
pub fn effective_params(device: &DeviceParams, pump: &PumpPoint, kerr: f64) -> EffectiveParams {
    let delta_eff = pump.delta + (8.0 / 9.0) * kerr * pump.n_p;
    let g_eff = 4.0 * device.g3.abs() * pump.n_p.sqrt();
    let half_kappa = device.kappa() / 2.0;
    let d0 = delta_eff * delta_eff + half_kappa * half_kappa - g_eff * g_eff;
    EffectiveParams { delta_eff, g_eff, kerr, d0 }
}

/// Lowest-order Kerr constant `K = 12 (g4 - 5 g3^2 / omega_a)` at
/// vanishing pump power. All arguments in rad/s.
pub fn kerr_lowest_order(g3: f64, g4: f64, omega_a: f64) -> Result<f64, ModelError> {
    if omega_a == 0.0 {
        return Err(ModelError::InvalidParam { name: "omega_a", value: omega_a });
    }
    Ok(12.0 * (g4 - 5.0 * g3 * g3 / omega_a))
}

/// Drift matrix and port-resolved scattering blocks at one analysis frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringSet {
    pub drift: Mat2,
    pub s_ext: Mat2,
    pub s_int: Mat2,
    /// Analysis frequency (rad/s) relative to the pump subharmonic.
    pub omega: f64,
}

impl ScatteringSet {
    /// Left-hand side of the generalized Bogoliubov identity; 1 when exact.
    pub fn bogoliubov_sum(&self) -> f64 {
        self.s_ext.m11.norm_sqr() - self.s_ext.m12.norm_sqr() + self.s_int.m11.norm_sqr()
            - self.s_int.m12.norm_sqr()
    }
}

/// Build the drift matrix for the effective parameters.
pub fn drift_matrix(eff: &EffectiveParams, device: &DeviceParams) -> Mat2 {
    let half_kappa = device.kappa() / 2.0;
    Mat2::new(
        C64::new(-half_kappa, -eff.delta_eff),
        C64::new(0.0, -eff.g_eff),
        C64::new(0.0, eff.g_eff),
        C64::new(-half_kappa, eff.delta_eff),
    )
}

/// Port-resolved scattering blocks at analysis frequency `omega`.
///
/// Errors when `(i*omega*I + N)` is singular, which is the
/// parametric-oscillation pole.
pub fn scattering_set(
    eff: &EffectiveParams,
    device: &DeviceParams,
    omega: f64,
) -> Result<ScatteringSet, ModelError> {
    let drift = drift_matrix(eff, device);
    let i_omega = Mat2::identity().scale(C64::new(0.0, omega));
    let m = i_omega.add(&drift);
    let m_inv = m
        .inverse()
        .ok_or(ModelError::SingularScattering { d0: eff.d0 })?;
    // Guard against near-singular inversions right at threshold.
    if !m_inv.m11.is_finite() || !m_inv.m12.is_finite() {
        return Err(ModelError::SingularScattering { d0: eff.d0 });
    }
    let s_ext = m_inv
        .scale(C64::new(-device.kappa_ext, 0.0))
        .add(&Mat2::identity().scale(C64::new(-1.0, 0.0)));
    let s_int = m_inv.scale(C64::new(-(device.kappa_ext * device.kappa_int).sqrt(), 0.0));
    Ok(ScatteringSet { drift, s_ext, s_int, omega })
}

/// Reflection power gain referenced to unity transmission, closed form:
/// `G_IL = ((D0 - kappa_ext*kappa/2)^2 + (kappa_ext*delta_eff)^2) / D0^2`.
///
/// Errors on `d0 <= 0` (beyond the parametric instability threshold).
pub fn gain_il(eff: &EffectiveParams, device: &DeviceParams) -> Result<f64, ModelError> {
    if eff.d0 <= 0.0 {
        return Err(eff.instability());
    }
    Ok(gain_il_unchecked(eff, device))
}

fn gain_il_unchecked(eff: &EffectiveParams, device: &DeviceParams) -> f64 {
    let a = eff.d0 - device.kappa_ext * device.kappa() / 2.0;
    let b = device.kappa_ext * eff.delta_eff;
    (a * a + b * b) / (eff.d0 * eff.d0)
}

/// Pump-off reflection at the signal frequency `omega_p / 2`:
/// `S11_off = i*kappa_ext*chi0 - 1` with `chi0^-1 = -delta + i*kappa/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertionLoss {
    pub s11_off: C64,
    /// `|S11_off|^2`, a power ratio <= 1.
    pub power_ratio: f64,
}

/// Pump-off reflection magnitude, quantifying the device insertion loss
/// that separates `G` (referenced to the pump-off trace) from `G_IL`.
pub fn insertion_loss(device: &DeviceParams, pump: &PumpPoint) -> InsertionLoss {
    let chi0 = C64::new(1.0, 0.0) / C64::new(-pump.delta, device.kappa() / 2.0);
    let s11_off = C64::new(0.0, device.kappa_ext) * chi0 - C64::new(1.0, 0.0);
    InsertionLoss { s11_off, power_ratio: s11_off.norm_sqr() }
}

/// Gain referenced to the pump-off reflection, `G = G_IL / |S11_off|^2`.
pub fn gain_ref_off(g_il: f64, il: &InsertionLoss) -> f64 {
    g_il / il.power_ratio
}

/// Output quadrature variance at angle `theta` (vacuum = 1/2):
/// `S(theta) = 1/2 sum_mu |S_mu,11 e^{-i theta} + S_mu,12^* e^{i theta}|^2`.
pub fn squeeze_variance(scat: &ScatteringSet, theta: f64) -> f64 {
    let em = C64::from_polar(1.0, -theta);
    let ep = C64::from_polar(1.0, theta);
    let ext = (scat.s_ext.m11 * em + scat.s_ext.m12.conj() * ep).norm_sqr();
    let int = (scat.s_int.m11 * em + scat.s_int.m12.conj() * ep).norm_sqr();
    0.5 * (ext + int)
}

/// Optimal-quadrature squeezing summary at zero analysis frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeReport {
    /// Minimum quadrature variance (vacuum = 1/2).
    pub s_min: f64,
    /// Quadrature angle attaining `s_min` (rad).
    pub theta_min: f64,
    /// Variance of the conjugate (amplified) quadrature.
    pub anti_s: f64,
    /// `|S_ext,11|^2`, the power gain referenced to unity transmission.
    pub g_il: f64,
    pub s_min_db: f64,
    pub anti_s_db: f64,
}

/// Minimize the quadrature variance over theta, in closed form:
/// `s_min = 1/2 + sum_mu |S_mu,12|^2 - |sum_mu S_mu,11 S_mu,12|` at
/// `theta_min = 1/2 arg(sum_mu S_mu,11 S_mu,12) + pi/2`.
pub fn optimal_squeeze(scat: &ScatteringSet) -> SqueezeReport {
    let p = scat.s_ext.m11 * scat.s_ext.m12 + scat.s_int.m11 * scat.s_int.m12;
    // Theta-average of S(theta); equals 1/2 + sum|S_mu,12|^2 by the
    // Bogoliubov identity, but the explicit sum keeps near-threshold
    // roundoff consistent with squeeze_variance.
    let mean = 0.5
        * (scat.s_ext.m11.norm_sqr()
            + scat.s_ext.m12.norm_sqr()
            + scat.s_int.m11.norm_sqr()
            + scat.s_int.m12.norm_sqr());
    let s_min = mean - p.norm();
    let anti_s = mean + p.norm();
    let theta_min = 0.5 * p.arg() + std::f64::consts::FRAC_PI_2;
    let g_il = scat.s_ext.m11.norm_sqr();
    SqueezeReport {
        s_min,
        theta_min,
        anti_s,
        g_il,
        s_min_db: variance_to_db(s_min),
        anti_s_db: variance_to_db(anti_s),
    }
}

/// Closed-form lossy minimum variance from Table-style expressions:
/// `1/2 + kappa_ext*kappa*g^2/D0^2
///  - kappa_ext*g*sqrt((kappa^2/2 - D0)^2 + (kappa*delta_eff)^2)/D0^2`.
///
/// This rational form stays meaningful for any `d0 != 0`.
pub fn s_min_lossy_closed(eff: &EffectiveParams, device: &DeviceParams) -> f64 {
    let k = device.kappa();
    let ke = device.kappa_ext;
    let g = eff.g_eff;
    let d0 = eff.d0;
    let root = ((k * k / 2.0 - d0).powi(2) + (k * eff.delta_eff).powi(2)).sqrt();
    0.5 + ke * k * g * g / (d0 * d0) - ke * g * root / (d0 * d0)
}

/// Squeezing observed at the detector plane behind a chain of external
/// transmission efficiency `eta`:
/// `s_obs = eta * s_min_lossy + (1 - eta) / 2`.
///
/// Evaluated from the closed form, which remains finite for `d0 != 0`; the
/// exact pole `d0 == 0` is rejected.
pub fn s_obs(eff: &EffectiveParams, device: &DeviceParams, eta: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(ModelError::EtaOutOfRange { value: eta });
    }
    if eff.d0 == 0.0 {
        return Err(eff.instability());
    }
    Ok(eta * s_min_lossy_closed(eff, device) + (1.0 - eta) * 0.5)
}

/// Anti-squeezing predicted from the gain: `(sqrt(G) + sqrt(G-1))^2`,
/// approaching `4G` at large gain.
pub fn antisqueeze_check(g_il: f64) -> Result<f64, ModelError> {
    if !(g_il >= 1.0) {
        return Err(ModelError::InvalidParam { name: "g_il", value: g_il });
    }
    let s = g_il.sqrt() + (g_il - 1.0).sqrt();
    Ok(s * s)
}

/// Lossless squeezing-gain link `s_min = 1/2 (sqrt(G) - sqrt(G-1))^2`.
pub fn s_min_lossless_from_gain(g_il: f64) -> f64 {
    let d = g_il.sqrt() - (g_il - 1.0).sqrt();
    0.5 * d * d
}
