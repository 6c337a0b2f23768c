//! JSON run configuration. Humans write cyclic frequencies in Hz; the
//! loader owns the conversion to angular frequencies (rad/s), so everything
//! downstream of [`RunConfig::load`] is already in model units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spa_core::chain::{CalibrationRecord, EfficiencyChain};
use spa_core::dpa::{kerr_lowest_order, DeviceParams, PumpPoint};
use spa_core::snail::SnailSpec;
use spa_core::solver::{RetuneMode, SweepSpec};
use spa_core::units::{db_to_lin, hz_to_rad};

use crate::AppError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceBlock {
    pub f0_hz: f64,
    pub g3_hz: f64,
    pub g4_hz: f64,
    pub kappa_ext_hz: f64,
    pub kappa_int_hz: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PumpBlock {
    pub n_p: f64,
    #[serde(default)]
    pub delta_hz: f64,
    /// Kerr constant in Hz; omitted means the lowest-order value from
    /// `g3`, `g4`.
    #[serde(default)]
    pub kerr_hz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    /// Device coupling efficiency; omitted means `1 - kappa_int/kappa`.
    #[serde(default)]
    pub eta_int: Option<f64>,
    pub eta_cold: f64,
    pub eta_hot: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub delta_start_hz: f64,
    pub delta_stop_hz: f64,
    pub delta_points: usize,
    pub target_gains_db: Vec<f64>,
    #[serde(default = "default_retune")]
    pub retune_mode: RetuneModeConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RetuneModeConfig {
    FixedDelta,
    ZeroDeltaEff,
}

fn default_retune() -> RetuneModeConfig {
    RetuneModeConfig::FixedDelta
}

impl From<RetuneModeConfig> for RetuneMode {
    fn from(m: RetuneModeConfig) -> Self {
        match m {
            RetuneModeConfig::FixedDelta => RetuneMode::FixedDelta,
            RetuneModeConfig::ZeroDeltaEff => RetuneMode::ZeroDeltaEff,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ImdBlock {
    pub f1_hz: f64,
    pub f2_hz: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub shots: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SnailBlock {
    pub n_junctions: u32,
    pub alpha: f64,
    pub lj_h: f64,
    pub participation: f64,
    pub resonator_impedance_ohm: f64,
    pub f_scale_hz: f64,
    pub phi_start: f64,
    pub phi_stop: f64,
    pub phi_points: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateBlock {
    pub t1_s: f64,
    pub t2r_s: f64,
    pub chi_hz: f64,
    pub kappa_c_hz: f64,
    pub f_ce_hz: f64,
    pub f_cg_hz: f64,
    pub f_d_hz: f64,
    pub delta_theta_max_rad: f64,
    pub ramsey_delay_s: f64,
    pub p_meas_w: f64,
    pub p_n_meas_w: f64,
    pub bandwidth_hz: f64,
    /// Measured squeezing at the detector (dB), mapped back to the
    /// reference plane through `eta_hot`.
    #[serde(default)]
    pub s_meas_db: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_format")]
    pub format: String,
    pub path: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_format() -> String {
    "csv".to_owned()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub device: Option<DeviceBlock>,
    #[serde(default)]
    pub pump: Option<PumpBlock>,
    #[serde(default)]
    pub chain: Option<ChainBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub imd: Option<ImdBlock>,
    #[serde(default)]
    pub mc: Option<McBlock>,
    #[serde(default)]
    pub snail: Option<SnailBlock>,
    #[serde(default)]
    pub calibrate: Option<CalibrateBlock>,
    pub output: OutputBlock,
}

impl RunConfig {
    /// Read and validate a config file; also returns the raw bytes for
    /// hashing into the metadata sidecar.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), AppError> {
        let raw = std::fs::read(path)
            .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_slice(&raw)
            .map_err(|e| AppError::Config(format!("invalid config: {e}")))?;
        Ok((cfg, raw))
    }

    pub fn device(&self) -> Result<DeviceParams, AppError> {
        let d = self.device.as_ref().ok_or_else(|| missing("device"))?;
        DeviceParams::from_cyclic(d.f0_hz, d.g3_hz, d.g4_hz, d.kappa_ext_hz, d.kappa_int_hz)
            .map_err(AppError::Model)
    }

    pub fn pump(&self, device: &DeviceParams) -> Result<(PumpPoint, f64), AppError> {
        let p = self.pump.as_ref().ok_or_else(|| missing("pump"))?;
        let kerr = match p.kerr_hz {
            Some(k) => hz_to_rad(k),
            None => kerr_lowest_order(device.g3, device.g4, device.omega0)
                .map_err(AppError::Model)?,
        };
        let pump = PumpPoint::from_delta(hz_to_rad(p.delta_hz), p.n_p, device.omega0)
            .map_err(AppError::Model)?;
        Ok((pump, kerr))
    }

    pub fn chain(&self, device: &DeviceParams) -> Result<EfficiencyChain, AppError> {
        let c = self.chain.as_ref().ok_or_else(|| missing("chain"))?;
        EfficiencyChain::new(c.eta_int.unwrap_or_else(|| device.eta_int()), c.eta_cold, c.eta_hot)
            .map_err(AppError::Model)
    }

    pub fn sweep_spec(&self, kerr: f64, eta: f64) -> Result<SweepSpec, AppError> {
        let s = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
        if s.delta_points == 0 {
            return Err(AppError::Config("sweep.delta_points must be positive".into()));
        }
        let deltas = (0..s.delta_points)
            .map(|i| {
                let frac = if s.delta_points == 1 {
                    0.0
                } else {
                    i as f64 / (s.delta_points - 1) as f64
                };
                hz_to_rad(s.delta_start_hz + frac * (s.delta_stop_hz - s.delta_start_hz))
            })
            .collect();
        Ok(SweepSpec {
            deltas,
            targets: s.target_gains_db.iter().map(|&db| db_to_lin(db)).collect(),
            eta,
            kerr,
            retune_mode: s.retune_mode.into(),
        })
    }

    pub fn snail_spec(&self) -> Result<(SnailSpec, Vec<f64>), AppError> {
        let s = self.snail.as_ref().ok_or_else(|| missing("snail"))?;
        let spec = SnailSpec::new(
            s.n_junctions,
            s.alpha,
            s.lj_h,
            s.participation,
            s.phi_start,
            s.resonator_impedance_ohm,
            hz_to_rad(s.f_scale_hz),
        )
        .map_err(AppError::Model)?;
        if s.phi_points == 0 {
            return Err(AppError::Config("snail.phi_points must be positive".into()));
        }
        let grid = (0..s.phi_points)
            .map(|i| {
                let frac = if s.phi_points == 1 {
                    0.0
                } else {
                    i as f64 / (s.phi_points - 1) as f64
                };
                s.phi_start + frac * (s.phi_stop - s.phi_start)
            })
            .collect();
        Ok((spec, grid))
    }

    pub fn calibration_record(&self) -> Result<(CalibrationRecord, Option<f64>), AppError> {
        let c = self.calibrate.as_ref().ok_or_else(|| missing("calibrate"))?;
        let rec = CalibrationRecord {
            t1: c.t1_s,
            t2r: c.t2r_s,
            chi: hz_to_rad(c.chi_hz),
            kappa_c: hz_to_rad(c.kappa_c_hz),
            omega_ce: hz_to_rad(c.f_ce_hz),
            omega_cg: hz_to_rad(c.f_cg_hz),
            omega_d: hz_to_rad(c.f_d_hz),
            delta_theta_max: c.delta_theta_max_rad,
            ramsey_delay: c.ramsey_delay_s,
            p_meas: c.p_meas_w,
            p_n_meas: c.p_n_meas_w,
            bandwidth: c.bandwidth_hz,
        };
        Ok((rec, c.s_meas_db))
    }

    pub fn mc_shots(&self) -> Result<usize, AppError> {
        Ok(self.mc.as_ref().ok_or_else(|| missing("mc"))?.shots)
    }
}

fn missing(block: &str) -> AppError {
    AppError::Config(format!("config block `{block}` is required for this subcommand"))
}
