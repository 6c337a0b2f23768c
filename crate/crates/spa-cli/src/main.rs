//! `spa` — config-driven front end for the parametric-amplifier models.
//!
//! Every subcommand reads one JSON config, evaluates a model table, and
//! writes a CSV or JSON artifact plus a `.meta.json` sidecar. Exit codes:
//! 0 ok, 1 config error, 2 model error, 3 I/O error.

mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spa_core::chain::{
    drive_power_from_ramsey, eta_hot_from_tsys, infer_reference_squeezing, line_gain,
    thermal_occupancy_bound, total_efficiency, tsys_from_noise,
};
use spa_core::dpa::{
    effective_params, gain_il, gain_ref_off, insertion_loss, optimal_squeeze, s_obs,
    scattering_set,
};
use spa_core::imd::{iip3_forward, pumped_susceptibility, ImdSetup};
use spa_core::mc::s_meas_pipeline;
use spa_core::snail::{flux_sweep, taylor_coeffs, SnailSpec};
use spa_core::solver::{solve_pump_for_gain, sweep, SolveRequest};
use spa_core::units::{hz_to_rad, lin_to_db, rad_to_hz, variance_to_db, watt_to_dbm};
use spa_core::ModelError;

use config::RunConfig;
use emit::{resolve_out_path, write_artifacts, Cell, Format, Table};

/// Application-level error, mapped onto the exit code.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Model(ModelError),
    Io(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 1,
            AppError::Model(_) => 2,
            AppError::Io(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            AppError::Config(m) => format!("config error: {m}"),
            AppError::Model(e) => format!("model error: {e}"),
            AppError::Io(m) => format!("io error: {m}"),
        }
    }
}

impl From<ModelError> for AppError {
    fn from(e: ModelError) -> Self {
        AppError::Model(e)
    }
}

#[derive(Parser)]
#[command(name = "spa", version, about = "Degenerate parametric amplifier model runner")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the RNG seed from the config output block.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the artifact path from the config output block.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the artifact format from the config output block.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Gain and insertion loss at one operating point.
    Gain,
    /// Squeezing observables at one operating point.
    Squeeze,
    /// Pump strength solving for the configured gain targets.
    Solve,
    /// Detuning sweep across gain targets.
    Sweep,
    /// Third-order intercept at one operating point.
    Iip3,
    /// Monte-Carlo heterodyne measurement simulation.
    Mc,
    /// Measurement-chain calibration quantities.
    Calibrate,
    /// Flux sweep of the SNAIL-derived device parameters.
    Snail,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Gain => "gain",
            Cmd::Squeeze => "squeeze",
            Cmd::Solve => "solve",
            Cmd::Sweep => "sweep",
            Cmd::Iip3 => "iip3",
            Cmd::Mc => "mc",
            Cmd::Calibrate => "calibrate",
            Cmd::Snail => "snail",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(path) => {
            println!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<PathBuf, AppError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| AppError::Config("--config <path> is required".into()))?;
    let (cfg, raw) = RunConfig::load(config_path)?;
    let seed = cli.seed.unwrap_or(cfg.output.seed);
    let format = match cli.format {
        Some(f) => f,
        None => Format::parse(&cfg.output.format)?,
    };
    let out = resolve_out_path(&cfg.output.path, cli.out.as_deref());

    let table = match cli.cmd {
        Cmd::Gain => cmd_gain(&cfg)?,
        Cmd::Squeeze => cmd_squeeze(&cfg)?,
        Cmd::Solve => cmd_solve(&cfg)?,
        Cmd::Sweep => cmd_sweep(&cfg)?,
        Cmd::Iip3 => cmd_iip3(&cfg)?,
        Cmd::Mc => cmd_mc(&cfg, seed)?,
        Cmd::Calibrate => cmd_calibrate(&cfg)?,
        Cmd::Snail => cmd_snail(&cfg)?,
    };
    write_artifacts(&out, format, &table, cli.cmd.name(), seed, &raw)?;
    Ok(out)
}

fn cmd_gain(cfg: &RunConfig) -> Result<Table, AppError> {
    let device = cfg.device()?;
    let (pump, kerr) = cfg.pump(&device)?;
    let eff = effective_params(&device, &pump, kerr);
    let g_il = gain_il(&eff, &device)?;
    let il = insertion_loss(&device, &pump);
    let mut t = Table::new(vec![
        "delta_hz",
        "n_p",
        "delta_eff_hz",
        "g_eff_hz",
        "kerr_hz",
        "g_il",
        "g_il_db",
        "insertion_loss",
        "insertion_loss_db",
        "gain_ref_off_db",
    ]);
    t.push(vec![
        Cell::Float(rad_to_hz(pump.delta)),
        Cell::Float(pump.n_p),
        Cell::Float(rad_to_hz(eff.delta_eff)),
        Cell::Float(rad_to_hz(eff.g_eff)),
        Cell::Float(rad_to_hz(kerr)),
        Cell::Float(g_il),
        Cell::Db(lin_to_db(g_il)),
        Cell::Float(il.power_ratio),
        Cell::Db(lin_to_db(il.power_ratio)),
        Cell::Db(lin_to_db(gain_ref_off(g_il, &il))),
    ]);
    Ok(t)
}

fn cmd_squeeze(cfg: &RunConfig) -> Result<Table, AppError> {
    let device = cfg.device()?;
    let (pump, kerr) = cfg.pump(&device)?;
    let chain = cfg.chain(&device)?;
    let eff = effective_params(&device, &pump, kerr);
    let s_obs_db = variance_to_db(s_obs(&eff, &device, chain.eta_external())?);
    let mut t = Table::new(vec![
        "delta_hz",
        "n_p",
        "g_eff_hz",
        "eta_total",
        "s_min_db",
        "anti_s_db",
        "theta_min_rad",
        "s_obs_db",
    ]);
    // the device-plane report needs a stable point; the observed value via
    // the closed form is defined as long as d0 != 0
    let (s_min_db, anti_db, theta_min) = match scattering_set(&eff, &device, 0.0) {
        Ok(scat) => {
            let rep = optimal_squeeze(&scat);
            (Cell::Db(rep.s_min_db), Cell::Db(rep.anti_s_db), Cell::Float(rep.theta_min))
        }
        Err(_) => (Cell::Text("unstable".into()), Cell::Text("unstable".into()), Cell::Text("unstable".into())),
    };
    t.push(vec![
        Cell::Float(rad_to_hz(pump.delta)),
        Cell::Float(pump.n_p),
        Cell::Float(rad_to_hz(eff.g_eff)),
        Cell::Float(total_efficiency(&chain)),
        s_min_db,
        anti_db,
        theta_min,
        Cell::Db(s_obs_db),
    ]);
    Ok(t)
}

fn cmd_solve(cfg: &RunConfig) -> Result<Table, AppError> {
    let device = cfg.device()?;
    let (pump, kerr) = cfg.pump(&device)?;
    let chain = cfg.chain(&device)?;
    let spec = cfg.sweep_spec(kerr, chain.eta_external())?;
    let mut t = Table::new(vec![
        "target_gain_db",
        "n_p",
        "achieved_gain_db",
        "converged",
        "g_max_db",
    ]);
    for &target in &spec.targets {
        let req = SolveRequest {
            device,
            delta: pump.delta,
            kerr,
            target_gain: target,
            retune_mode: spec.retune_mode,
        };
        match solve_pump_for_gain(&req) {
            Ok(res) => t.push(vec![
                Cell::Db(lin_to_db(target)),
                Cell::Float(res.n_p),
                Cell::Db(lin_to_db(res.achieved_gain)),
                Cell::Bool(res.converged),
                Cell::Db(lin_to_db(res.g_max)),
            ]),
            Err(ModelError::Unreachable { g_max, .. }) => t.push(vec![
                Cell::Db(lin_to_db(target)),
                Cell::Text("unreachable".into()),
                Cell::Text("unreachable".into()),
                Cell::Bool(false),
                Cell::Db(lin_to_db(g_max)),
            ]),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(t)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<Table, AppError> {
    let device = cfg.device()?;
    let (_, kerr) = match cfg.pump(&device) {
        Ok(pk) => (Some(pk.0), pk.1),
        // the sweep does not need a pump block if kerr comes from g3/g4
        Err(_) => (
            None,
            spa_core::dpa::kerr_lowest_order(device.g3, device.g4, device.omega0)?,
        ),
    };
    let chain = cfg.chain(&device)?;
    let spec = cfg.sweep_spec(kerr, chain.eta_external())?;
    let rows = sweep(&device, &spec);
    let mut t = Table::new(vec![
        "delta_hz",
        "target_gain_db",
        "n_p",
        "delta_eff_hz",
        "g_il_db",
        "s_obs_db",
        "theta_g_rad",
        "iip3_w",
        "iip3_dbm",
        "converged",
        "g_max_db",
    ]);
    for r in rows {
        t.push(vec![
            Cell::Float(rad_to_hz(r.delta)),
            Cell::Db(lin_to_db(r.target_gain)),
            Cell::Float(r.n_p),
            Cell::Float(rad_to_hz(r.delta_eff)),
            Cell::Db(lin_to_db(r.g_il)),
            Cell::Db(r.s_obs_db),
            Cell::Float(r.theta_g),
            Cell::Float(r.iip3_w),
            Cell::Db(r.iip3_dbm),
            Cell::Bool(r.converged),
            Cell::Db(lin_to_db(r.g_max)),
        ]);
    }
    Ok(t)
}

fn cmd_iip3(cfg: &RunConfig) -> Result<Table, AppError> {
    let device = cfg.device()?;
    let (pump, kerr) = cfg.pump(&device)?;
    let eff = effective_params(&device, &pump, kerr);
    let setup = match &cfg.imd {
        Some(b) => ImdSetup::new(
            device.omega0,
            pump.omega_p,
            hz_to_rad(b.f1_hz),
            hz_to_rad(b.f2_hz),
        )?,
        None => ImdSetup::narrowband(device.omega0, pump.omega_p, hz_to_rad(1e6)),
    };
    let resp = pumped_susceptibility(&eff, &device, 0.0)?;
    let res = iip3_forward(&device, &eff, resp.g_il, resp.theta_g, &setup)?;
    let mut t = Table::new(vec![
        "delta_hz",
        "n_p",
        "g_il_db",
        "theta_g_rad",
        "kerr_hz",
        "iip3_w",
        "iip3_dbm",
    ]);
    t.push(vec![
        Cell::Float(rad_to_hz(pump.delta)),
        Cell::Float(pump.n_p),
        Cell::Db(lin_to_db(resp.g_il)),
        Cell::Float(resp.theta_g),
        Cell::Float(rad_to_hz(res.k_abs)),
        Cell::Float(res.iip3),
        Cell::Db(res.iip3_dbm),
    ]);
    Ok(t)
}

fn cmd_mc(cfg: &RunConfig, seed: u64) -> Result<Table, AppError> {
    let device = cfg.device()?;
    let (pump, _) = cfg.pump(&device)?;
    let chain = cfg.chain(&device)?;
    let shots = cfg.mc_shots()?;
    let rep = s_meas_pipeline(&device, &pump, &chain, shots, seed)?;
    let mut t = Table::new(vec![
        "shots",
        "seed",
        "s_meas_db",
        "s_ref_db",
        "theta_min_rad",
        "var_i_on",
        "var_q_on",
        "var_q_off",
    ]);
    t.push(vec![
        Cell::Int(shots as i64),
        Cell::Int(seed as i64),
        Cell::Db(rep.s_meas_db),
        match rep.s_ref_db {
            Some(v) => Cell::Db(v),
            None => Cell::Text("below_noise_floor".into()),
        },
        Cell::Float(rep.theta_min),
        Cell::Float(rep.fit_on.cov.vxx),
        Cell::Float(rep.fit_on.cov.vyy),
        Cell::Float(rep.fit_off.cov.vyy),
    ]);
    Ok(t)
}

fn cmd_calibrate(cfg: &RunConfig) -> Result<Table, AppError> {
    let (rec, s_meas_db) = cfg.calibration_record()?;
    let drive = drive_power_from_ramsey(&rec)?;
    let g_line = line_gain(rec.p_meas, drive.p_d)?;
    let t_sys = tsys_from_noise(rec.p_n_meas, g_line, rec.bandwidth)?;
    let f_s = rad_to_hz(rec.omega_d);
    let eta_hot = eta_hot_from_tsys(t_sys, f_s)?;
    let n_th = thermal_occupancy_bound(rec.t1, rec.t2r, rec.kappa_c, rec.chi)?;
    let s_ref = match s_meas_db {
        Some(s) => Some(infer_reference_squeezing(s, eta_hot)?),
        None => None,
    };
    let mut t = Table::new(vec![
        "p_d_w",
        "p_d_dbm",
        "n_photons",
        "g_line",
        "g_line_db",
        "t_sys_k",
        "eta_hot",
        "n_th_bound",
        "s_ref_db",
    ]);
    t.push(vec![
        Cell::Float(drive.p_d),
        Cell::Db(watt_to_dbm(drive.p_d)),
        Cell::Float(drive.n_photons),
        Cell::Float(g_line),
        Cell::Db(lin_to_db(g_line)),
        Cell::Float(t_sys),
        Cell::Float(eta_hot),
        Cell::Float(n_th),
        match s_ref {
            Some(v) => Cell::Db(v),
            None => Cell::Text("not_provided".into()),
        },
    ]);
    Ok(t)
}

fn cmd_snail(cfg: &RunConfig) -> Result<Table, AppError> {
    let device_rates = cfg.device().ok();
    let (kappa_ext, kappa_int) = device_rates
        .map(|d| (d.kappa_ext, d.kappa_int))
        .unwrap_or((hz_to_rad(300e6), 0.0));
    let (spec, grid) = cfg.snail_spec()?;
    // validate the first point eagerly so broken loop parameters surface as
    // a model error instead of an empty table
    taylor_coeffs(&SnailSpec { phi_ext: grid[0], ..spec })?;
    let rows = flux_sweep(&spec, &grid, kappa_ext, kappa_int);
    let mut t = Table::new(vec![
        "phi_ext",
        "phi_min_rad",
        "c2",
        "c3",
        "c4",
        "f0_hz",
        "g3_hz",
        "g4_hz",
    ]);
    for r in rows {
        t.push(vec![
            Cell::Float(r.phi_ext),
            Cell::Float(r.coeffs.phi_min),
            Cell::Float(r.coeffs.c2),
            Cell::Float(r.coeffs.c3),
            Cell::Float(r.coeffs.c4),
            Cell::Float(rad_to_hz(r.device.omega0)),
            Cell::Float(rad_to_hz(r.device.g3)),
            Cell::Float(rad_to_hz(r.device.g4)),
        ]);
    }
    Ok(t)
}
