use thiserror::Error;

/// Errors produced by the model layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParam { name: &'static str, value: f64 },

    /// The operating point sits at or beyond the parametric-oscillation
    /// threshold, where the linearized gain diverges.
    #[error(
        "parametric instability: D0 = {d0:.6e} <= 0 \
         (g_eff = {g_eff:.6e} rad/s, threshold = {threshold:.6e} rad/s)"
    )]
    Instability { d0: f64, g_eff: f64, threshold: f64 },

    #[error("scattering matrix singular at the parametric-oscillation pole (D0 = {d0:.6e})")]
    SingularScattering { d0: f64 },

    #[error("efficiency {value} outside [0, 1]")]
    EtaOutOfRange { value: f64 },

    #[error("target gain {target:.4} unreachable; maximum achievable gain is {g_max:.4}")]
    Unreachable { target: f64, g_max: f64 },

    #[error("no bracketed potential minimum for alpha = {alpha}, n = {n}")]
    NoBracketedMinimum { alpha: f64, n: u32 },

    /// The measured variance lies below what the chain noise floor allows,
    /// so no reference-plane squeezing value is consistent with it.
    #[error("measured squeezing {s_meas_db} dB below chain noise floor for eta_hot = {eta_hot}")]
    BelowNoiseFloor { s_meas_db: f64, eta_hot: f64 },

    #[error("covariance is not positive semidefinite")]
    NotPositiveSemidefinite,

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("degenerate fit")]
    DegenerateFit,
}
