//! Modeling toolkit for a single-mode, three-wave-mixing degenerate
//! parametric amplifier (DPA) built around a flux-tunable SNAIL element.
//!
//! The crate is organized around the linearized, pump-biased description of
//! the amplifier: reflection gain, vacuum squeezing with internal loss,
//! Kerr-mediated intermodulation distortion, and the measurement-chain
//! efficiency algebra that connects device-plane squeezing to what a
//! room-temperature heterodyne receiver records.
//!
//! All rates are stored internally as angular frequencies (rad/s);
//! constructors that accept cyclic frequencies (Hz) convert at the boundary.
//! Quadrature variances reference the vacuum at 1/2, and decibel values are
//! `10 * log10(2 * variance)`.
//!
//! Sweeps and Monte-Carlo sampling are data-parallel over grid points and
//! shot ranges. With the `parallel` feature (default) they run on rayon;
//! without it they fall back to equivalent sequential loops. Results are
//! deterministic either way.

pub mod chain;
pub mod constants;
pub mod dpa;
pub mod error;
pub mod imd;
pub mod mc;
pub mod snail;
pub mod solver;
pub mod units;

pub use error::ModelError;
