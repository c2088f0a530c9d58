//! Optical entanglement mediated by a shared mechanical oscillator.
//!
//! Two lasers are coupled to the same membrane mode through two optical
//! cavities. The crate covers the analytic three-mode model ([`model`]), the
//! Gaussian entanglement measures ([`entanglement`]), synthesis of homodyne
//! photocurrent records ([`synth`]), the analysis chain from records to
//! spectra, covariance matrices and inseparability estimates ([`pipeline`]),
//! and least-squares fitting and detector calibration ([`fitting`]).
//!
//! All rates and frequencies are angular (rad/s) inside the library. Config
//! files and CSV outputs use Hz; conversion happens at the boundary in
//! [`config`] and [`io`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod entanglement;
pub mod error;
pub mod fitting;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod plot;
pub mod synth;

pub use error::{Error, Result};

/// 2π, for Hz ↔ rad/s conversions.
pub const TAU: f64 = std::f64::consts::TAU;

/// Converts a frequency in Hz to an angular frequency in rad/s.
pub fn hz(f: f64) -> f64 {
    TAU * f
}

/// Converts an angular frequency in rad/s to Hz.
pub fn to_hz(omega: f64) -> f64 {
    omega / TAU
}
