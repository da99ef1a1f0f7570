//! Numerical laboratory for fractional Fourier transforms performed by a
//! gradient-echo (GEM) storage / electromagnetically-induced-transparency
//! (EIT) recall atomic memory.
//!
//! The crate is organised bottom-up:
//!
//! * [`signals`] builds test envelopes (Hermite-Gauss modes, Gaussian pairs).
//! * [`phasespace`] holds the analytic FrFT oracle, Wigner maps and metrics.
//! * [`solver`] integrates the three-level Maxwell-Bloch equations.
//! * [`protocols`] turns a requested rotation into a control schedule.
//! * [`experiments`] runs the sweeps and writes result tables.
//! * [`dump`] is the binary field-dump format shared with the CLI.

pub mod dump;
pub mod error;
pub mod experiments;
pub mod phasespace;
pub mod protocols;
pub mod signals;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Rubidium-87 D1 natural linewidth Γ in rad/μs (2π × 5.75 MHz).
pub const RB87_D1_LINEWIDTH: f64 = 2.0 * std::f64::consts::PI * 5.75;
