//! Correlation-based source-power imaging for aeroacoustic measurements in
//! a uniform subsonic flow.
//!
//! The crate covers the whole chain from the convected Helmholtz model to
//! source maps:
//!
//! * [`medium`]: flow parameters, the Mach norm and the Lorentz transform.
//! * [`specialfn`]: `J0`, `Y0` and `H0^(1)` for real arguments.
//! * [`greens`]: the convected fundamental solution, steering vectors,
//!   volume potentials and finite-difference PDE residuals.
//! * [`scene`]: source-power functions, microphone arrays, focus grids and
//!   support masks.
//! * [`estimation`]: exact, snapshot and Welch cross-spectral matrices, plus
//!   synthetic time series.
//! * [`imaging`]: eigensystems, the factorization/Capon functional, the
//!   conventional beamformers, Picard diagnostics, band handling and maps.

// Negated comparisons are used deliberately so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod field;
pub mod greens;
pub mod imaging;
pub mod medium;
pub mod rng;
pub mod scene;
pub mod specialfn;

pub use error::{Error, Result};
pub use medium::{Frequency, MediumParams, Point};
pub use nalgebra;

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
