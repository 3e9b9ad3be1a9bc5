//! Eigen-analysis of cross-spectral matrices, the imaging functionals and
//! map assembly.

mod band;
mod diagnostics;
mod eigen;
mod functionals;
mod map;

pub use band::{band_average, band_bin_count, band_bins, third_octave_band, BandMode, BandSpec};
pub use diagnostics::{inf_criterion, picard_partial_sums, InfCriterion, KERNEL_TOL};
pub use eigen::{eig_hermitian, EigenOptions, EigenSystem, DEFAULT_TAU};
pub use functionals::{
    capon_steering, capon_value, cbf_dr_value, cbf_value, cbf_value_eigen, fac_value, least_squares_form,
    pinv_quadratic, ImagingMethod, LsVariant, DEN_EPS,
};
pub use map::{compute_map, contrast_metric, normalize_map, Contrast, MapLabel, SourceMap};
