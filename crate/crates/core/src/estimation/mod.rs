//! Forward data synthesis and cross-spectral estimation.

mod csm;
mod snapshots;
mod timeseries;
mod welch;

pub use csm::{discretize, exact_csm, CrossSpectralMatrix, Provenance, SourceCells};
pub use snapshots::{sample_csm, synthesize_snapshots, SnapshotSet};
pub use timeseries::{synthesize_timeseries, TimeSeries, TimeSeriesSpec};
pub use welch::{diagonal_power, welch_csm, welch_csm_bins, Window, WelchParams};
