use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::csm::{CrossSpectralMatrix, Provenance};
use super::timeseries::TimeSeries;
use crate::{Error, Frequency, MediumParams, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n).map(|i| (PI * i as f64 / n as f64).sin().powi(2)).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Window::Hann => "hann",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchParams {
    pub block: usize,
    pub overlap: f64,
    pub window: Window,
}

impl Default for WelchParams {
    fn default() -> Self {
        Self { block: 1024, overlap: 0.5, window: Window::Hann }
    }
}

impl WelchParams {
    pub fn hop(&self) -> usize {
        (self.block - (self.overlap * self.block as f64).round() as usize).max(1)
    }

    fn check(&self) -> Result<()> {
        if self.block < 2 {
            return Err(Error::Invalid("Welch block must hold at least two samples".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Invalid(format!("overlap {} not in [0, 1)", self.overlap)));
        }
        if !self.block.is_power_of_two() {
            log::warn!("Welch block {} is not a power of two", self.block);
        }
        Ok(())
    }
}

/// Welch cross-spectral matrices for bins `1..=block/2` at `f = n fs / block`.
pub fn welch_csm(series: &TimeSeries, params: &WelchParams, medium: &MediumParams) -> Result<Vec<CrossSpectralMatrix>> {
    welch_csm_bins(series, params, medium, 1..=params.block / 2)
}

/// Welch estimate restricted to a range of positive-frequency bins.
///
/// Scaling is the one-sided spectral density: `2 / (fs sum w^2)` times the
/// block average of `Y Y*` (factor 1 instead of 2 at the Nyquist bin), so a
/// white input with one-sided density 1 yields a unit diagonal and the
/// diagonal summed over bins times `Δf` approximates channel variance.
pub fn welch_csm_bins(
    series: &TimeSeries,
    params: &WelchParams,
    medium: &MediumParams,
    bins: std::ops::RangeInclusive<usize>,
) -> Result<Vec<CrossSpectralMatrix>> {
    params.check()?;
    let n = params.block;
    if *bins.start() == 0 || *bins.end() > n / 2 {
        return Err(Error::Invalid(format!("Welch bins {bins:?} outside 1..={}", n / 2)));
    }
    let len = series.len();
    if len < n {
        return Err(Error::Invalid(format!("series of {len} samples is shorter than one block of {n}")));
    }
    let m = series.channels();
    let hop = params.hop();
    let segments = (len - n) / hop + 1;
    let window = params.window.coefficients(n);
    let power: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let (first, last) = (*bins.start(), *bins.end());
    let nbins = last - first + 1;
    let mut acc = vec![DMatrix::<C64>::zeros(m, m); nbins];
    let mut spectra = vec![vec![C64::new(0.0, 0.0); n]; m];
    let mut column = DVector::<C64>::zeros(m);
    for s in 0..segments {
        let start = s * hop;
        for (ch, buf) in spectra.iter_mut().enumerate() {
            let x = &series.data[ch][start..start + n];
            for (b, (xi, wi)) in buf.iter_mut().zip(x.iter().zip(&window)) {
                *b = C64::new(xi * wi, 0.0);
            }
            fft.process(buf);
        }
        for (slot, bin) in acc.iter_mut().zip(first..=last) {
            for ch in 0..m {
                column[ch] = spectra[ch][bin];
            }
            slot.gerc(C64::new(1.0, 0.0), &column, &column, C64::new(1.0, 0.0));
        }
    }
    let fs = series.fs;
    let provenance = Provenance::Welch { fs, block: n, overlap: params.overlap, window: params.window.name().into() };
    acc.into_iter()
        .zip(first..=last)
        .map(|(sum, bin)| {
            let one_sided = if 2 * bin == n { 1.0 } else { 2.0 };
            let scale = one_sided / (fs * power * segments as f64);
            let freq = Frequency::new(bin as f64 * fs / n as f64, medium)?;
            CrossSpectralMatrix::new(freq, sum * C64::new(scale, 0.0), provenance.clone())
        })
        .collect()
}

/// Per-channel `sum_bins diag(C) Δf`; approximates channel variance when
/// the bins cover the whole positive band.
pub fn diagonal_power(csms: &[CrossSpectralMatrix], df: f64) -> Vec<f64> {
    let m = csms.first().map_or(0, |c| c.size());
    (0..m).map(|i| csms.iter().map(|c| c.entries[(i, i)].re).sum::<f64>() * df).collect()
}
