use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::csm::{check_geometry, discretize, psd_root};
use crate::rng::{complex_normal, substream};
use crate::scene::{ArrayGeometry, SourceScene};
use crate::{Error, Frequency, MediumParams, Result, C64};

/// Multichannel real time series, one `Vec` per microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub fs: f64,
    pub data: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(fs: f64, data: Vec<Vec<f64>>) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Invalid(format!("sampling rate {fs} must be positive")));
        }
        if let Some(first) = data.first() {
            if data.iter().any(|c| c.len() != first.len()) {
                return Err(Error::Dimension("channels differ in length".into()));
            }
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time series".into()));
        }
        Ok(Self { fs, data })
    }

    pub fn channels(&self) -> usize {
        self.data.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.fs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSpec {
    pub fs: f64,
    pub duration: f64,
    /// Synthesis block length; a multiple of the analysis block keeps the
    /// spectral smearing of the synthesis window below one analysis bin.
    pub block: usize,
    /// Source discretisation spacing in metres.
    pub src_spacing: f64,
    /// Frequency range kept in the synthesis; everything outside is zero.
    pub band: Option<[f64; 2]>,
    pub seed: u64,
}

impl TimeSeriesSpec {
    pub fn samples(&self) -> usize {
        (self.duration * self.fs).round() as usize
    }

    fn check(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) || !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Invalid("time series needs positive fs and duration".into()));
        }
        if self.block < 4 || !self.block.is_multiple_of(2) {
            return Err(Error::Invalid(format!("synthesis block {} must be even and >= 4", self.block)));
        }
        if let Some([lo, hi]) = self.band {
            if !(lo >= 0.0 && hi > lo) {
                return Err(Error::Invalid(format!("band [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }
}

/// Stationary Gaussian pressure signals whose one-sided spectral density at
/// every synthesis bin equals the exact cross-spectral matrix of `scene`.
///
/// Each block draws `X_k = sqrt(2 N fs) L_k ξ_k` with `L_k L_k* = C(f_k)`,
/// takes the real part of the inverse FFT, applies the root-Hann window
/// and overlap-adds at half a block. Block `b` uses substream `b` of the
/// seed, so the output is independent of the thread count.
pub fn synthesize_timeseries(
    scene: &SourceScene,
    array: &ArrayGeometry,
    medium: &MediumParams,
    spec: &TimeSeriesSpec,
) -> Result<TimeSeries> {
    spec.check()?;
    check_geometry(scene, array, medium)?;
    let cells = discretize(scene, spec.src_spacing)?;
    let (n, m, fs) = (spec.block, array.len(), spec.fs);
    let kept: Vec<usize> = (1..n / 2)
        .filter(|&k| {
            let f = k as f64 * fs / n as f64;
            spec.band.is_none_or(|[lo, hi]| f >= lo && f <= hi)
        })
        .collect();
    log::info!("synthesising {} bins x {} channels over {} s", kept.len(), m, spec.duration);

    let gain = (2.0 * n as f64 * fs).sqrt();
    let roots: Vec<DMatrix<C64>> = kept
        .par_iter()
        .map(|&k| -> Result<DMatrix<C64>> {
            let freq = Frequency::new(k as f64 * fs / n as f64, medium)?;
            let a = cells.weighted_greens(array, &freq, medium);
            Ok(psd_root(&(&a * a.adjoint())) * C64::new(gain, 0.0))
        })
        .collect::<Result<_>>()?;

    let total = spec.samples();
    let hop = n / 2;
    let blocks = total.div_ceil(hop) + 1;
    let window: Vec<f64> = (0..n).map(|i| (PI * i as f64 / n as f64).sin()).collect();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut data = vec![vec![0.0; total]; m];

    let chunk = 32;
    for first in (0..blocks).step_by(chunk) {
        let last = (first + chunk).min(blocks);
        let outputs: Vec<Vec<Vec<f64>>> = (first..last)
            .into_par_iter()
            .map(|b| {
                let mut rng = substream(spec.seed, b as u64);
                let mut spectra = vec![vec![C64::new(0.0, 0.0); n]; m];
                let mut xi = DVector::<C64>::zeros(m);
                for (&k, root) in kept.iter().zip(&roots) {
                    for v in xi.iter_mut() {
                        *v = complex_normal(&mut rng);
                    }
                    let x = root * &xi;
                    for ch in 0..m {
                        spectra[ch][k] = x[ch];
                    }
                }
                spectra
                    .into_iter()
                    .map(|mut buf| {
                        ifft.process(&mut buf);
                        buf.iter().zip(&window).map(|(v, w)| v.re / n as f64 * w).collect()
                    })
                    .collect()
            })
            .collect();
        for (b, block) in (first..last).zip(outputs) {
            let start = b as i64 * hop as i64 - hop as i64;
            for (ch, samples) in block.into_iter().enumerate() {
                for (i, v) in samples.into_iter().enumerate() {
                    let t = start + i as i64;
                    if t >= 0 && (t as usize) < total {
                        data[ch][t as usize] += v;
                    }
                }
            }
        }
    }
    TimeSeries::new(fs, data)
}
