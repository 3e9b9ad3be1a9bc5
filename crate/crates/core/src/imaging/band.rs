use serde::{Deserialize, Serialize};

use super::map::{MapLabel, SourceMap};
use crate::{Error, Result};

/// Third-octave band `[2^(-1/6) f_c, 2^(1/6) f_c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn third_octave_band(center: f64) -> Result<BandSpec> {
    if !(center > 0.0 && center.is_finite()) {
        return Err(Error::Invalid(format!("band centre {center} must be positive")));
    }
    let r = 2f64.powf(1.0 / 6.0);
    Ok(BandSpec { center, lower: center / r, upper: center * r })
}

/// Number of frequencies `n Δf` inside the band.
pub fn band_bin_count(band: &BandSpec, df: f64) -> usize {
    band_bins(band, df).len()
}

/// Indices `n` with `n Δf` in `[f1, f2]`: `ceil(f1/Δf) ..= floor(f2/Δf)`.
pub fn band_bins(band: &BandSpec, df: f64) -> Vec<usize> {
    assert!(df > 0.0, "frequency resolution must be positive");
    let lo = (band.lower / df).ceil().max(0.0) as usize;
    let hi = (band.upper / df).floor() as i64;
    if hi < lo as i64 {
        return vec![];
    }
    (lo..=hi as usize).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandMode {
    #[default]
    Sum,
    Mean,
}

/// Nodewise sum (or mean) of per-frequency maps over a band.
pub fn band_average(maps: &[SourceMap], band: &BandSpec, mode: BandMode) -> Result<SourceMap> {
    let first = maps.first().ok_or_else(|| Error::Invalid("band contains no maps".into()))?;
    let mut values = vec![0.0; first.values.len()];
    let mut sentinels = 0;
    for m in maps {
        if m.grid != first.grid || m.method != first.method {
            return Err(Error::Invalid("band maps differ in grid or method".into()));
        }
        for (acc, v) in values.iter_mut().zip(&m.values) {
            *acc += v;
        }
        sentinels += m.sentinels;
    }
    if mode == BandMode::Mean {
        let n = maps.len() as f64;
        values.iter_mut().for_each(|v| *v /= n);
    }
    Ok(SourceMap { grid: first.grid.clone(), values, method: first.method, label: MapLabel::Band(band.center), sentinels })
}
