use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use aeromap_core::estimation::{
    exact_csm, sample_csm, synthesize_snapshots, synthesize_timeseries, welch_csm_bins, CrossSpectralMatrix,
    TimeSeriesSpec, WelchParams, Window,
};
use aeromap_core::imaging::{
    band_average, band_bins, compute_map, contrast_metric, normalize_map, BandSpec, Contrast, EigenOptions,
    ImagingMethod, SourceMap,
};
use aeromap_core::rng::derive_seed;
use aeromap_core::scene::{support_mask, SupportKind};
use aeromap_core::Frequency;
use rayon::prelude::*;

use crate::config::{EstimationConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{csm_header_frequency, map_to_pgm, read_csm, timeseries_to_bytes, write_atomic, write_csm, write_map};

fn ensure_valid(cfg: &RunConfig) -> CliResult<()> {
    let v = cfg.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(v.join("; ")))
    }
}

pub fn csm_path(cfg: &RunConfig, bin: usize) -> PathBuf {
    cfg.csm_dir().join(format!("csm_{bin:05}.txt"))
}

/// Geometry, medium and configuration problems; empty when the run is
/// well posed.
pub fn cmd_validate(cfg: &RunConfig) -> Vec<String> {
    cfg.violations()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub provenance: String,
    pub files: Vec<PathBuf>,
}

/// Writes one CSM file per requested bin (and the time series when asked).
pub fn cmd_synth(cfg: &RunConfig) -> CliResult<SynthSummary> {
    ensure_valid(cfg)?;
    let medium = cfg.medium()?;
    let scene = cfg.scene()?;
    let array = cfg.array()?;
    let bins = cfg.bins()?;
    let df = cfg.frequencies.resolution;
    let freq = |n: usize| Frequency::new(n as f64 * df, &medium);
    let mut files = Vec::new();

    let csms: Vec<CrossSpectralMatrix> = match &cfg.estimation {
        EstimationConfig::Exact { src_spacing } => {
            bins.par_iter().map(|&n| exact_csm(&scene, &array, &freq(n)?, &medium, *src_spacing)).collect::<Result<_, _>>()?
        }
        EstimationConfig::Snapshots { count, src_spacing } => bins
            .par_iter()
            .map(|&n| {
                let seed = derive_seed(cfg.seed, "snapshots", n as u64);
                sample_csm(&synthesize_snapshots(&scene, &array, &freq(n)?, &medium, *src_spacing, *count, seed)?)
            })
            .collect::<Result<_, _>>()?,
        EstimationConfig::Welch { fs, duration, block, overlap, synth_block, src_spacing, save_series } => {
            let (lo, hi) = (bins[0], *bins.last().unwrap());
            // Keep a few analysis bins beyond the request so that window
            // leakage at the edges sees the true spectrum.
            let margin = 4.0 * df;
            let band = [((lo as f64) * df - margin).max(0.0), (hi as f64) * df + margin];
            let spec = TimeSeriesSpec {
                fs: *fs,
                duration: *duration,
                block: synth_block.unwrap_or(4 * block),
                src_spacing: *src_spacing,
                band: Some(band),
                seed: derive_seed(cfg.seed, "timeseries", 0),
            };
            let series = synthesize_timeseries(&scene, &array, &medium, &spec)?;
            if *save_series {
                let path = cfg.output_dir().join("timeseries.bin");
                write_atomic(&path, &timeseries_to_bytes(&series))?;
                files.push(path);
            }
            let params = WelchParams { block: *block, overlap: *overlap, window: Window::Hann };
            let all = welch_csm_bins(&series, &params, &medium, lo..=hi)?;
            all.into_iter().enumerate().filter(|(i, _)| bins.binary_search(&(lo + i)).is_ok()).map(|(_, c)| c).collect()
        }
    };
    let provenance = csms.first().map(|c| c.provenance.to_string()).unwrap_or_default();
    for (n, csm) in bins.iter().zip(&csms) {
        let path = csm_path(cfg, *n);
        write_csm(&path, csm)?;
        files.push(path);
    }
    log::info!("wrote {} CSM files ({provenance})", csms.len());
    Ok(SynthSummary { provenance, files })
}

/// Bin index of every CSM file in the output directory, keyed by bin.
pub fn index_csm_files(cfg: &RunConfig) -> CliResult<BTreeMap<usize, PathBuf>> {
    let df = cfg.frequencies.resolution;
    let mut index = BTreeMap::new();
    let dir = cfg.csm_dir();
    if !dir.is_dir() {
        return Ok(index);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(&dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries {
        if path.extension().is_none_or(|e| e != "txt") {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let Ok(hz) = csm_header_frequency(text.lines().next().unwrap_or("")) else {
            log::warn!("skipping {}: not a CSM file", path.display());
            continue;
        };
        let n = (hz / df).round();
        if n >= 1.0 && (hz - n * df).abs() <= 1e-9 * hz {
            index.insert(n as usize, path);
        } else {
            log::warn!("skipping {}: {hz} Hz is not a multiple of {df} Hz", path.display());
        }
    }
    Ok(index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapReport {
    pub path: PathBuf,
    pub method: ImagingMethod,
    pub label: String,
    pub contrast: Option<Contrast>,
}

fn write_outputs(cfg: &RunConfig, name: &str, map: &SourceMap, masks: &Option<(Vec<bool>, Vec<bool>)>) -> CliResult<MapReport> {
    let path = cfg.map_dir().join(format!("{name}.map"));
    write_map(&path, map)?;
    if cfg.imaging.pgm {
        write_atomic(&path.with_extension("pgm"), &map_to_pgm(map))?;
    }
    let contrast = masks.as_ref().and_then(|(inner, outer)| contrast_metric(map, inner, outer).ok());
    Ok(MapReport { path, method: map.method, label: map.label.to_string(), contrast })
}

fn load_bins(cfg: &RunConfig, bins: &[usize], index: &BTreeMap<usize, PathBuf>, what: &str) -> CliResult<Vec<CrossSpectralMatrix>> {
    let missing: Vec<usize> = bins.iter().copied().filter(|n| !index.contains_key(n)).collect();
    if !missing.is_empty() {
        return Err(CliError::Missing(format!(
            "{what} needs {} CSM files at {} Hz resolution; missing bins {missing:?} in {}",
            bins.len(),
            cfg.frequencies.resolution,
            cfg.csm_dir().display()
        )));
    }
    let medium = cfg.medium()?;
    bins.iter().map(|n| read_csm(&index[n], &medium)).collect()
}

/// Band-averaged, normalised maps for every requested method and band,
/// plus single-bin maps for explicitly listed bins.
pub fn cmd_image(cfg: &RunConfig) -> CliResult<Vec<MapReport>> {
    ensure_valid(cfg)?;
    let medium = cfg.medium()?;
    let array = cfg.array()?;
    let scene = cfg.scene()?;
    let grid = &cfg.focus;
    let opts = EigenOptions { tau: cfg.imaging.tau, rank_cap: cfg.imaging.rank_cap };
    let inner = support_mask(&scene, grid, SupportKind::Inner);
    let outer = support_mask(&scene, grid, SupportKind::Outer);
    let masks = inner.iter().any(|&b| b).then_some((inner, outer));
    let index = index_csm_files(cfg)?;
    let df = cfg.frequencies.resolution;
    let mut reports = Vec::new();

    let image = |csms: &[CrossSpectralMatrix], method: ImagingMethod| -> CliResult<Vec<SourceMap>> {
        csms.iter().map(|c| Ok(compute_map(method, c, &array, grid, &medium, &opts)?)).collect()
    };
    for band in cfg.bands()? {
        let bins = band_bins(&band, df);
        let csms = load_bins(cfg, &bins, &index, &format!("band {} Hz", band.center))?;
        for &method in &cfg.imaging.methods {
            let maps = image(&csms, method)?;
            let map = normalize_map(&band_average(&maps, &band, cfg.imaging.band_mode)?);
            reports.push(write_outputs(cfg, &band_name(method, &band), &map, &masks)?);
        }
    }
    for &n in &cfg.frequencies.bins {
        let csms = load_bins(cfg, &[n], &index, &format!("bin {n}"))?;
        for &method in &cfg.imaging.methods {
            let map = normalize_map(&image(&csms, method)?[0]);
            reports.push(write_outputs(cfg, &format!("{method}_bin{n:05}"), &map, &masks)?);
        }
    }
    Ok(reports)
}

fn band_name(method: ImagingMethod, band: &BandSpec) -> String {
    format!("{method}_band{}", band.center)
}

/// Path of the band map written by [`cmd_image`].
pub fn band_map_path(cfg: &RunConfig, method: ImagingMethod, band: &BandSpec) -> PathBuf {
    cfg.map_dir().join(format!("{}.map", band_name(method, band)))
}
