//! Run configuration: a TOML document with top-level `seed`, `output` and
//! optional `scene`, plus the sections `[medium]`, `[array]`, `[focus]`,
//! `[frequencies]`, `[estimation]` and `[imaging]`. See `configs/` for
//! annotated examples.

use std::path::{Path, PathBuf};

use aeromap_core::imaging::{band_bins, third_octave_band, BandMode, BandSpec, ImagingMethod, DEFAULT_TAU};
use aeromap_core::scene::{make_array, ArrayGeometry, ArraySpec, FocusGrid, SourceScene};
use aeromap_core::MediumParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; CSMs go to `csm/`, maps to `maps/`.
    pub output: String,
    /// Scene file; the built-in two-disk scene when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
    pub medium: MediumConfig,
    pub array: ArraySpec,
    pub focus: FocusGrid,
    pub frequencies: FrequencyConfig,
    pub estimation: EstimationConfig,
    pub imaging: ImagingConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub speed_of_sound: f64,
    pub mach: f64,
    pub dim: usize,
}

/// Discrete frequencies `n * resolution`: every bin inside the listed
/// third-octave bands plus the explicit `bins`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyConfig {
    pub resolution: f64,
    #[serde(default)]
    pub bands: Vec<f64>,
    #[serde(default)]
    pub bins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum EstimationConfig {
    Exact {
        src_spacing: f64,
    },
    Snapshots {
        count: usize,
        src_spacing: f64,
    },
    Welch {
        fs: f64,
        duration: f64,
        block: usize,
        overlap: f64,
        /// Synthesis block; four Welch blocks when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        synth_block: Option<usize>,
        src_spacing: f64,
        /// Also write the synthesised time series.
        #[serde(default)]
        save_series: bool,
    },
}

impl EstimationConfig {
    pub fn src_spacing(&self) -> f64 {
        match self {
            EstimationConfig::Exact { src_spacing }
            | EstimationConfig::Snapshots { src_spacing, .. }
            | EstimationConfig::Welch { src_spacing, .. } => *src_spacing,
        }
    }
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingConfig {
    pub methods: Vec<ImagingMethod>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_cap: Option<usize>,
    #[serde(default)]
    pub band_mode: BandMode,
    #[serde(default)]
    pub pgm: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_text(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory and must exist (except the output directory).
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Missing(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &str| -> String {
            if Path::new(p).is_absolute() {
                p.to_string()
            } else {
                base.join(p).to_string_lossy().into_owned()
            }
        };
        self.output = join(&self.output);
        if let Some(s) = &self.scene {
            self.scene = Some(join(s));
        }
        if let ArraySpec::FromFile { path } = &self.array {
            self.array = ArraySpec::FromFile { path: join(path) };
        }
    }

    pub fn check_files(&self) -> CliResult<()> {
        let mut files: Vec<&str> = self.scene.iter().map(String::as_str).collect();
        if let ArraySpec::FromFile { path } = &self.array {
            files.push(path);
        }
        for f in files {
            if !Path::new(f).is_file() {
                return Err(CliError::Config(format!("referenced file {f} does not exist")));
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(&self.output)
    }

    pub fn csm_dir(&self) -> PathBuf {
        self.output_dir().join("csm")
    }

    pub fn map_dir(&self) -> PathBuf {
        self.output_dir().join("maps")
    }

    pub fn medium(&self) -> CliResult<MediumParams> {
        Ok(MediumParams::new(self.medium.speed_of_sound, self.medium.mach, self.medium.dim)?)
    }

    pub fn scene(&self) -> CliResult<SourceScene> {
        match &self.scene {
            Some(path) => Ok(SourceScene::from_file(Path::new(path))?),
            None => {
                if self.medium.dim != 3 {
                    return Err(CliError::Config("the built-in scene is three-dimensional; give a scene file".into()));
                }
                Ok(SourceScene::default_two_disk())
            }
        }
    }

    pub fn array(&self) -> CliResult<ArrayGeometry> {
        Ok(make_array(&self.array, self.medium.dim)?)
    }

    pub fn bands(&self) -> CliResult<Vec<BandSpec>> {
        Ok(self.frequencies.bands.iter().map(|&fc| third_octave_band(fc)).collect::<Result<_, _>>()?)
    }

    /// Sorted, de-duplicated bin indices required by the bands and the
    /// explicit bin list. Welch runs without any request keep every bin
    /// `1..=block/2`.
    pub fn bins(&self) -> CliResult<Vec<usize>> {
        let df = self.frequencies.resolution;
        if let EstimationConfig::Welch { block, .. } = self.estimation {
            let welch = matches!(self.estimation, EstimationConfig::Welch { .. });
        if !welch && self.frequencies.bands.is_empty() && self.frequencies.bins.is_empty() {
                return Ok((1..=block / 2).collect());
            }
        }
        let mut bins = self.frequencies.bins.clone();
        for b in self.bands()? {
            bins.extend(band_bins(&b, df));
        }
        bins.sort_unstable();
        bins.dedup();
        Ok(bins)
    }

    /// Every problem with the configuration, as human-readable lines.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let medium = self.medium();
        if let Err(e) = &medium {
            v.push(e.to_string());
        }
        let df = self.frequencies.resolution;
        if !(df > 0.0 && df.is_finite()) {
            v.push(format!("frequency resolution {df} must be positive"));
            return v;
        }
        let welch = matches!(self.estimation, EstimationConfig::Welch { .. });
        if !welch && self.frequencies.bands.is_empty() && self.frequencies.bins.is_empty() {
            v.push("no frequencies requested: give bands or bins".into());
        }
        if self.frequencies.bins.contains(&0) {
            v.push("bin 0 (DC) cannot be imaged".into());
        }
        match self.bands() {
            Err(e) => v.push(e.to_string()),
            Ok(bands) => {
                for b in bands {
                    if band_bins(&b, df).is_empty() {
                        v.push(format!("band {} Hz contains no bins at resolution {df} Hz", b.center));
                    }
                }
            }
        }
        let spacing = self.estimation.src_spacing();
        if !(spacing > 0.0 && spacing.is_finite()) {
            v.push(format!("source spacing {spacing} must be positive"));
        }
        match &self.estimation {
            EstimationConfig::Exact { .. } => {}
            EstimationConfig::Snapshots { count, .. } => {
                if *count == 0 {
                    v.push("snapshot count must be >= 1".into());
                }
            }
            EstimationConfig::Welch { fs, duration, block, overlap, synth_block, .. } => {
                if !(*fs > 0.0) || !(*duration > 0.0) || *block < 2 {
                    v.push("Welch estimation needs fs > 0, duration > 0 and block >= 2".into());
                } else {
                    if ((fs / *block as f64) - df).abs() > 1e-12 * df {
                        v.push(format!("resolution {df} Hz differs from fs/block = {} Hz", fs / *block as f64));
                    }
                    if let Ok(bins) = self.bins() {
                        if bins.last().is_some_and(|&n| n > block / 2) {
                            v.push("requested bins exceed the Nyquist frequency".into());
                        }
                    }
                    if (duration * fs) < *block as f64 {
                        v.push("duration is shorter than one Welch block".into());
                    }
                }
                if !(0.0..1.0).contains(overlap) {
                    v.push(format!("overlap {overlap} not in [0, 1)"));
                }
                if synth_block.is_some_and(|b| b < 4 || b % 2 != 0) {
                    v.push("synthesis block must be even and >= 4".into());
                }
            }
        }
        if self.imaging.methods.is_empty() {
            v.push("no imaging methods requested".into());
        }
        if !(self.imaging.tau >= 0.0) {
            v.push(format!("positivity threshold {} must be >= 0", self.imaging.tau));
        }
        if let Err(e) = self.focus.validate(self.medium.dim) {
            v.push(e.to_string());
        }
        match (self.scene(), self.array()) {
            (Ok(scene), Ok(array)) => {
                v.extend(aeromap_core::scene::validate_geometry(&array, &scene).violations);
                if array.len() < 2 && self.imaging.methods.contains(&ImagingMethod::CbfDr) {
                    v.push("diagonal removal needs at least two microphones".into());
                }
            }
            (s, a) => {
                v.extend(s.err().map(|e| e.to_string()));
                v.extend(a.err().map(|e| e.to_string()));
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = include_str!("../configs/default.toml");

    #[test]
    fn sample_configs_round_trip() {
        for text in [SAMPLE, include_str!("../configs/welch.toml"), include_str!("../configs/exact.toml")] {
            let cfg = RunConfig::parse(text).unwrap();
            let again = RunConfig::parse(&cfg.to_text().unwrap()).unwrap();
            assert_eq!(again, cfg);
            assert!(cfg.violations().is_empty(), "{:?}", cfg.violations());
        }
    }

    #[test]
    fn band_bins_are_merged() {
        let mut cfg = RunConfig::parse(SAMPLE).unwrap();
        cfg.frequencies.bands = vec![8000.0, 12000.0];
        cfg.frequencies.bins = vec![61, 3];
        let bins = cfg.bins().unwrap();
        assert_eq!(bins.len(), 16 + 23 + 1);
        assert_eq!(bins[0], 3);
    }

    #[test]
    fn violations_are_reported() {
        let mut cfg = RunConfig::parse(SAMPLE).unwrap();
        cfg.medium.mach = 1.2;
        assert!(cfg.violations().iter().any(|v| v.contains("supersonic")));
        let mut cfg = RunConfig::parse(SAMPLE).unwrap();
        cfg.imaging.methods.clear();
        cfg.frequencies.bands = vec![10.0];
        assert_eq!(cfg.violations().len(), 2);
    }

    #[test]
    fn unknown_keys_and_missing_files_are_errors() {
        assert!(RunConfig::parse(&format!("{SAMPLE}\n[extra]\nx = 1\n")).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, format!("scene = \"missing.toml\"\n{SAMPLE}")).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Config(_))));
        std::fs::write(&path, SAMPLE).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert!(Path::new(&cfg.output).starts_with(dir.path()));
    }
}
