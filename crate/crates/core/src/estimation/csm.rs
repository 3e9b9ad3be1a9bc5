use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::greens::greens_unchecked;
use crate::scene::{validate_geometry, ArrayGeometry, SourceScene};
use crate::{Error, Frequency, MediumParams, Point, Result, C64};

/// Where a cross-spectral matrix came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Exact,
    Snapshot { count: usize, seed: u64 },
    Welch { fs: f64, block: usize, overlap: f64, window: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Exact => write!(f, "exact"),
            Provenance::Snapshot { count, seed } => write!(f, "snapshot:S={count}:seed={seed}"),
            Provenance::Welch { fs, block, overlap, window } => {
                write!(f, "welch:fs={fs}:block={block}:overlap={overlap}:window={window}")
            }
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("unrecognised provenance tag '{s}'"));
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let mut fields = std::collections::HashMap::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(bad)?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(bad);
        match kind {
            "exact" if fields.is_empty() => Ok(Provenance::Exact),
            "snapshot" => Ok(Provenance::Snapshot {
                count: get("S")?.parse().map_err(|_| bad())?,
                seed: get("seed")?.parse().map_err(|_| bad())?,
            }),
            "welch" => Ok(Provenance::Welch {
                fs: get("fs")?.parse().map_err(|_| bad())?,
                block: get("block")?.parse().map_err(|_| bad())?,
                overlap: get("overlap")?.parse().map_err(|_| bad())?,
                window: get("window")?.to_string(),
            }),
            _ => Err(bad()),
        }
    }
}

/// Hermitian positive-semidefinite `M x M` matrix of microphone
/// correlations at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectralMatrix {
    pub freq: Frequency,
    pub entries: DMatrix<C64>,
    pub provenance: Provenance,
}

impl CrossSpectralMatrix {
    /// Wraps `entries`, symmetrising away round-off so that the result is
    /// exactly Hermitian with a real diagonal.
    pub fn new(freq: Frequency, mut entries: DMatrix<C64>, provenance: Provenance) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension(format!("CSM is {}x{}", entries.nrows(), entries.ncols())));
        }
        hermitize(&mut entries);
        Ok(Self { freq, entries, provenance })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Checks the Hermitian, PSD and real-diagonal invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let c = &self.entries;
        if c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("cross-spectral matrix".into()));
        }
        let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let asym = (c - c.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if asym > 1e-12 * scale {
            return Err(Error::Invalid(format!("CSM is not Hermitian: {asym:e}")));
        }
        for i in 0..c.nrows() {
            if c[(i, i)].re < 0.0 || c[(i, i)].im != 0.0 {
                return Err(Error::Invalid(format!("CSM diagonal entry {i} is not real and >= 0")));
            }
        }
        if c.nrows() > 0 {
            let eig = SymmetricEigen::new(c.clone()).eigenvalues;
            let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
            if lo < -1e-10 * hi.max(0.0) {
                return Err(Error::Invalid(format!("CSM is not PSD: eigenvalue {lo:e} vs {hi:e}")));
            }
        }
        Ok(())
    }

    /// `||self - other||_F / ||other||_F`.
    pub fn relative_error(&self, reference: &CrossSpectralMatrix) -> f64 {
        (&self.entries - &reference.entries).norm() / reference.entries.norm()
    }
}

pub(crate) fn hermitize(c: &mut DMatrix<C64>) {
    let n = c.nrows();
    for i in 0..n {
        c[(i, i)] = C64::new(c[(i, i)].re, 0.0);
        for j in 0..i {
            let v = (c[(i, j)] + c[(j, i)].conj()) * 0.5;
            c[(i, j)] = v;
            c[(j, i)] = v.conj();
        }
    }
}

/// `L = V diag(sqrt(λ))` with `L L* = C` for Hermitian PSD `C`.
/// Eigenvalues at round-off level (`<= M eps λ_max`) are dropped.
pub(crate) fn psd_root(c: &DMatrix<C64>) -> DMatrix<C64> {
    let mut c = c.clone();
    hermitize(&mut c);
    let eig = SymmetricEigen::new(c);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = eig.eigenvalues.len() as f64 * f64::EPSILON * top;
    let mut root = eig.eigenvectors;
    for (j, mut col) in root.column_iter_mut().enumerate() {
        let l = eig.eigenvalues[j];
        col *= C64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0);
    }
    root
}

/// Midpoint-rule discretisation of a scene: lattice nodes `h n` with
/// `q > 0` and weights `q(z) h^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceCells {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub cell_volume: f64,
}

impl SourceCells {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `M x N` matrix with columns `sqrt(w_c) g(., z_c)`; `C = A A*`.
    pub(crate) fn weighted_greens(&self, array: &ArrayGeometry, freq: &Frequency, medium: &MediumParams) -> DMatrix<C64> {
        let mics = array.positions();
        DMatrix::from_fn(mics.len(), self.points.len(), |i, c| {
            greens_unchecked(&mics[i], &self.points[c], freq.k, medium) * self.weights[c].sqrt()
        })
    }
}

pub fn discretize(scene: &SourceScene, spacing: f64) -> Result<SourceCells> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Invalid(format!("source grid spacing {spacing} must be positive")));
    }
    let dim = scene.dim;
    let cell_volume = spacing.powi(dim as i32);
    let Some((lo, hi)) = scene.region() else {
        return Ok(SourceCells { points: vec![], weights: vec![], cell_volume });
    };
    if let Some(feature) = scene.min_feature() {
        if feature < 4.0 * spacing {
            log::warn!("source grid spacing {spacing} m under-resolves a {feature} m feature (< 4 cells)");
        }
    }
    let range = |a: usize| -> (i64, i64) {
        if a < dim {
            ((lo[a] / spacing).ceil() as i64, (hi[a] / spacing).floor() as i64)
        } else {
            (0, 0)
        }
    };
    let (r0, r1, r2) = (range(0), range(1), range(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for n2 in r2.0..=r2.1 {
        for n1 in r1.0..=r1.1 {
            for n0 in r0.0..=r0.1 {
                let z = Point::new(n0 as f64 * spacing, n1 as f64 * spacing, n2 as f64 * spacing);
                let q = scene.q_eval(&z);
                if q > 0.0 {
                    points.push(z);
                    weights.push(q * cell_volume);
                }
            }
        }
    }
    Ok(SourceCells { points, weights, cell_volume })
}

pub(crate) fn check_geometry(scene: &SourceScene, array: &ArrayGeometry, medium: &MediumParams) -> Result<()> {
    let report = validate_geometry(array, scene);
    if !report.is_ok() {
        return Err(Error::Geometry(report.violations.join("; ")));
    }
    if medium.dim() != scene.dim {
        return Err(Error::Dimension(format!("medium is {}-D, scene is {}-D", medium.dim(), scene.dim)));
    }
    Ok(())
}

/// `C_ij = sum_c q(z_c) g(x_i, z_c) conj(g(x_j, z_c)) Δv` over the source
/// cells of `scene` at spacing `src_spacing`.
pub fn exact_csm(
    scene: &SourceScene,
    array: &ArrayGeometry,
    freq: &Frequency,
    medium: &MediumParams,
    src_spacing: f64,
) -> Result<CrossSpectralMatrix> {
    check_geometry(scene, array, medium)?;
    let cells = discretize(scene, src_spacing)?;
    let a = cells.weighted_greens(array, freq, medium);
    CrossSpectralMatrix::new(*freq, &a * a.adjoint(), Provenance::Exact)
}
