//! Source-power scenes, microphone arrays, focus grids and support masks.
//!
//! Microphones live in the measurement plane `x_d = 0` and sources in the
//! open half-space `x_d > 0`. Points are 3-vectors; in two dimensions the
//! third coordinate must be zero.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Minimum separation between two microphones.
pub const MIN_MIC_SEPARATION: f64 = 1e-9;

/// Relative threshold `q >= eps * max q` for the inner support.
pub const INNER_SUPPORT_EPS: f64 = 1e-12;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::Domain(format!("spatial dimension {dim} not in {{2, 3}}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<Point>,
    dim: usize,
}

impl ArrayGeometry {
    /// Validates that every microphone sits in the plane `x_d = 0` and that
    /// positions are pairwise distinct. An empty array is representable so
    /// that [`validate_geometry`] can report it.
    pub fn new(positions: Vec<Point>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::Geometry(format!("microphone {i} has a non-finite coordinate")));
            }
            if p[dim - 1] != 0.0 || (dim == 2 && p[2] != 0.0) {
                return Err(Error::Geometry(format!(
                    "microphone {i} at ({}, {}, {}) is off the measurement plane",
                    p[0], p[1], p[2]
                )));
            }
        }
        for i in 0..positions.len() {
            for j in 0..i {
                if (positions[i] - positions[j]).norm() <= MIN_MIC_SEPARATION {
                    return Err(Error::Geometry(format!("microphones {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { positions, dim })
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reorders microphones; `perm[i]` is the old index of the new microphone `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { positions: perm.iter().map(|&i| self.positions[i]).collect(), dim: self.dim }
    }

    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.positions.len() {
            for j in 0..i {
                best = best.min((self.positions[i] - self.positions[j]).norm());
            }
        }
        best
    }

    /// Parses one microphone per line, `x1 x2 [x3]` in metres; `#` starts a
    /// comment line.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut positions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Geometry(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() < 2 || vals.len() > 3 {
                return Err(Error::Geometry(format!(
                    "line {}: expected 2 or 3 coordinates, found {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            let p = Point::new(vals[0], vals[1], vals.get(2).copied().unwrap_or(0.0));
            if p[dim - 1] != 0.0 || p[2] != 0.0 {
                return Err(Error::Geometry(format!(
                    "line {}: microphone is off the measurement plane",
                    lineno + 1
                )));
            }
            positions.push(p);
        }
        Self::new(positions, dim)
    }

    pub fn from_file(path: &Path, dim: usize) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, dim)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# x1 x2 x3 [m]\n");
        for p in &self.positions {
            out.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", p[0], p[1], p[2]));
        }
        out
    }
}

/// How to build a microphone array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArraySpec {
    /// Rectangular lattice centred on the origin. In two dimensions `ny`
    /// must be 1 and the microphones lie on the `x1` axis.
    Grid { nx: usize, ny: usize, pitch: f64 },
    /// Archimedean spiral `r = radius * t`, `angle = 2 pi turns t` sampled
    /// at `t = (i + 1) / count`. Three dimensions only.
    Spiral { count: usize, radius: f64, turns: f64 },
    FromFile { path: String },
}

pub fn make_array(spec: &ArraySpec, dim: usize) -> Result<ArrayGeometry> {
    check_dim(dim)?;
    match spec {
        ArraySpec::Grid { nx, ny, pitch } => {
            if *nx == 0 || *ny == 0 || !(*pitch > 0.0) {
                return Err(Error::Invalid("grid array needs nx, ny >= 1 and pitch > 0".into()));
            }
            if dim == 2 && *ny != 1 {
                return Err(Error::Invalid("a two-dimensional grid array has ny = 1".into()));
            }
            let cx = (*nx - 1) as f64 / 2.0;
            let cy = (*ny - 1) as f64 / 2.0;
            let mut pts = Vec::with_capacity(nx * ny);
            for j in 0..*ny {
                for i in 0..*nx {
                    let x1 = (i as f64 - cx) * pitch;
                    let x2 = if dim == 3 { (j as f64 - cy) * pitch } else { 0.0 };
                    pts.push(Point::new(x1, x2, 0.0));
                }
            }
            ArrayGeometry::new(pts, dim)
        }
        ArraySpec::Spiral { count, radius, turns } => {
            if dim != 3 {
                return Err(Error::Invalid("spiral arrays need a two-dimensional measurement plane".into()));
            }
            if *count == 0 || !(*radius > 0.0) || !(*turns > 0.0) {
                return Err(Error::Invalid("spiral array needs count >= 1, radius > 0, turns > 0".into()));
            }
            let pts = (0..*count)
                .map(|i| {
                    let t = (i + 1) as f64 / *count as f64;
                    let (s, c) = (2.0 * PI * turns * t).sin_cos();
                    Point::new(radius * t * c, radius * t * s, 0.0)
                })
                .collect();
            ArrayGeometry::new(pts, dim)
        }
        ArraySpec::FromFile { path } => ArrayGeometry::from_file(Path::new(path), dim),
    }
}

/// Planar, axis-aligned grid of focus points `origin + i h e_a + j h e_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusGrid {
    pub origin: [f64; 3],
    pub axes: [usize; 2],
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
}

impl FocusGrid {
    pub fn new(origin: Point, axes: [usize; 2], nx: usize, ny: usize, spacing: f64, dim: usize) -> Result<Self> {
        let grid = Self { origin: origin.into(), axes, nx, ny, spacing };
        grid.validate(dim)?;
        Ok(grid)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        check_dim(dim)?;
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Invalid("focus grid needs at least one node".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Invalid("focus grid spacing must be positive".into()));
        }
        if self.axes[0] == self.axes[1] || self.axes.iter().any(|&a| a >= dim) {
            return Err(Error::Invalid(format!("focus grid axes {:?} invalid for d = {dim}", self.axes)));
        }
        if dim == 2 && self.origin[2] != 0.0 {
            return Err(Error::Invalid("two-dimensional focus grid must have x3 = 0".into()));
        }
        let h = dim - 1;
        let corners = [(0, 0), (self.nx - 1, 0), (0, self.ny - 1), (self.nx - 1, self.ny - 1)];
        if corners.iter().any(|&(i, j)| self.node(i, j)[h] <= 0.0) {
            return Err(Error::Geometry("focus grid leaves the half-space x_d > 0".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Node position for signed offsets; used to probe just outside the grid.
    pub fn point_at(&self, i: f64, j: f64) -> Point {
        let mut p = Point::from(self.origin);
        p[self.axes[0]] += i * self.spacing;
        p[self.axes[1]] += j * self.spacing;
        p
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        self.point_at(i as f64, j as f64)
    }

    /// Nodes in row-major order (`i` fastest).
    pub fn nodes(&self) -> Vec<Point> {
        (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| self.node(i, j))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    /// Euclidean ball of the ambient dimension (a disk when `d = 2`).
    Disk { center: [f64; 3], radius: f64 },
    Annulus { center: [f64; 3], inner: f64, outer: f64 },
    Box { min: [f64; 3], max: [f64; 3] },
    /// `exp(-r^2 / (2 sigma^2))`, truncated at `r = 3 sigma`.
    Gaussian { center: [f64; 3], sigma: f64 },
    /// Axis-aligned cube of edge `size`; with `size` equal to the source
    /// grid spacing and a lattice-aligned centre it covers exactly one cell.
    PointCell { center: [f64; 3], size: f64 },
}

const GAUSS_CUTOFF: f64 = 3.0;

impl Shape {
    fn profile(&self, z: &Point) -> f64 {
        match self {
            Shape::Disk { center, radius } => {
                if (z - Point::from(*center)).norm() <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Annulus { center, inner, outer } => {
                let r = (z - Point::from(*center)).norm();
                if r >= *inner && r <= *outer {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Box { min, max } => {
                if (0..3).all(|a| z[a] >= min[a] && z[a] <= max[a]) {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Gaussian { center, sigma } => {
                let r = (z - Point::from(*center)).norm();
                if r <= GAUSS_CUTOFF * sigma {
                    (-0.5 * (r / sigma).powi(2)).exp()
                } else {
                    0.0
                }
            }
            Shape::PointCell { center, size } => {
                let c = Point::from(*center);
                if (0..3).all(|a| (z[a] - c[a]).abs() <= 0.5 * size) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Axis-aligned bounding box of the support.
    pub fn bounds(&self) -> (Point, Point) {
        let ball = |c: &[f64; 3], r: f64| {
            let c = Point::from(*c);
            (c.add_scalar(-r), c.add_scalar(r))
        };
        match self {
            Shape::Disk { center, radius } => ball(center, *radius),
            Shape::Annulus { center, outer, .. } => ball(center, *outer),
            Shape::Box { min, max } => (Point::from(*min), Point::from(*max)),
            Shape::Gaussian { center, sigma } => ball(center, GAUSS_CUTOFF * sigma),
            Shape::PointCell { center, size } => ball(center, 0.5 * size),
        }
    }

    /// Smallest feature size that a source grid has to resolve.
    fn feature(&self, dim: usize) -> Option<f64> {
        match self {
            Shape::Disk { radius, .. } => Some(2.0 * radius),
            Shape::Annulus { inner, outer, .. } => Some(outer - inner),
            Shape::Box { min, max } => (0..dim).map(|a| max[a] - min[a]).reduce(f64::min),
            Shape::Gaussian { sigma, .. } => Some(2.0 * sigma),
            Shape::PointCell { .. } => None,
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        let pts: Vec<&[f64; 3]> = match self {
            Shape::Disk { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Invalid("disk radius must be positive".into()));
                }
                vec![center]
            }
            Shape::Annulus { center, inner, outer } => {
                if !(*inner >= 0.0 && outer > inner) {
                    return Err(Error::Invalid("annulus needs 0 <= inner < outer".into()));
                }
                vec![center]
            }
            Shape::Box { min, max } => {
                if (0..dim).any(|a| !(max[a] > min[a])) {
                    return Err(Error::Invalid("box needs max > min on every axis".into()));
                }
                vec![min, max]
            }
            Shape::Gaussian { center, sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::Invalid("gaussian sigma must be positive".into()));
                }
                vec![center]
            }
            Shape::PointCell { center, size } => {
                if !(*size > 0.0) {
                    return Err(Error::Invalid("point-cell size must be positive".into()));
                }
                vec![center]
            }
        };
        if dim == 2 && pts.iter().any(|p| p[2] != 0.0) {
            return Err(Error::Invalid("two-dimensional primitives need x3 = 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub power: f64,
}

/// Piecewise source-power function `q >= 0`; overlapping primitives add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceScene {
    pub dim: usize,
    #[serde(default, rename = "primitive")]
    pub primitives: Vec<Primitive>,
}

impl SourceScene {
    pub fn new(dim: usize, primitives: Vec<Primitive>) -> Result<Self> {
        let scene = Self { dim, primitives };
        scene.check()?;
        Ok(scene)
    }

    pub fn check(&self) -> Result<()> {
        check_dim(self.dim)?;
        for p in &self.primitives {
            if !(p.power >= 0.0 && p.power.is_finite()) {
                return Err(Error::Invalid(format!("primitive power {} must be finite and >= 0", p.power)));
            }
            p.shape.check(self.dim)?;
        }
        Ok(())
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, primitives: Vec::new() }
    }

    /// Two balls of radius 4 cm with powers 1.0 and 0.5 at 0.75 m standoff.
    pub fn default_two_disk() -> Self {
        Self {
            dim: 3,
            primitives: vec![
                Primitive { shape: Shape::Disk { center: [-0.1, -0.04, 0.75], radius: 0.04 }, power: 1.0 },
                Primitive { shape: Shape::Disk { center: [0.1, 0.05, 0.75], radius: 0.04 }, power: 0.5 },
            ],
        }
    }

    pub fn q_eval(&self, z: &Point) -> f64 {
        self.primitives.iter().map(|p| p.power * p.shape.profile(z)).sum()
    }

    /// Bounding box of all primitives, `None` for an empty scene.
    pub fn region(&self) -> Option<(Point, Point)> {
        self.primitives.iter().map(|p| p.shape.bounds()).reduce(|(lo, hi), (l, h)| (lo.inf(&l), hi.sup(&h)))
    }

    /// Smallest primitive feature, used for the source-grid resolution check.
    pub fn min_feature(&self) -> Option<f64> {
        self.primitives.iter().filter_map(|p| p.shape.feature(self.dim)).reduce(f64::min)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let scene: Self = toml::from_str(text).map_err(|e| Error::Invalid(format!("scene file: {e}")))?;
        scene.check()?;
        Ok(scene)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("scene serialises")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    Inner,
    Outer,
}

const NEIGHBOURS_8: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Discrete inner or outer support of `q` on the focus grid.
///
/// Inner: `q >= eps max q` at the node and at its eight neighbours (a
/// one-cell erosion). Outer: every node not reachable from the grid boundary
/// through 4-connected nodes with `q = 0`, so enclosed holes are filled.
/// Holes narrower than one cell are not resolved.
pub fn support_mask(scene: &SourceScene, grid: &FocusGrid, kind: SupportKind) -> Vec<bool> {
    let q: Vec<f64> = grid.nodes().iter().map(|z| scene.q_eval(z)).collect();
    let (nx, ny) = (grid.nx, grid.ny);
    match kind {
        SupportKind::Inner => {
            let qmax = q.iter().copied().fold(0.0, f64::max);
            if qmax <= 0.0 {
                return vec![false; q.len()];
            }
            let eps = INNER_SUPPORT_EPS * qmax;
            let mut mask = vec![false; q.len()];
            for j in 0..ny {
                for i in 0..nx {
                    if q[grid.index(i, j)] < eps {
                        continue;
                    }
                    mask[grid.index(i, j)] = NEIGHBOURS_8.iter().all(|&(di, dj)| {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        let qn = if a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny {
                            q[grid.index(a as usize, b as usize)]
                        } else {
                            scene.q_eval(&grid.point_at(a as f64, b as f64))
                        };
                        qn >= eps
                    });
                }
            }
            mask
        }
        SupportKind::Outer => {
            let mut reached = vec![false; q.len()];
            let mut queue = VecDeque::new();
            for j in 0..ny {
                for i in 0..nx {
                    let on_edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                    let idx = grid.index(i, j);
                    if on_edge && q[idx] == 0.0 {
                        reached[idx] = true;
                        queue.push_back((i, j));
                    }
                }
            }
            while let Some((i, j)) = queue.pop_front() {
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a < 0 || b < 0 || a as usize >= nx || b as usize >= ny {
                        continue;
                    }
                    let idx = grid.index(a as usize, b as usize);
                    if !reached[idx] && q[idx] == 0.0 {
                        reached[idx] = true;
                        queue.push_back((a as usize, b as usize));
                    }
                }
            }
            reached.into_iter().map(|r| !r).collect()
        }
    }
}

/// Result of [`validate_geometry`]: a list of violations and the standoff
/// between the measurement plane and the closest source.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub violations: Vec<String>,
    pub standoff: Option<f64>,
}

impl GeometryReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_geometry(array: &ArrayGeometry, scene: &SourceScene) -> GeometryReport {
    let mut violations = Vec::new();
    if array.is_empty() {
        violations.push("M = 0: the array has no microphones".to_string());
    }
    if array.dim() != scene.dim {
        violations.push(format!("array is {}-dimensional, scene is {}-dimensional", array.dim(), scene.dim));
    }
    let h = scene.dim.clamp(2, 3) - 1;
    for (i, p) in array.positions().iter().enumerate() {
        if p[h] != 0.0 {
            violations.push(format!("microphone {i} is off the measurement plane"));
        }
    }
    if let Err(e) = scene.check() {
        violations.push(e.to_string());
    }
    let standoff = scene.region().map(|(lo, _)| lo[h]);
    if let Some(s) = standoff {
        if !(s > 0.0) {
            violations.push(format!("scene reaches the array plane: lowest source height {s} m"));
        }
    }
    GeometryReport { violations, standoff }
}
