use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;

use super::eigen::{EigenOptions, EigenSystem};
use super::functionals::{capon_value, cbf_dr_value, cbf_value, fac_value, ImagingMethod};
use crate::estimation::CrossSpectralMatrix;
use crate::greens::greens;
use crate::scene::{ArrayGeometry, FocusGrid};
use crate::{Error, MediumParams, Result, C64};

/// Frequency of a single-bin map or centre of a band-averaged one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapLabel {
    Frequency(f64),
    Band(f64),
}

impl fmt::Display for MapLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapLabel::Frequency(hz) => write!(f, "{hz}"),
            MapLabel::Band(fc) => write!(f, "band:{fc}"),
        }
    }
}

impl FromStr for MapLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("bad frequency label '{s}'"));
        match s.strip_prefix("band:") {
            Some(fc) => Ok(MapLabel::Band(fc.parse().map_err(|_| bad())?)),
            None => Ok(MapLabel::Frequency(s.parse().map_err(|_| bad())?)),
        }
    }
}

/// Scalar image over a focus grid, row-major with `i` fastest.
/// `sentinels` counts nodes where the functional degenerated and 0 was
/// stored instead.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceMap {
    pub grid: FocusGrid,
    pub values: Vec<f64>,
    pub method: ImagingMethod,
    pub label: MapLabel,
    pub sentinels: usize,
}

impl SourceMap {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b])).unwrap_or(0)
    }
}

/// Evaluates `method` at every node of `grid`.
pub fn compute_map(
    method: ImagingMethod,
    csm: &CrossSpectralMatrix,
    array: &ArrayGeometry,
    grid: &FocusGrid,
    medium: &MediumParams,
    opts: &EigenOptions,
) -> Result<SourceMap> {
    if csm.size() != array.len() {
        return Err(Error::Dimension(format!("CSM is {0}x{0} but the array has {1} microphones", csm.size(), array.len())));
    }
    grid.validate(medium.dim())?;
    let eig = match method {
        ImagingMethod::Fac | ImagingMethod::Capon => Some(EigenSystem::from_matrix(&csm.entries, opts)?),
        _ => None,
    };
    let mics = array.positions();
    let results: Vec<Result<(f64, bool)>> = grid
        .nodes()
        .par_iter()
        .map(|z| {
            let g = DVector::from_iterator(
                mics.len(),
                mics.iter().map(|x| greens(x, z, &csm.freq, medium)).collect::<Result<Vec<C64>>>()?,
            );
            let value = match method {
                ImagingMethod::Fac => {
                    let v = fac_value(eig.as_ref().unwrap(), &g);
                    Ok(v)
                }
                ImagingMethod::Capon => capon_value(eig.as_ref().unwrap(), &g),
                ImagingMethod::Cbf => cbf_value(&csm.entries, &g),
                ImagingMethod::CbfDr => cbf_dr_value(&csm.entries, &g),
            };
            match value {
                Ok(v) if v.is_finite() => Ok((v, method == ImagingMethod::Fac && v == 0.0)),
                Ok(_) => Err(Error::NonFinite(format!("{method} value at {z:?}"))),
                Err(Error::Degenerate(_)) => Ok((0.0, true)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut sentinels = 0;
    for r in results {
        let (v, s) = r?;
        values.push(v);
        sentinels += s as usize;
    }
    if sentinels > 0 {
        log::warn!("{method} map at {} Hz: {sentinels} degenerate nodes set to 0", csm.freq.hz);
    }
    Ok(SourceMap { grid: grid.clone(), values, method, label: MapLabel::Frequency(csm.freq.hz), sentinels })
}

/// Min-max rescaling to `[0, 1]`; a constant map becomes all zeros.
pub fn normalize_map(map: &SourceMap) -> SourceMap {
    let lo = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.max();
    let mut out = map.clone();
    if !(hi > lo) {
        log::warn!("{} map is constant; normalised to zero", map.method);
        out.values.iter_mut().for_each(|v| *v = 0.0);
    } else {
        out.values.iter_mut().for_each(|v| *v = (*v - lo) / (hi - lo));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contrast {
    pub inside_mean: f64,
    pub outside_mean: f64,
    /// `inside_mean / outside_mean`; `+inf` when the outside vanishes.
    pub ratio: f64,
    pub jaccard_at_half: f64,
}

/// Compares the map on the inner support with the map away from the outer
/// support (the outer support dilated by one cell is excluded).
pub fn contrast_metric(map: &SourceMap, inner: &[bool], outer: &[bool]) -> Result<Contrast> {
    let n = map.values.len();
    if inner.len() != n || outer.len() != n {
        return Err(Error::Dimension("mask and map sizes differ".into()));
    }
    let (nx, ny) = (map.grid.nx, map.grid.ny);
    let mut excluded = outer.to_vec();
    for j in 0..ny {
        for i in 0..nx {
            if outer[j * nx + i] {
                for b in j.saturating_sub(1)..=(j + 1).min(ny - 1) {
                    for a in i.saturating_sub(1)..=(i + 1).min(nx - 1) {
                        excluded[b * nx + a] = true;
                    }
                }
            }
        }
    }
    let mean = |sel: &dyn Fn(usize) -> bool| -> Option<f64> {
        let (s, c) = (0..n).filter(|&k| sel(k)).fold((0.0, 0usize), |(s, c), k| (s + map.values[k], c + 1));
        (c > 0).then(|| s / c as f64)
    };
    let inside_mean = mean(&|k| inner[k]).ok_or_else(|| Error::Invalid("inner support mask is empty".into()))?;
    let outside_mean =
        mean(&|k| !excluded[k]).ok_or_else(|| Error::Invalid("no grid nodes lie outside the outer support".into()))?;
    let ratio = if outside_mean == 0.0 {
        if inside_mean == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        inside_mean / outside_mean
    };
    let half = 0.5 * map.max();
    let (mut both, mut either) = (0usize, 0usize);
    for (&v, &m) in map.values.iter().zip(inner) {
        let hot = v >= half;
        both += (hot && m) as usize;
        either += (hot || m) as usize;
    }
    Ok(Contrast { inside_mean, outside_mean, ratio, jaccard_at_half: both as f64 / either as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::Provenance;
    use crate::greens::steering_vector;
    use crate::scene::{make_array, ArraySpec};
    use crate::{Frequency, Point};
    use nalgebra::DMatrix;

    fn setup() -> (ArrayGeometry, MediumParams, Frequency, FocusGrid) {
        let array = make_array(&ArraySpec::Spiral { count: 24, radius: 0.3, turns: 2.5 }, 3).unwrap();
        let medium = MediumParams::new(345.0, 0.125, 3).unwrap();
        let f = medium.wavenumber(4000.0).unwrap();
        let grid = FocusGrid::new(Point::new(-0.2, -0.2, 0.6), [0, 1], 21, 21, 0.02, 3).unwrap();
        (array, medium, f, grid)
    }

    #[test]
    fn rank_one_maps_peak_at_the_source_node() {
        let (array, medium, f, grid) = setup();
        let z0 = grid.node(13, 6);
        let g = steering_vector(&z0, &array, &f, &medium).unwrap().values;
        // A pure rank-one CSM leaves fac unbounded where |g| is small, so a
        // weak uncorrelated floor is added.
        let floor = 1e-6 * g.norm_squared();
        let c = &g * g.adjoint() + DMatrix::identity(24, 24) * C64::new(floor, 0.0);
        let csm = CrossSpectralMatrix::new(f, c, Provenance::Exact).unwrap();
        let opts = EigenOptions::default();
        let mut fac = None;
        for method in ImagingMethod::ALL {
            let map = compute_map(method, &csm, &array, &grid, &medium, &opts).unwrap();
            assert_eq!(map.argmax(), grid.index(13, 6), "{method}");
            assert!((map.values[map.argmax()] - 1.0).abs() < 1e-4);
            match method {
                ImagingMethod::Fac => fac = Some(map),
                ImagingMethod::Capon => {
                    for (a, b) in fac.as_ref().unwrap().values.iter().zip(&map.values) {
                        assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
                    }
                }
                _ => {}
            }
        }
    }

    #[test]
    fn zero_csm_gives_zero_cbf_map() {
        let (array, medium, f, grid) = setup();
        let csm = CrossSpectralMatrix::new(f, DMatrix::zeros(24, 24), Provenance::Exact).unwrap();
        let map = compute_map(ImagingMethod::Cbf, &csm, &array, &grid, &medium, &EigenOptions::default()).unwrap();
        assert!(map.values.iter().all(|&v| v == 0.0));
        let fac = compute_map(ImagingMethod::Fac, &csm, &array, &grid, &medium, &EigenOptions::default()).unwrap();
        assert_eq!(fac.sentinels, grid.len());
        let bad = CrossSpectralMatrix::new(f, DMatrix::zeros(3, 3), Provenance::Exact).unwrap();
        assert!(compute_map(ImagingMethod::Cbf, &bad, &array, &grid, &medium, &EigenOptions::default()).is_err());
    }

    fn line_map(values: Vec<f64>) -> SourceMap {
        let grid = FocusGrid { origin: [0.0, 0.0, 1.0], axes: [0, 1], nx: values.len(), ny: 1, spacing: 0.1 };
        SourceMap { grid, values, method: ImagingMethod::Cbf, label: MapLabel::Frequency(1.0), sentinels: 0 }
    }

    #[test]
    fn normalisation() {
        assert_eq!(normalize_map(&line_map(vec![2.0, 4.0])).values, [0.0, 1.0]);
        let v = vec![0.3, -1.0, 2.5, 0.0];
        let affine: Vec<f64> = v.iter().map(|x| 3.0 * x + 7.0).collect();
        let (a, b) = (normalize_map(&line_map(v)), normalize_map(&line_map(affine)));
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(normalize_map(&line_map(vec![5.0; 3])).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn contrast_examples() {
        let inner = [false, false, false, false, true, true, false, false, false, false];
        let outer = [false, false, false, true, true, true, true, false, false, false];
        let indicator = line_map(inner.iter().map(|&b| b as u8 as f64).collect());
        let c = contrast_metric(&indicator, &inner, &outer).unwrap();
        assert_eq!(c.ratio, f64::INFINITY);
        assert_eq!(c.jaccard_at_half, 1.0);
        let flat = line_map(vec![2.0; 10]);
        assert_eq!(contrast_metric(&flat, &inner, &outer).unwrap().ratio, 1.0);
        // Nodes 2 and 7 are within one cell of the outer support and are ignored.
        let mut v = vec![1.0; 10];
        v[4] = 10.0;
        v[5] = 10.0;
        v[2] = 100.0;
        let c = contrast_metric(&line_map(v), &inner, &outer).unwrap();
        assert_eq!(c.outside_mean, 1.0);
        assert_eq!(c.ratio, 10.0);
        assert!(contrast_metric(&flat, &[false; 10], &outer).is_err());
        assert!(contrast_metric(&flat, &inner, &[true; 10]).is_err());
        assert!(contrast_metric(&flat, &inner[..3], &outer).is_err());
    }

    #[test]
    fn labels_round_trip() {
        for l in [MapLabel::Frequency(8000.0), MapLabel::Band(12500.0), MapLabel::Frequency(117.1875)] {
            assert_eq!(l.to_string().parse::<MapLabel>().unwrap(), l);
        }
    }
}
