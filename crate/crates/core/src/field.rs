//! Complex fields sampled on axis-aligned regular grids.

use crate::{Error, Point, Result, C64};

/// Axis-aligned lattice `origin + (i h0, j h1, l h2)`. Unused axes have a
/// count of one.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularGrid {
    pub origin: Point,
    pub spacing: [f64; 3],
    pub counts: [usize; 3],
}

impl RegularGrid {
    pub fn new(origin: Point, spacing: [f64; 3], counts: [usize; 3]) -> Result<Self> {
        for a in 0..3 {
            if counts[a] == 0 {
                return Err(Error::Invalid(format!("grid axis {a} has no nodes")));
            }
            if counts[a] > 1 && !(spacing[a] > 0.0 && spacing[a].is_finite()) {
                return Err(Error::Invalid(format!("grid spacing on axis {a} must be positive")));
            }
        }
        Ok(Self { origin, spacing, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        i + self.counts[0] * (j + self.counts[1] * l)
    }

    pub fn node(&self, i: usize, j: usize, l: usize) -> Point {
        let idx = [i, j, l];
        let mut p = self.origin;
        for a in 0..3 {
            if self.counts[a] > 1 {
                p[a] += idx[a] as f64 * self.spacing[a];
            }
        }
        p
    }

    /// Nodes in storage order (axis 0 fastest).
    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        let [nx, ny, nz] = self.counts;
        (0..nz).flat_map(move |l| (0..ny).flat_map(move |j| (0..nx).map(move |i| self.node(i, j, l))))
    }

    /// Product of the spacings over active axes.
    pub fn cell_volume(&self) -> f64 {
        (0..3).filter(|&a| self.counts[a] > 1).map(|a| self.spacing[a]).product()
    }

    /// Length of the cell diagonal over active axes.
    pub fn cell_diameter(&self) -> f64 {
        (0..3)
            .filter(|&a| self.counts[a] > 1)
            .map(|a| self.spacing[a] * self.spacing[a])
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance from `x` to the closed box covered by the cells
    /// (nodes padded by half a spacing on active axes).
    pub fn distance_to_cells(&self, x: &Point) -> f64 {
        let mut d2 = 0.0;
        for a in 0..3 {
            let (lo, hi) = if self.counts[a] > 1 {
                let half = 0.5 * self.spacing[a];
                (
                    self.origin[a] - half,
                    self.origin[a] + (self.counts[a] - 1) as f64 * self.spacing[a] + half,
                )
            } else {
                (self.origin[a], self.origin[a])
            };
            let gap = if x[a] < lo {
                lo - x[a]
            } else if x[a] > hi {
                x[a] - hi
            } else {
                0.0
            };
            d2 += gap * gap;
        }
        d2.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: RegularGrid,
    pub values: Vec<C64>,
}

impl SampledField {
    pub fn new(grid: RegularGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RegularGrid, f: impl Fn(&Point) -> C64) -> Self {
        let values = grid.nodes().map(|p| f(&p)).collect();
        Self { grid, values }
    }

    /// Multilinear interpolation (first order: bilinear on 2-D grids,
    /// trilinear on 3-D grids). Fractional indices within `1e-9` of a node
    /// snap onto it, so node-aligned queries return stored samples.
    pub fn interpolate(&self, x: &Point) -> Result<C64> {
        let g = &self.grid;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let n = g.counts[a];
            if n == 1 {
                if (x[a] - g.origin[a]).abs() > 1e-9 * (1.0 + g.origin[a].abs()) {
                    return Err(Error::Coverage(format!(
                        "coordinate {a} = {} is off the grid plane {}",
                        x[a], g.origin[a]
                    )));
                }
                continue;
            }
            let mut t = (x[a] - g.origin[a]) / g.spacing[a];
            if (t - t.round()).abs() < 1e-9 {
                t = t.round();
            }
            let last = (n - 1) as f64;
            if !(0.0..=last).contains(&t) {
                return Err(Error::Coverage(format!(
                    "coordinate {a} = {} outside [{}, {}]",
                    x[a],
                    g.origin[a],
                    g.origin[a] + last * g.spacing[a]
                )));
            }
            let i = (t.floor() as usize).min(n - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let mut acc = C64::new(0.0, 0.0);
        for corner in 0..8usize {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            let mut skip = false;
            for a in 0..3 {
                let bit = (corner >> a) & 1;
                if g.counts[a] == 1 {
                    if bit == 1 {
                        skip = true;
                        break;
                    }
                    continue;
                }
                idx[a] = base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if skip || w == 0.0 {
                continue;
            }
            acc += self.values[g.index(idx[0], idx[1], idx[2])] * w;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize, h: f64) -> RegularGrid {
        RegularGrid::new(Point::new(0.0, 0.0, 0.0), [h, h, 0.0], [n, n, 1]).unwrap()
    }

    #[test]
    fn interpolation_is_exact_for_bilinear_fields() {
        let f = |p: &Point| C64::new(1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1], p[1]);
        let field = SampledField::from_fn(grid2(5, 0.25), f);
        for &(x, y) in &[(0.1, 0.2), (0.99, 0.33), (1.0, 1.0), (0.0, 0.7)] {
            let p = Point::new(x, y, 0.0);
            assert!((field.interpolate(&p).unwrap() - f(&p)).norm() < 1e-13);
        }
    }

    #[test]
    fn interpolation_rejects_points_outside() {
        let field = SampledField::from_fn(grid2(3, 1.0), |_| C64::new(1.0, 0.0));
        assert!(matches!(
            field.interpolate(&Point::new(2.5, 0.0, 0.0)),
            Err(Error::Coverage(_))
        ));
        assert!(field.interpolate(&Point::new(1.0, 1.0, 0.3)).is_err());
    }

    #[test]
    fn distance_to_cells_pads_half_a_spacing() {
        let g = grid2(3, 1.0);
        assert_eq!(g.distance_to_cells(&Point::new(1.0, 1.0, 0.0)), 0.0);
        assert!((g.distance_to_cells(&Point::new(4.5, 1.0, 0.0)) - 2.0).abs() < 1e-15);
        assert_eq!(g.cell_volume(), 1.0);
    }
}
