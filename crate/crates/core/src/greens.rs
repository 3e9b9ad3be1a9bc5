//! Fundamental solution of the convected Helmholtz equation
//! `Δp + (k + i m·∇)^2 p = -Q` and the quantities built from it.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::field::SampledField;
use crate::scene::ArrayGeometry;
use crate::specialfn::hankel1_0_unchecked;
use crate::{Error, Frequency, MediumParams, Point, Result, C64};

/// Points closer than this are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// `sup_{t > 0} sqrt(t) |H0^(1)(t)|`, from a sweep over `t ∈ [1e-4, 2e3]`
/// against a 40-digit reference (the supremum is the large-`t` limit
/// `sqrt(2 / pi)`), rounded up.
pub const HANKEL_ENVELOPE_SUP: f64 = 0.797_885;

/// Evaluates `g(x, y)` without the coincidence check.
#[inline]
pub(crate) fn greens_unchecked(x: &Point, y: &Point, k: f64, medium: &MediumParams) -> C64 {
    let d = x - y;
    let beta2 = medium.beta() * medium.beta();
    let scaled = k / beta2;
    let rm = medium.mach_norm(&d);
    let convective = -scaled * medium.mach() * d[0];
    if medium.dim() == 3 {
        C64::from_polar(1.0 / (4.0 * PI * rm), convective + scaled * rm)
    } else {
        let h = hankel1_0_unchecked(scaled * rm);
        C64::from_polar(1.0, convective) * C64::new(0.0, 0.25 / medium.beta()) * h
    }
}

/// Fundamental solution `g(x, y)` of the convected Helmholtz equation.
///
/// * `d = 3`: `exp(-i k/β² (x-y)·m) exp(i k/β² |x-y|_m) / (4π |x-y|_m)`
/// * `d = 2`: `exp(-i k/β² (x-y)·m) (i / 4β) H0^(1)(k/β² |x-y|_m)`
pub fn greens(x: &Point, y: &Point, freq: &Frequency, medium: &MediumParams) -> Result<C64> {
    let distance = (x - y).norm();
    if !(distance >= COINCIDENCE_TOL) {
        return Err(Error::Coincident { distance });
    }
    Ok(greens_unchecked(x, y, freq.k, medium))
}

/// Constant `C(d)` such that `|g(x, y)| <= C(d) |x - y|^((1-d)/2)`.
///
/// In three dimensions `|x-y|_m >= β |x-y|` gives `1/(4π β²)` (which also
/// covers the sharper `1/(4πβ)`). In two dimensions the envelope of the
/// Hankel function gives `sup sqrt(t)|H0(t)| / (4 sqrt(kβ))`; this depends on
/// `k`, so the constant is per frequency.
pub fn bound_constant(freq: &Frequency, medium: &MediumParams) -> f64 {
    let beta = medium.beta();
    if medium.dim() == 3 {
        1.0 / (4.0 * PI * beta * beta)
    } else {
        HANKEL_ENVELOPE_SUP / (4.0 * (freq.k * beta).sqrt())
    }
}

pub fn greens_bound_check(x: &Point, y: &Point, freq: &Frequency, medium: &MediumParams) -> bool {
    let Ok(g) = greens(x, y, freq, medium) else {
        return false;
    };
    let r = (x - y).norm();
    let exponent = (1.0 - medium.dim() as f64) / 2.0;
    g.norm() <= bound_constant(freq, medium) * r.powf(exponent)
}

/// Vector of Green's function values from a focus point to every
/// microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub values: DVector<C64>,
    pub focus: Point,
    pub freq: Frequency,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn steering_vector(
    z: &Point,
    array: &ArrayGeometry,
    freq: &Frequency,
    medium: &MediumParams,
) -> Result<SteeringVector> {
    let values = array
        .positions()
        .iter()
        .map(|x| greens(x, z, freq, medium))
        .collect::<Result<Vec<_>>>()?;
    Ok(SteeringVector { values: DVector::from_vec(values), focus: *z, freq: *freq })
}

/// Midpoint-rule approximation of `∫ Q(y) g(x, y) dy` with `Q` sampled at
/// the cell centres of `source`.
pub fn volume_potential(
    source: &SampledField,
    x: &Point,
    freq: &Frequency,
    medium: &MediumParams,
) -> Result<C64> {
    let grid = &source.grid;
    let distance = grid.distance_to_cells(x);
    if distance <= grid.cell_diameter() {
        return Err(Error::InsideSource { distance });
    }
    let dv = grid.cell_volume();
    let sum: C64 = grid
        .nodes()
        .zip(&source.values)
        .filter(|(_, q)| **q != C64::new(0.0, 0.0))
        .map(|(z, q)| q * greens_unchecked(x, &z, freq.k, medium))
        .sum();
    Ok(sum * dv)
}

/// Magnitude of the central-difference discretisation of
/// `Δp + k² p + 2ik m·∇p − (m·∇)² p` at `x` with step `h`.
pub fn pde_residual(
    field: &dyn Fn(&Point) -> C64,
    x: &Point,
    freq: &Frequency,
    medium: &MediumParams,
    h: f64,
) -> f64 {
    let k = freq.k;
    let m1 = medium.mach();
    let centre = field(x);
    let mut laplacian = C64::new(0.0, 0.0);
    let mut d1 = C64::new(0.0, 0.0);
    let mut d11 = C64::new(0.0, 0.0);
    for axis in 0..medium.dim() {
        let mut step = Point::zeros();
        step[axis] = h;
        let plus = field(&(x + step));
        let minus = field(&(x - step));
        let second = (plus - 2.0 * centre + minus) / (h * h);
        laplacian += second;
        if axis == 0 {
            d1 = (plus - minus) / (2.0 * h);
            d11 = second;
        }
    }
    let residual = laplacian + k * k * centre + C64::new(0.0, 2.0 * k * m1) * d1 - m1 * m1 * d11;
    residual.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RegularGrid;
    use crate::medium::LorentzDirection;
    use crate::specialfn::hankel1_0;
    use rand::Rng;

    fn medium(m1: f64, dim: usize) -> MediumParams {
        MediumParams::new(345.0, m1, dim).unwrap()
    }

    #[test]
    fn no_flow_examples() {
        let m = medium(0.0, 3);
        let f = Frequency::from_wavenumber(1.0, &m).unwrap();
        let g = greens(&Point::new(1.0, 0.0, 0.0), &Point::zeros(), &f, &m).unwrap();
        let want = C64::from_polar(1.0 / (4.0 * PI), 1.0);
        assert!((g - want).norm() < 1e-15);
        assert!((g - C64::new(0.042_996, 0.066_961)).norm() < 2e-6);

        let m = medium(0.0, 2);
        let g = greens(&Point::new(0.0, 1.0, 0.0), &Point::zeros(), &f, &m).unwrap();
        assert!((g - C64::new(-0.022_064_24, 0.191_299_42)).norm() < 1e-8);
    }

    #[test]
    fn parallel_offset_has_unit_mach_norm() {
        let m = medium(0.125, 3);
        let f = Frequency::from_wavenumber(1.0, &m).unwrap();
        let g = greens(&Point::new(1.0, 0.0, 0.0), &Point::zeros(), &f, &m).unwrap();
        assert!((g.norm() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let b2 = m.beta() * m.beta();
        let phase = (1.0 - 0.125) / b2;
        assert!((g - C64::from_polar(1.0 / (4.0 * PI), phase)).norm() < 1e-15);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let m = medium(0.1, 3);
        let f = m.wavenumber(1000.0).unwrap();
        let x = Point::new(0.2, 0.1, 0.5);
        assert!(matches!(greens(&x, &x, &f, &m), Err(Error::Coincident { .. })));
        let y = x + Point::new(1e-13, 0.0, 0.0);
        assert!(greens(&x, &y, &f, &m).is_err());
        assert!(!greens_bound_check(&x, &x, &f, &m));
    }

    #[test]
    fn reduction_to_standard_helmholtz() {
        let mut rng = crate::rng::substream(21, 0);
        for dim in [2, 3] {
            let m = medium(0.0, dim);
            for _ in 0..1000 {
                let k = rng.random_range(0.1..50.0);
                let f = Frequency::from_wavenumber(k, &m).unwrap();
                let mut x = Point::zeros();
                let mut y = Point::zeros();
                for a in 0..dim {
                    x[a] = rng.random_range(-2.0..2.0);
                    y[a] = rng.random_range(-2.0..2.0);
                }
                let r = (x - y).norm();
                let g = greens(&x, &y, &f, &m).unwrap();
                let want = if dim == 3 {
                    C64::from_polar(1.0, k * r) / (4.0 * PI * r)
                } else {
                    C64::new(0.0, 0.25) * hankel1_0(k * r).unwrap()
                };
                let tol = if dim == 3 { 1e-12 } else { 1e-9 };
                assert!((g - want).norm() <= tol * want.norm(), "d={dim} k={k} r={r}");
            }
        }
    }

    #[test]
    fn modulus_is_symmetric_under_cross_stream_reflection() {
        let mut rng = crate::rng::substream(22, 0);
        for dim in [2, 3] {
            let m = medium(0.3, dim);
            let f = m.wavenumber(2000.0).unwrap();
            for _ in 0..200 {
                let y = Point::zeros();
                let mut x = Point::zeros();
                for a in 0..dim {
                    x[a] = rng.random_range(-1.0..1.0);
                }
                let mut xr = -x;
                xr[0] = x[0];
                let a = greens(&x, &y, &f, &m).unwrap().norm();
                let b = greens(&xr, &y, &f, &m).unwrap().norm();
                assert!((a - b).abs() <= 1e-13 * a);
            }
        }
    }

    #[test]
    fn bound_holds_in_three_dimensions() {
        let mut rng = crate::rng::substream(23, 0);
        for _ in 0..10_000 {
            let m = medium(rng.random_range(0.0..0.95), 3);
            let f = Frequency::from_wavenumber(rng.random_range(0.01..500.0), &m).unwrap();
            let x = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let y = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            assert!(greens_bound_check(&x, &y, &f, &m));
        }
    }

    #[test]
    fn bound_holds_in_two_dimensions_over_a_sweep() {
        let mut worst: f64 = 0.0;
        for &m1 in &[0.0, 0.125, 0.5, 0.9] {
            let m = medium(m1, 2);
            let f = Frequency::from_wavenumber(3.0, &m).unwrap();
            // k|x - y| from 0.01 to 100 in several directions.
            let mut kr: f64 = 0.01;
            while kr <= 100.0 {
                for angle in [0.0, 0.4, 1.0, PI / 2.0, 2.5] {
                    let r = kr / f.k;
                    let x = Point::new(r * f64::cos(angle), r * f64::sin(angle), 0.0);
                    assert!(greens_bound_check(&x, &Point::zeros(), &f, &m), "kr={kr} m1={m1}");
                    let g = greens(&x, &Point::zeros(), &f, &m).unwrap();
                    worst = worst.max(g.norm() * r.sqrt() / bound_constant(&f, &m));
                }
                kr *= 1.05;
            }
        }
        assert!(worst > 0.5, "bound is far from tight: {worst}");
    }

    #[test]
    fn volume_potential_quadrature() {
        let m = medium(0.125, 3);
        let f = m.wavenumber(500.0).unwrap();
        let grid = RegularGrid::new(Point::new(0.0, 0.0, 1.0), [0.05, 0.05, 0.05], [3, 3, 3]).unwrap();
        let x = Point::new(0.3, -0.2, 0.0);
        let zero = SampledField::new(grid.clone(), vec![C64::new(0.0, 0.0); 27]).unwrap();
        assert_eq!(volume_potential(&zero, &x, &f, &m).unwrap(), C64::new(0.0, 0.0));

        let mut one = zero.clone();
        one.values[grid.index(1, 2, 0)] = C64::new(1.0, 0.0);
        let want = greens(&x, &grid.node(1, 2, 0), &f, &m).unwrap() * grid.cell_volume();
        assert!((volume_potential(&one, &x, &f, &m).unwrap() - want).norm() < 1e-18);

        let inside = Point::new(0.05, 0.05, 1.05);
        assert!(matches!(
            volume_potential(&one, &inside, &f, &m),
            Err(Error::InsideSource { .. })
        ));
    }

    #[test]
    fn volume_potential_is_linear() {
        let m = medium(0.2, 3);
        let f = m.wavenumber(1500.0).unwrap();
        let grid = RegularGrid::new(Point::new(-0.1, -0.1, 0.8), [0.02; 3], [11, 11, 4]).unwrap();
        let q1 = SampledField::from_fn(grid.clone(), |p| C64::new(p[0] + 1.0, p[2]));
        let q2 = SampledField::from_fn(grid.clone(), |p| C64::new(p[1] * p[1], -1.0));
        let (a, b) = (C64::new(0.5, -2.0), C64::new(3.0, 0.25));
        let combo = SampledField::new(
            grid.clone(),
            q1.values.iter().zip(&q2.values).map(|(u, v)| a * u + b * v).collect(),
        )
        .unwrap();
        let x = Point::new(0.1, 0.3, 0.0);
        let lhs = volume_potential(&combo, &x, &f, &m).unwrap();
        let rhs = a * volume_potential(&q1, &x, &f, &m).unwrap() + b * volume_potential(&q2, &x, &f, &m).unwrap();
        assert!((lhs - rhs).norm() <= 1e-13 * lhs.norm());
    }

    #[test]
    fn volume_potential_converges_at_second_order() {
        // Q = prod sin^2(pi (y - a) / L) on a cube; refine 4, 8, 16 cells per axis.
        let m = medium(0.125, 3);
        let f = m.wavenumber(800.0).unwrap();
        let (a, len) = (Point::new(-0.1, -0.1, 0.6), 0.2);
        let x = Point::new(0.15, 0.05, 0.0);
        let level = |n: usize| {
            let h = len / n as f64;
            let origin = a + Point::new(h / 2.0, h / 2.0, h / 2.0);
            let grid = RegularGrid::new(origin, [h; 3], [n; 3]).unwrap();
            let q = SampledField::from_fn(grid, |p| {
                let s: f64 = (0..3).map(|i| (PI * (p[i] - a[i]) / len).sin().powi(2)).product();
                C64::new(s, 0.0)
            });
            volume_potential(&q, &x, &f, &m).unwrap()
        };
        let (i1, i2, i3) = (level(4), level(8), level(16));
        let order = ((i1 - i2).norm() / (i2 - i3).norm()).log2();
        assert!(order >= 2.0, "observed order {order}");
    }

    #[test]
    fn pde_residual_examples() {
        let m = medium(0.125, 3);
        let f = Frequency::from_wavenumber(5.0, &m).unwrap();
        let x = Point::new(0.3, 0.2, 0.7);
        let ones = |_: &Point| C64::new(1.0, 0.0);
        assert!((pde_residual(&ones, &x, &f, &m, 1e-3) - 25.0).abs() < 1e-9);

        let alpha = f.k / (1.0 + m.mach());
        let wave = move |p: &Point| C64::from_polar(1.0, alpha * p[0]);
        let r1 = pde_residual(&wave, &x, &f, &m, 1e-2);
        let r2 = pde_residual(&wave, &x, &f, &m, 5e-3);
        assert!(r1 < 1e-3 * f.k * f.k && (r1 / r2).log2() > 1.9, "{r1} {r2}");

        let y = Point::new(0.0, 0.0, 0.0);
        let xg = Point::new(0.6, 0.0, 0.8);
        let g = |p: &Point| greens_unchecked(p, &y, f.k, &m);
        let hs = [1e-2, 5e-3, 2.5e-3];
        let res: Vec<f64> = hs.iter().map(|&h| pde_residual(&g, &xg, &f, &m, h)).collect();
        for w in res.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{res:?}");
        }
    }

    #[test]
    fn lorentz_transformed_green_solves_standard_helmholtz() {
        // w0(x) = exp(i m1 k x1 / β) g(T^-1 x, y) solves Δw + (k/β)² w = 0.
        let m = medium(0.4, 2);
        let f = Frequency::from_wavenumber(6.0, &m).unwrap();
        let std_medium = medium(0.0, 2);
        let std_freq = Frequency::from_wavenumber(f.k / m.beta(), &std_medium).unwrap();
        let y = Point::new(0.0, 0.0, 0.0);
        let x = Point::new(0.7, 0.5, 0.0);
        let w0 = |p: &Point| {
            let src = m.lorentz_map(p, LorentzDirection::Inverse);
            C64::from_polar(1.0, m.mach() * f.k * p[0] / m.beta()) * greens_unchecked(&src, &y, f.k, &m)
        };
        let r: Vec<f64> = [1e-2, 5e-3].iter().map(|&h| pde_residual(&w0, &x, &std_freq, &std_medium, h)).collect();
        assert!((r[0] / r[1]).log2() > 1.9, "{r:?}");

        // Sampled route through the field transform: source grid spaced so
        // that T^-1 maps target nodes onto source nodes.
        let h = 0.01;
        let target = RegularGrid::new(Point::new(0.6, 0.4, 0.0), [h, h, 0.0], [21, 21, 1]).unwrap();
        let src_grid = RegularGrid::new(
            Point::new(0.6 * m.beta(), 0.4, 0.0),
            [h * m.beta(), h, 0.0],
            [21, 21, 1],
        )
        .unwrap();
        let sampled = SampledField::from_fn(src_grid, |p| greens_unchecked(p, &y, f.k, &m));
        let out = m.lorentz_transform_field(&sampled, f.k, &target).unwrap();
        let c = target.index(10, 10, 0);
        let lap = out.values[c + 1] + out.values[c - 1] + out.values[c + 21] + out.values[c - 21] - 4.0 * out.values[c];
        let res = (lap / (h * h) + std_freq.k * std_freq.k * out.values[c]).norm();
        let direct = pde_residual(&w0, &target.node(10, 10, 0), &std_freq, &std_medium, h);
        assert!((res - direct).abs() < 1e-6 * (1.0 + direct), "{res} vs {direct}");
        assert!(res < 0.05 * out.values[c].norm() * std_freq.k * std_freq.k);
    }
}
