//! Bessel functions of order zero for real arguments.
//!
//! Ascending series are used up to [`SERIES_LIMIT`], the Hankel asymptotic
//! expansion beyond it. The switch sits above `x = 8` because the
//! asymptotic series cannot reach `1e-9` there: its smallest term is of
//! size `exp(-2x)`. At `x = 12` the series loses about four digits to
//! cancellation and the asymptotic truncation error is near `1e-11`.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::{Error, Result, C64};

/// Arguments up to this value use the ascending series.
pub const SERIES_LIMIT: f64 = 12.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn check_arg(x: f64, allow_zero: bool) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument {x} is not finite")));
    }
    if x < 0.0 || (!allow_zero && x == 0.0) {
        return Err(Error::Domain(format!("Bessel argument {x} out of range")));
    }
    Ok(())
}

/// Returns `(J0(x), sum_{m>=1} (-1)^{m+1} H_m (x^2/4)^m / (m!)^2)`.
fn ascending(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut j0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for m in 1..200 {
        let mf = m as f64;
        term *= -q / (mf * mf);
        harmonic += 1.0 / mf;
        j0 += term;
        tail -= term * harmonic;
        if term.abs() * harmonic < 1e-18 * (1.0 + j0.abs()) {
            break;
        }
    }
    (j0, tail)
}

/// Hankel asymptotic factors `(P0(x), Q0(x))`.
fn asymptotic_pq(x: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut u = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..100 {
        let odd = (2 * k - 1) as f64;
        u *= -odd * odd / (8.0 * k as f64 * x);
        let size = u.abs();
        if size >= prev || size < 1e-17 {
            break;
        }
        prev = size;
        // u_k = a_k / x^k; P collects even k with sign (-1)^(k/2),
        // Q collects odd k with sign (-1)^((k-1)/2).
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * u;
        } else {
            q += sign * u;
        }
    }
    (p, q)
}

pub(crate) fn j0_y0_unchecked(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        let (j0, tail) = ascending(x);
        let y0 = 2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + tail);
        (j0, y0)
    } else {
        let (p, q) = asymptotic_pq(x);
        let amp = (2.0 / (PI * x)).sqrt();
        let (s, c) = (x - FRAC_PI_4).sin_cos();
        (amp * (p * c - q * s), amp * (p * s + q * c))
    }
}

pub(crate) fn hankel1_0_unchecked(x: f64) -> C64 {
    let (j, y) = j0_y0_unchecked(x);
    C64::new(j, y)
}

/// `J0(x)` for `x >= 0`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check_arg(x, true)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(j0_y0_unchecked(x).0)
}

/// `Y0(x)` for `x > 0`.
pub fn bessel_y0(x: f64) -> Result<f64> {
    check_arg(x, false)?;
    Ok(j0_y0_unchecked(x).1)
}

/// `H0^(1)(x) = J0(x) + i Y0(x)` for `x > 0`.
pub fn hankel1_0(x: f64) -> Result<C64> {
    check_arg(x, false)?;
    Ok(hankel1_0_unchecked(x))
}
