//! Uniform subsonic flow along the `x1` axis.
//!
//! The flow enters every formula through the Mach number `m1` and
//! `beta = sqrt(1 - m1^2)`. Points are stored as 3-vectors; in two
//! dimensions the third coordinate is zero and ignored.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::field::{RegularGrid, SampledField};
use crate::{Error, Result, C64};

pub type Point = Vector3<f64>;

/// `sqrt(1 - m1^2)` for a subsonic Mach number.
pub fn beta_of(m1: f64) -> Result<f64> {
    if !m1.is_finite() || m1 < 0.0 {
        return Err(Error::Domain(format!("Mach number {m1} must be finite and >= 0")));
    }
    if m1 >= 1.0 {
        return Err(Error::Domain(format!("Mach number {m1} is supersonic or sonic; subsonic flow needs m1 < 1")));
    }
    Ok((1.0 - m1 * m1).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    speed_of_sound: f64,
    mach: f64,
    beta: f64,
    dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LorentzDirection {
    /// `x -> T x = (x1 / beta, x2, ...)`
    Forward,
    /// `x -> T^-1 x = (beta x1, x2, ...)`
    Inverse,
}

impl MediumParams {
    pub fn new(speed_of_sound: f64, mach: f64, dim: usize) -> Result<Self> {
        if !(speed_of_sound > 0.0 && speed_of_sound.is_finite()) {
            return Err(Error::Domain(format!("speed of sound {speed_of_sound} must be positive")));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::Domain(format!("spatial dimension {dim} not in {{2, 3}}")));
        }
        let beta = beta_of(mach)?;
        Ok(Self { speed_of_sound, mach, beta, dim })
    }

    /// Builds the medium from a full Mach vector. Only flow along `+x1` is
    /// supported.
    pub fn with_mach_vector(speed_of_sound: f64, mach: &Point, dim: usize) -> Result<Self> {
        if mach[1] != 0.0 || mach[2] != 0.0 {
            return Err(Error::Domain("flow must be aligned with the x1 axis".into()));
        }
        Self::new(speed_of_sound, mach[0], dim)
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    pub fn mach(&self) -> f64 {
        self.mach
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the coordinate normal to the measurement plane.
    pub fn height_axis(&self) -> usize {
        self.dim - 1
    }

    /// `|x|_m = sqrt((m . x)^2 + beta^2 |x|^2)`.
    pub fn mach_norm(&self, x: &Point) -> f64 {
        let mx = self.mach * x[0];
        (mx * mx + self.beta * self.beta * x.norm_squared()).sqrt()
    }

    pub fn wavenumber(&self, f: f64) -> Result<Frequency> {
        Frequency::new(f, self)
    }

    pub fn lorentz_map(&self, x: &Point, direction: LorentzDirection) -> Point {
        let mut y = *x;
        match direction {
            LorentzDirection::Forward => y[0] /= self.beta,
            LorentzDirection::Inverse => y[0] *= self.beta,
        }
        y
    }

    /// Maps a convected-Helmholtz field `w_m` onto `target` by
    /// `w_0(x) = exp(i m1 k x1 / beta) w_m(T^-1 x)`.
    ///
    /// `w_m` is resampled with first-order multilinear interpolation, so
    /// the result is exact only where `T^-1` maps target nodes onto source
    /// nodes. Every `T^-1 x` must lie inside the source grid.
    pub fn lorentz_transform_field(
        &self,
        w_m: &SampledField,
        k: f64,
        target: &RegularGrid,
    ) -> Result<SampledField> {
        if self.mach == 0.0 && *target == w_m.grid {
            return Ok(w_m.clone());
        }
        let rate = self.mach * k / self.beta;
        let values = target
            .nodes()
            .map(|x| {
                let src = self.lorentz_map(&x, LorentzDirection::Inverse);
                let w = w_m.interpolate(&src)?;
                Ok(C64::from_polar(1.0, rate * x[0]) * w)
            })
            .collect::<Result<Vec<_>>>()?;
        SampledField::new(target.clone(), values)
    }
}

/// A temporal frequency and its wavenumber `k = 2 pi f / c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub hz: f64,
    pub k: f64,
}

impl Frequency {
    pub fn new(hz: f64, medium: &MediumParams) -> Result<Self> {
        if !(hz > 0.0 && hz.is_finite()) {
            return Err(Error::Domain(format!("frequency {hz} Hz must be positive")));
        }
        Ok(Self { hz, k: 2.0 * PI * hz / medium.speed_of_sound })
    }

    pub fn from_wavenumber(k: f64, medium: &MediumParams) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("wavenumber {k} must be positive")));
        }
        Ok(Self { hz: k * medium.speed_of_sound / (2.0 * PI), k })
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.hz
    }
}
