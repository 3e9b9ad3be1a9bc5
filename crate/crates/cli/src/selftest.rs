//! Built-in invariant suites, runnable from an installed binary.

use std::f64::consts::PI;
use std::path::Path;

use aeromap_core::greens::greens;
use aeromap_core::imaging::{band_bin_count, capon_value, fac_value, third_octave_band, EigenOptions, EigenSystem};
use aeromap_core::nalgebra::{DMatrix, DVector};
use aeromap_core::rng::{complex_normal, substream};
use aeromap_core::specialfn::{bessel_j0, bessel_y0, hankel1_0};
use aeromap_core::{Frequency, MediumParams, Point, C64};

const FIXTURES: &str = include_str!("../../core/tests/data/bessel_fixtures.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = Result<String, String>;

/// Runs every suite; a failing suite does not stop the others.
pub fn run_selftest(fixture_override: Option<&Path>) -> Vec<SuiteResult> {
    let fixtures = match fixture_override {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display())),
        None => Ok(FIXTURES.to_string()),
    };
    type Suite = (&'static str, Box<dyn Fn() -> Check>);
    let suites: [Suite; 4] = [
        ("specialfn-fixtures", Box::new(move || fixtures.clone().and_then(|t| check_fixtures(&t)))),
        ("greens-reduction", Box::new(check_greens_reduction)),
        ("capon-fac-identity", Box::new(check_capon_identity)),
        ("band-counts", Box::new(check_band_counts)),
    ];
    suites
        .into_iter()
        .map(|(name, f)| {
            let r = f();
            SuiteResult { name, passed: r.is_ok(), detail: r.unwrap_or_else(|e| e) }
        })
        .collect()
}

fn check_fixtures(text: &str) -> Check {
    let mut count = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("line {}: unparsable", line_no + 1))?;
        let [x, j0, y0] = v[..] else {
            return Err(format!("line {}: expected 3 columns", line_no + 1));
        };
        let tol = 1e-9 * (j0 * j0 + y0 * y0).sqrt().max(1.0);
        let j = bessel_j0(x).map_err(|e| e.to_string())?;
        let y = bessel_y0(x).map_err(|e| e.to_string())?;
        let h = hankel1_0(x).map_err(|e| e.to_string())?;
        if (j - j0).abs() > tol || (y - y0).abs() > tol || (h - C64::new(j0, y0)).norm() > tol {
            return Err(format!("x = {x}: J0 {j} vs {j0}, Y0 {y} vs {y0}"));
        }
        count += 1;
    }
    if count == 0 {
        return Err("no fixture rows".into());
    }
    Ok(format!("{count} reference points within 1e-9"))
}

fn check_greens_reduction() -> Check {
    let mut rng = substream(2024, 0);
    let mut worst: f64 = 0.0;
    for dim in [2usize, 3] {
        let medium = MediumParams::new(343.0, 0.0, dim).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let (a, b, c) = (complex_normal(&mut rng), complex_normal(&mut rng), complex_normal(&mut rng));
            let third = if dim == 3 { c.re } else { 0.0 };
            let y = Point::new(a.re, a.im, third);
            let x = y + Point::new(b.re, b.im, if dim == 3 { c.im } else { 0.0 });
            let k = 0.5 + 40.0 * c.norm_sqr().fract();
            let freq = Frequency::from_wavenumber(k, &medium).map_err(|e| e.to_string())?;
            let r = (x - y).norm();
            if r < 1e-3 {
                continue;
            }
            let expected = if dim == 3 {
                C64::from_polar(1.0 / (4.0 * PI * r), k * r)
            } else {
                C64::new(0.0, 0.25) * hankel1_0(k * r).map_err(|e| e.to_string())?
            };
            let g = greens(&x, &y, &freq, &medium).map_err(|e| e.to_string())?;
            let err = (g - expected).norm() / expected.norm();
            let tol = if dim == 3 { 1e-12 } else { 1e-9 };
            if err > tol {
                return Err(format!("d = {dim}, r = {r}, k = {k}: relative error {err:e}"));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("2000 pairs, worst relative error {worst:.1e}"))
}

fn check_capon_identity() -> Check {
    let mut rng = substream(2024, 1);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let m = 2 + trial % 31;
        let b = DMatrix::from_fn(m, m, |_, _| complex_normal(&mut rng));
        let c = &b * b.adjoint();
        let g = DVector::from_fn(m, |_, _| complex_normal(&mut rng));
        let eig = EigenSystem::from_matrix(&c, &EigenOptions::default()).map_err(|e| e.to_string())?;
        let cap = capon_value(&eig, &g).map_err(|e| e.to_string())?;
        let err = (fac_value(&eig, &g) - cap).abs() / cap;
        if err > 1e-10 {
            return Err(format!("M = {m}: relative gap {err:e}"));
        }
        worst = worst.max(err);
    }
    Ok(format!("100 instances, worst relative gap {worst:.1e}"))
}

fn check_band_counts() -> Check {
    let df = 120_000.0 / 1024.0;
    let counts: Vec<usize> = [8000.0, 12000.0, 16000.0]
        .iter()
        .map(|&fc| third_octave_band(fc).map(|b| band_bin_count(&b, df)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if counts == [16, 23, 32] {
        Ok("8/12/16 kHz bands hold 16/23/32 bins".into())
    } else {
        Err(format!("counts {counts:?}, expected [16, 23, 32]"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for r in run_selftest(None) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn corrupted_fixtures_fail_only_their_suite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixtures.txt");
        std::fs::write(&path, FIXTURES.replacen("9.99975000156e-01", "9.99985000156e-01", 1)).unwrap();
        let results = run_selftest(Some(&path));
        assert!(!results[0].passed);
        assert!(results[1..].iter().all(|r| r.passed));
        let missing = run_selftest(Some(&dir.path().join("absent.txt")));
        assert!(!missing[0].passed);
    }
}
