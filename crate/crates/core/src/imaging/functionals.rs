use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::eigen::EigenSystem;
use crate::{Error, Result, C64};

/// Relative guard for vanishing denominators.
pub const DEN_EPS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImagingMethod {
    Fac,
    Capon,
    Cbf,
    CbfDr,
}

impl ImagingMethod {
    pub const ALL: [ImagingMethod; 4] = [ImagingMethod::Fac, ImagingMethod::Capon, ImagingMethod::Cbf, ImagingMethod::CbfDr];

    pub fn tag(&self) -> &'static str {
        match self {
            ImagingMethod::Fac => "fac",
            ImagingMethod::Capon => "capon",
            ImagingMethod::Cbf => "cbf",
            ImagingMethod::CbfDr => "cbfdr",
        }
    }
}

impl fmt::Display for ImagingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ImagingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown imaging method '{s}' (fac, capon, cbf, cbfdr)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsVariant {
    Full,
    OffDiag,
}

fn check_len(m: usize, g: &DVector<C64>) -> Result<()> {
    if g.len() != m {
        return Err(Error::Dimension(format!("steering vector has {} entries, CSM is {m}x{m}", g.len())));
    }
    Ok(())
}

/// `v* C† v` over the retained eigenpairs.
pub fn pinv_quadratic(eig: &EigenSystem, v: &DVector<C64>) -> f64 {
    let c = eig.coefficients(v);
    (0..eig.m0).map(|j| c[j].norm_sqr() / eig.eigenvalues[j]).sum()
}

/// `(g* C† g, degenerate)`: degenerate when `g` has no usable component in
/// the retained range.
pub(crate) fn pinv_guarded(eig: &EigenSystem, g: &DVector<C64>) -> (f64, bool) {
    let s = pinv_quadratic(eig, g);
    let scale = if eig.m0 > 0 { g.norm_squared() / eig.eigenvalues[0] } else { 0.0 };
    let degenerate = !(s.is_finite() && s > DEN_EPS * scale && s < 1.0 / DEN_EPS) || eig.m0 == 0;
    (s, degenerate)
}

/// Factorization functional `1 / sum_{j <= M0} |⟨g, ψ_j⟩|^2 / λ_j`.
/// Returns 0 when the sum vanishes or overflows.
pub fn fac_value(eig: &EigenSystem, g: &DVector<C64>) -> f64 {
    match pinv_guarded(eig, g) {
        (_, true) => 0.0,
        (s, false) => 1.0 / s,
    }
}

/// Unit-gain minimum-variance weights `C† g / (g* C† g)`.
pub fn capon_steering(eig: &EigenSystem, g: &DVector<C64>) -> Result<DVector<C64>> {
    check_len(eig.size(), g)?;
    let (s, degenerate) = pinv_guarded(eig, g);
    if degenerate {
        return Err(Error::Degenerate("steering vector is orthogonal to the range of the CSM".into()));
    }
    let c = eig.coefficients(g);
    let mut w = DVector::<C64>::zeros(g.len());
    for j in 0..eig.m0 {
        w.axpy(c[j] / (eig.eigenvalues[j] * s), &eig.eigenvectors.column(j), C64::new(1.0, 0.0));
    }
    Ok(w)
}

/// Output power `w* C w` of the Capon weights, evaluated through the full
/// eigen-expansion of `C`.
pub fn capon_value(eig: &EigenSystem, g: &DVector<C64>) -> Result<f64> {
    let w = capon_steering(eig, g)?;
    let c = eig.coefficients(&w);
    Ok(eig.eigenvalues.iter().zip(c.iter()).map(|(l, cj)| l * cj.norm_sqr()).sum())
}

fn norm4(g: &DVector<C64>) -> Result<f64> {
    let n2 = g.norm_squared();
    if !(n2 > 0.0) {
        return Err(Error::Degenerate("zero steering vector".into()));
    }
    Ok(n2 * n2)
}

/// Conventional beamformer `g* C g / |g|^4`.
pub fn cbf_value(c: &DMatrix<C64>, g: &DVector<C64>) -> Result<f64> {
    check_len(c.nrows(), g)?;
    Ok(g.dotc(&(c * g)).re / norm4(g)?)
}

/// `sum_j λ_j |⟨g, ψ_j⟩|^2 / |g|^4` over all eigenpairs.
pub fn cbf_value_eigen(eig: &EigenSystem, g: &DVector<C64>) -> Result<f64> {
    check_len(eig.size(), g)?;
    let c = eig.coefficients(g);
    let num: f64 = eig.eigenvalues.iter().zip(c.iter()).map(|(l, cj)| l * cj.norm_sqr()).sum();
    Ok(num / norm4(g)?)
}

/// Conventional beamformer with diagonal removal. The value may be
/// negative.
pub fn cbf_dr_value(c: &DMatrix<C64>, g: &DVector<C64>) -> Result<f64> {
    check_len(c.nrows(), g)?;
    if g.len() < 2 {
        return Err(Error::Degenerate("diagonal removal needs at least two microphones".into()));
    }
    let n4 = norm4(g)?;
    let diag_num: f64 = (0..g.len()).map(|j| c[(j, j)].re * g[j].norm_sqr()).sum();
    let diag_den: f64 = g.iter().map(|v| v.norm_sqr().powi(2)).sum();
    let den = n4 - diag_den;
    if !(den > 1e-14 * n4) {
        return Err(Error::Degenerate("steering mass concentrated on one microphone".into()));
    }
    Ok((g.dotc(&(c * g)).re - diag_num) / den)
}

/// Minimiser `μ` of `||C - μ g g*||_F^2`, over all entries (`Full`) or the
/// off-diagonal entries only (`OffDiag`), summed entrywise.
pub fn least_squares_form(c: &DMatrix<C64>, g: &DVector<C64>, variant: LsVariant) -> Result<f64> {
    let m = c.nrows();
    check_len(m, g)?;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..m {
        for l in 0..m {
            if variant == LsVariant::OffDiag && j == l {
                continue;
            }
            let b = g[j] * g[l].conj();
            num += (c[(j, l)] * b.conj()).re;
            den += b.norm_sqr();
        }
    }
    let scale = g.norm_squared().powi(2);
    if !(scale > 0.0) || !(den > 1e-14 * scale) {
        return Err(Error::Degenerate("least-squares fit has a vanishing design".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::eigen::EigenOptions;
    use crate::imaging::testutil::{random_psd, random_vector};
    use crate::rng::substream;
    use proptest::prelude::*;

    fn eig(c: &DMatrix<C64>) -> EigenSystem {
        EigenSystem::from_matrix(c, &EigenOptions::default()).unwrap()
    }

    fn cv(v: &[(f64, f64)]) -> DVector<C64> {
        DVector::from_iterator(v.len(), v.iter().map(|&(a, b)| C64::new(a, b)))
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn method_tags_round_trip() {
        for m in ImagingMethod::ALL {
            assert_eq!(m.tag().parse::<ImagingMethod>().unwrap(), m);
        }
        assert!("music".parse::<ImagingMethod>().is_err());
    }

    #[test]
    fn pinv_examples() {
        let v = cv(&[(1.0, 0.0), (0.0, 2.0), (1.0, 1.0)]);
        assert!((pinv_quadratic(&eig(&DMatrix::identity(3, 3)), &v) - 7.0).abs() < 1e-14);
        let d = DMatrix::from_diagonal(&cv(&[(2.0, 0.0), (1.0, 0.0)]));
        assert!((pinv_quadratic(&eig(&d), &cv(&[(1.0, 0.0), (1.0, 0.0)])) - 1.5).abs() < 1e-14);
        let d0 = DMatrix::from_diagonal(&cv(&[(2.0, 0.0), (0.0, 0.0)]));
        assert_eq!(pinv_quadratic(&eig(&d0), &cv(&[(0.0, 0.0), (1.0, 0.0)])), 0.0);
        assert_eq!(fac_value(&eig(&d0), &cv(&[(0.0, 0.0), (1.0, 0.0)])), 0.0);
        assert!(capon_steering(&eig(&d0), &cv(&[(0.0, 0.0), (1.0, 0.0)])).is_err());
    }

    #[test]
    fn identity_csm() {
        let g = cv(&[(1.0, -1.0), (0.5, 0.0), (0.0, 2.0)]);
        let e = eig(&DMatrix::identity(3, 3));
        let n2 = g.norm_squared();
        assert!(rel(fac_value(&e, &g), 1.0 / n2) < 1e-14);
        assert!(rel(capon_value(&e, &g).unwrap(), 1.0 / n2) < 1e-14);
        let w = capon_steering(&e, &g).unwrap();
        assert!((w - &g / C64::new(n2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn rank_one_identities() {
        let mut rng = substream(3, 0);
        for _ in 0..20 {
            let g = random_vector(&mut rng, 9);
            let c = &g * g.adjoint() * C64::new(2.0, 0.0);
            let e = eig(&c);
            for v in [
                fac_value(&e, &g),
                capon_value(&e, &g).unwrap(),
                cbf_value(&c, &g).unwrap(),
                cbf_dr_value(&c, &g).unwrap(),
                least_squares_form(&c, &g, LsVariant::Full).unwrap(),
            ] {
                assert!(rel(v, 2.0) < 1e-10, "{v}");
            }
            let w = capon_steering(&e, &g).unwrap();
            assert!((w - &g / C64::new(g.norm_squared(), 0.0)).norm() < 1e-10 * g.norm().recip());
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        // C = [[a, b], [conj b, d]]: C^{-1} = [[d, -b], [-conj b, a]] / (a d - |b|^2).
        let (a, b, d) = (3.0, C64::new(0.7, -1.1), 2.0);
        let c = DMatrix::from_row_slice(2, 2, &[C64::new(a, 0.0), b, b.conj(), C64::new(d, 0.0)]);
        let g = cv(&[(0.4, 0.9), (-1.3, 0.2)]);
        let det = a * d - b.norm_sqr();
        let quad = (a * g[1].norm_sqr() + d * g[0].norm_sqr() - 2.0 * (g[0].conj() * b * g[1]).re) / det;
        assert!(rel(fac_value(&eig(&c), &g), 1.0 / quad) < 1e-12);
        let cross = 2.0 * (g[0].conj() * b * g[1]).re;
        let dr = cross / (2.0 * g[0].norm_sqr() * g[1].norm_sqr());
        assert!(rel(cbf_dr_value(&c, &g).unwrap(), dr) < 1e-12);
    }

    #[test]
    fn cbf_edge_cases() {
        let g = cv(&[(1.0, 0.0), (0.0, 1.0), (2.0, 0.0)]);
        assert_eq!(cbf_value(&DMatrix::zeros(3, 3), &g).unwrap(), 0.0);
        let diag = DMatrix::from_diagonal(&cv(&[(1.0, 0.0), (4.0, 0.0), (2.0, 0.0)]));
        assert_eq!(cbf_dr_value(&diag, &g).unwrap(), 0.0);
        assert!(cbf_value(&DMatrix::zeros(3, 3), &DVector::zeros(3)).is_err());
        assert!(cbf_dr_value(&DMatrix::identity(3, 3), &cv(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)])).is_err());
        assert!(cbf_dr_value(&DMatrix::identity(1, 1), &cv(&[(1.0, 0.0)])).is_err());
        assert!(cbf_value(&DMatrix::identity(2, 2), &g).is_err());
    }

    #[test]
    fn capon_weights_have_unit_gain_and_minimise_power() {
        let mut rng = substream(5, 0);
        for _ in 0..10 {
            let c = random_psd(&mut rng, 8, 8);
            let g = random_vector(&mut rng, 8);
            let e = eig(&c);
            let w = capon_steering(&e, &g).unwrap();
            assert!((w.dotc(&g) - 1.0).norm() < 1e-10);
            let best = capon_value(&e, &g).unwrap();
            for _ in 0..200 {
                let mut v = random_vector(&mut rng, 8);
                let gain = v.dotc(&g);
                v /= gain.conj();
                let p = v.dotc(&(&c * &v)).re;
                assert!(p >= best - 1e-10 * best);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn functional_identities(seed in any::<u64>(), m in 2usize..=32, deficit in 0usize..4) {
            let mut rng = substream(seed, 1);
            let r = m.saturating_sub(deficit).max(1);
            let c = random_psd(&mut rng, m, r);
            let g = if r < m {
                // Keep g in range(C) so that the Capon weights exist.
                let e = eig(&c);
                let a = random_vector(&mut rng, r);
                e.eigenvectors.columns(0, r) * a
            } else {
                random_vector(&mut rng, m)
            };
            let e = eig(&c);
            let fac = fac_value(&e, &g);
            let cap = capon_value(&e, &g).unwrap();
            prop_assert!(rel(fac, cap) <= 1e-10);
            let s = pinv_quadratic(&e, &g);
            prop_assert_eq!(fac, 1.0 / s);

            let cbf = cbf_value(&c, &g).unwrap();
            prop_assert!(rel(cbf_value_eigen(&e, &g).unwrap(), cbf) <= 1e-12);
            prop_assert!(rel(least_squares_form(&c, &g, LsVariant::Full).unwrap(), cbf) <= 1e-12);
            let dr = cbf_dr_value(&c, &g).unwrap();
            let ls = least_squares_form(&c, &g, LsVariant::OffDiag).unwrap();
            prop_assert!((ls - dr).abs() <= 1e-12 * dr.abs().max(cbf));

            // Scaling covariance.
            let alpha = 3.7;
            let ca = &c * C64::new(alpha, 0.0);
            let ea = eig(&ca);
            prop_assert!(rel(fac_value(&ea, &g), alpha * fac) <= 1e-10);
            prop_assert!(rel(cbf_value(&ca, &g).unwrap(), alpha * cbf) <= 1e-12);

            // Simultaneous permutation of microphones.
            let perm: Vec<usize> = (0..m).rev().collect();
            let cp = DMatrix::from_fn(m, m, |i, j| c[(perm[i], perm[j])]);
            let gp = DVector::from_fn(m, |i, _| g[perm[i]]);
            let ep = eig(&cp);
            prop_assert!(rel(fac_value(&ep, &gp), fac) <= 1e-9);
            prop_assert!(rel(cbf_value(&cp, &gp).unwrap(), cbf) <= 1e-12);
            prop_assert!((cbf_dr_value(&cp, &gp).unwrap() - dr).abs() <= 1e-12 * dr.abs().max(cbf));
        }
    }
}
