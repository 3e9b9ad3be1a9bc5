use nalgebra::DVector;

use super::eigen::EigenSystem;
use super::functionals::{capon_steering, capon_value};
use crate::{Result, C64};

/// Relative size of the component of `g` outside the retained range above
/// which the infimum is treated as not attained.
pub const KERNEL_TOL: f64 = 1e-8;

/// Partial sums `S_n = sum_{j <= n} |⟨g, ψ_j⟩|^2 / λ_j`, `n = 1..=M0`.
pub fn picard_partial_sums(eig: &EigenSystem, g: &DVector<C64>) -> Vec<f64> {
    let c = eig.coefficients(g);
    let mut acc = 0.0;
    (0..eig.m0)
        .map(|j| {
            acc += c[j].norm_sqr() / eig.eigenvalues[j];
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfCriterion {
    pub value: f64,
    pub minimizer: Option<DVector<C64>>,
}

/// `inf { ψ* C ψ : ψ* g = 1 }`. When `g` leaves the retained range the
/// infimum is 0 and not attained.
pub fn inf_criterion(eig: &EigenSystem, g: &DVector<C64>) -> Result<InfCriterion> {
    let c = eig.coefficients(g);
    let in_range: f64 = (0..eig.m0).map(|j| c[j].norm_sqr()).sum();
    let outside = (g.norm_squared() - in_range).max(0.0).sqrt();
    if eig.m0 == 0 || outside > KERNEL_TOL * g.norm() {
        return Ok(InfCriterion { value: 0.0, minimizer: None });
    }
    let minimizer = capon_steering(eig, g)?;
    Ok(InfCriterion { value: capon_value(eig, g)?, minimizer: Some(minimizer) })
}
