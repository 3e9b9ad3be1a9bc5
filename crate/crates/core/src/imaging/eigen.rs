use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::estimation::CrossSpectralMatrix;
use crate::{Error, Result, C64};

/// Default relative positivity threshold: `λ_j` counts when `λ_j > τ λ_1`.
pub const DEFAULT_TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tau: f64,
    /// Optional cap on the number of retained eigenpairs.
    pub rank_cap: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU, rank_cap: None }
    }
}

/// Eigenvalues in descending order with orthonormal eigenvectors as the
/// columns of `eigenvectors`; the first `m0` pairs are retained.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<C64>,
    pub m0: usize,
}

pub fn eig_hermitian(csm: &CrossSpectralMatrix, opts: &EigenOptions) -> Result<EigenSystem> {
    EigenSystem::from_matrix(&csm.entries, opts)
}

impl EigenSystem {
    pub fn from_matrix(c: &DMatrix<C64>, opts: &EigenOptions) -> Result<Self> {
        if c.nrows() != c.ncols() {
            return Err(Error::Dimension(format!("matrix is {}x{}", c.nrows(), c.ncols())));
        }
        if c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("matrix passed to the eigensolver".into()));
        }
        if !(opts.tau >= 0.0) {
            return Err(Error::Invalid(format!("positivity threshold {} must be >= 0", opts.tau)));
        }
        let m = c.nrows();
        let eig = SymmetricEigen::new(c.clone());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = DVector::from_iterator(m, order.iter().map(|&j| eig.eigenvalues[j]));
        let eigenvectors = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
        let lead = eigenvalues.get(0).copied().unwrap_or(0.0);
        let mut m0 = if lead > 0.0 { eigenvalues.iter().take_while(|&&l| l > opts.tau * lead).count() } else { 0 };
        if let Some(cap) = opts.rank_cap {
            m0 = m0.min(cap);
        }
        Ok(Self { eigenvalues, eigenvectors, m0 })
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `⟨v, ψ_j⟩ = ψ_j* v` for every eigenvector.
    pub fn coefficients(&self, v: &DVector<C64>) -> DVector<C64> {
        self.eigenvectors.ad_mul(v)
    }

    /// `Ψ Λ Ψ*` over all eigenpairs.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::new(self.eigenvalues[j], 0.0);
        }
        scaled * self.eigenvectors.adjoint()
    }
}
