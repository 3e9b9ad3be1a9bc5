use nalgebra::DMatrix;
use rayon::prelude::*;

use super::csm::{exact_csm, psd_root, CrossSpectralMatrix, Provenance};
use crate::rng::{complex_normal, substream};
use crate::scene::{ArrayGeometry, SourceScene};
use crate::{Error, Frequency, MediumParams, Result, C64};

/// `S` realisations of the microphone pressure vector, stored as the
/// columns of an `M x S` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub data: DMatrix<C64>,
    pub freq: Frequency,
    pub seed: u64,
}

impl SnapshotSet {
    pub fn new(data: DMatrix<C64>, freq: Frequency, seed: u64) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::Invalid("a snapshot set needs S >= 1".into()));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("snapshot data".into()));
        }
        Ok(Self { data, freq, seed })
    }

    pub fn count(&self) -> usize {
        self.data.ncols()
    }
}

/// Draws circular complex Gaussian snapshots with covariance equal to the
/// exact CSM, `p_s = L ξ_s` with `L L* = C` and `ξ_s ~ CN(0, I_M)`; this is
/// the law of `sum_c sqrt(q(z_c) Δv) ξ_{c,s} g(z_c)` at `M x M` cost.
/// Snapshot `s` uses substream `s` of `seed`, so the output does not
/// depend on the number of worker threads.
pub fn synthesize_snapshots(
    scene: &SourceScene,
    array: &ArrayGeometry,
    freq: &Frequency,
    medium: &MediumParams,
    src_spacing: f64,
    count: usize,
    seed: u64,
) -> Result<SnapshotSet> {
    if count == 0 {
        return Err(Error::Invalid("snapshot count must be >= 1".into()));
    }
    let root = psd_root(&exact_csm(scene, array, freq, medium, src_spacing)?.entries);
    let n = array.len();
    let mut xi = DMatrix::<C64>::zeros(n, count);
    xi.as_mut_slice().par_chunks_mut(n.max(1)).enumerate().for_each(|(s, col)| {
        let mut rng = substream(seed, s as u64);
        for v in col.iter_mut() {
            *v = complex_normal(&mut rng);
        }
    });
    SnapshotSet::new(&root * &xi, *freq, seed)
}

/// `(1/S) sum_s p_s p_s*`.
pub fn sample_csm(snapshots: &SnapshotSet) -> Result<CrossSpectralMatrix> {
    let p = &snapshots.data;
    let s = p.ncols();
    let c = (p * p.adjoint()) / C64::new(s as f64, 0.0);
    CrossSpectralMatrix::new(snapshots.freq, c, Provenance::Snapshot { count: s, seed: snapshots.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::steering_vector;
    use crate::scene::{make_array, ArraySpec, Primitive, Shape};

    fn setup() -> (ArrayGeometry, MediumParams, Frequency) {
        let array = make_array(&ArraySpec::Spiral { count: 12, radius: 0.2, turns: 2.0 }, 3).unwrap();
        let medium = MediumParams::new(345.0, 0.125, 3).unwrap();
        let f = medium.wavenumber(2500.0).unwrap();
        (array, medium, f)
    }

    #[test]
    fn zero_scene_gives_zero_snapshots() {
        let (array, medium, f) = setup();
        let s = synthesize_snapshots(&SourceScene::empty(3), &array, &f, &medium, 0.01, 5, 1).unwrap();
        assert!(s.data.iter().all(|v| *v == C64::new(0.0, 0.0)));
        let c = sample_csm(&s).unwrap();
        assert!(c.entries.iter().all(|v| *v == C64::new(0.0, 0.0)));
        assert!(synthesize_snapshots(&SourceScene::empty(3), &array, &f, &medium, 0.01, 0, 1).is_err());
    }

    #[test]
    fn single_cell_snapshots_are_parallel_to_the_steering_vector() {
        let (array, medium, f) = setup();
        let scene = SourceScene::new(
            3,
            vec![Primitive { shape: Shape::PointCell { center: [0.0, 0.05, 0.5], size: 0.01 }, power: 1.0 }],
        )
        .unwrap();
        let s = synthesize_snapshots(&scene, &array, &f, &medium, 0.01, 8, 3).unwrap();
        let g = steering_vector(&nalgebra::Vector3::new(0.0, 0.05, 0.5), &array, &f, &medium).unwrap().values;
        for col in s.data.column_iter() {
            let coef = g.dotc(&col) / g.dotc(&g);
            let resid = col - &g * coef;
            assert!(resid.norm() <= 1e-12 * col.norm());
        }
        let one = sample_csm(&SnapshotSet::new(s.data.columns(0, 1).into_owned(), f, 3).unwrap()).unwrap();
        let p = s.data.column(0);
        assert!((&one.entries - p * p.adjoint()).norm() <= 1e-15 * one.entries.norm());
    }

    #[test]
    fn sample_csm_is_deterministic_and_consistent() {
        let (array, medium, f) = setup();
        let scene = SourceScene::default_two_disk();
        let a = synthesize_snapshots(&scene, &array, &f, &medium, 0.01, 64, 9).unwrap();
        let b = synthesize_snapshots(&scene, &array, &f, &medium, 0.01, 64, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_csm(&a).unwrap();
        c.check_invariants().unwrap();
        let exact = exact_csm(&scene, &array, &f, &medium, 0.01).unwrap();
        // Mean over R seeds converges like 1/sqrt(R S): E||Ĉ - C||_F^2 = tr(C)^2 / (R S).
        let reps = 16;
        let mut mean = DMatrix::<C64>::zeros(12, 12);
        for r in 0..reps {
            let s = synthesize_snapshots(&scene, &array, &f, &medium, 0.01, 64, 100 + r).unwrap();
            mean += sample_csm(&s).unwrap().entries;
        }
        mean /= C64::new(reps as f64, 0.0);
        let err = (&mean - &exact.entries).norm();
        let sigma = exact.entries.trace().re / ((reps * 64) as f64).sqrt();
        assert!(err < 3.0 * sigma, "{err} vs 3 sigma = {}", 3.0 * sigma);
    }
}
