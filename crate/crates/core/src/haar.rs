//! Haar sampling on the unitary group, the exact first-moment twirl and
//! Monte-Carlo equivariant averaging `f -> f^U`.

use alloc::format;

use nalgebra::QR;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{c64, real, CMatrix, C64};
use crate::nspace::{FiniteNSpace, PointRef};

/// Smallest Monte-Carlo budget accepted by the estimators.
pub const MIN_SAMPLES: usize = 1000;
pub const DEFAULT_SAMPLES: usize = 20_000;

/// Monte-Carlo settings: sample count and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::McBudgetTooSmall { samples: self.samples, minimum: MIN_SAMPLES });
        }
        Ok(())
    }
}

/// Acceptance radius `6 bound / sqrt(samples)` of a Monte-Carlo mean.
pub fn mc_radius(bound: f64, samples: usize) -> f64 {
    6.0 * bound / (samples as f64).sqrt()
}

/// Counter-based Haar sampler: draw `counter` of stream `seed` is a pure
/// function of `(n, seed, counter)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaarSampler {
    pub n: usize,
    pub seed: u64,
    pub counter: u64,
}

impl HaarSampler {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, counter: 0 }
    }

    /// The unitary at an explicit counter position; does not advance.
    pub fn unitary_at(&self, counter: u64) -> CMatrix {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(counter);
        haar_unitary_from_rng(&mut rng, self.n)
    }

    pub fn next_unitary(&mut self) -> CMatrix {
        let u = self.unitary_at(self.counter);
        self.counter += 1;
        u
    }
}

/// Draws the next Haar unitary from the sampler.
pub fn haar_unitary(s: &mut HaarSampler) -> CMatrix {
    s.next_unitary()
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * real(core::f64::consts::FRAC_1_SQRT_2)
}

/// Ginibre matrix orthonormalised by QR, with the columns rephased by the
/// diagonal of the triangular factor (plain QR is not Haar distributed).
pub fn haar_unitary_from_rng<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = QR::new(g);
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / real(norm) } else { real(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `(tr a / n) I`, the exact value of `\int U a U^{-1} dU`.
pub fn twirl_exact(a: &CMatrix) -> Result<CMatrix> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    if r == 0 {
        return Ok(a.clone());
    }
    Ok(CMatrix::identity(r, r) * (a.trace() / real(r as f64)))
}

/// Monte-Carlo estimate of `f^U` at the base point of `orbit`: the mean of
/// `U^{-1} g(U.x) U` over Haar draws. Draw `i` uses counter `i` of the seed,
/// so the estimate does not depend on how the range is partitioned.
pub fn equivariant_average<G>(g: G, space: &FiniteNSpace, orbit: usize, mc: McConfig) -> Result<CMatrix>
where
    G: Fn(&PointRef) -> CMatrix,
{
    mc.check()?;
    space.check_orbit(orbit)?;
    let n = space.n;
    let sampler = HaarSampler::new(n, mc.seed);
    let mut acc = CMatrix::zeros(n, n);
    for i in 0..mc.samples as u64 {
        let u = sampler.unitary_at(i);
        let p = PointRef::new(orbit, u.clone());
        let value = g(&p);
        if value.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("sampled value has shape {:?}", value.shape())));
        }
        acc += u.adjoint() * value * &u;
    }
    Ok(acc / real(mc.samples as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{diag, frob, from_real_rows, identity};

    #[test]
    fn one_dimensional_draw_is_a_phase() {
        let mut s = HaarSampler::new(1, 3);
        for _ in 0..10 {
            let u = s.next_unitary();
            assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn draws_are_unitary() {
        let mut s = HaarSampler::new(4, 9);
        for _ in 0..50 {
            let u = s.next_unitary();
            assert!(frob(&(u.adjoint() * &u - identity(4))) < 1e-12);
        }
    }

    #[test]
    fn draws_are_deterministic() {
        let a = HaarSampler::new(2, 42).unitary_at(0);
        let b = HaarSampler::new(2, 42).unitary_at(0);
        assert_eq!(a, b);
        let mut s = HaarSampler::new(2, 42);
        assert_eq!(s.next_unitary(), a);
        assert_ne!(s.next_unitary(), a);
    }

    #[test]
    fn phase_corrected_qr_has_zero_mean_entries() {
        // Without rephasing, U_11 would have a positive real mean.
        let s = HaarSampler::new(3, 1);
        let samples = 20_000;
        let mut mean = real(0.0);
        for i in 0..samples {
            mean += s.unitary_at(i)[(0, 0)];
        }
        mean /= real(samples as f64);
        assert!(mean.norm() < mc_radius(1.0, samples as usize));
    }

    #[test]
    fn twirl_examples() {
        assert_eq!(twirl_exact(&identity(2)).unwrap(), identity(2));
        assert_eq!(twirl_exact(&diag(&[1.0, 0.0])).unwrap(), identity(2) * real(0.5));
        let sx = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(twirl_exact(&sx).unwrap(), CMatrix::zeros(2, 2));
        assert!(matches!(twirl_exact(&CMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn conjugation_ignores_global_phase() {
        let u = HaarSampler::new(3, 2).unitary_at(0);
        let a = HaarSampler::new(3, 2).unitary_at(1);
        let v = &u * c64(0.3f64.cos(), 0.3f64.sin());
        let lhs = u.adjoint() * &a * &u;
        let rhs = v.adjoint() * &a * &v;
        assert!(frob(&(lhs - rhs)) < 1e-13);
    }

    #[test]
    fn averaging_examples() {
        let space = FiniteNSpace::new(2, 1);
        let mc = McConfig::new(20_000, 5);
        let a = from_real_rows(&[&[1.0, 2.0], &[0.5, -3.0]]);
        let est = equivariant_average(|_| a.clone(), &space, 0, mc).unwrap();
        let exact = twirl_exact(&a).unwrap();
        assert!(frob(&(est - exact)) <= mc_radius(frob(&a), mc.samples));

        let f = from_real_rows(&[&[0.2, 1.0], &[-1.0, 0.7]]);
        let est = equivariant_average(|p| &p.u * &f * p.u.adjoint(), &space, 0, mc).unwrap();
        assert!(frob(&(est - &f)) < 1e-10);

        let est = equivariant_average(|_| CMatrix::zeros(2, 2), &space, 0, mc).unwrap();
        assert_eq!(est, CMatrix::zeros(2, 2));

        let small = McConfig::new(999, 5);
        assert!(matches!(
            equivariant_average(|_| a.clone(), &space, 0, small),
            Err(Error::McBudgetTooSmall { .. })
        ));
        assert!(equivariant_average(|_| a.clone(), &space, 1, mc).is_err());
    }
}
