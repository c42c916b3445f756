//! Finite n-spaces: disjoint unions of free `U_n`-orbits, their equivariant
//! matrix functions, ideals, point evaluations, morphisms and n-measures.

use alloc::format;
use alloc::vec::Vec;

use crate::decomposition::{fix_phase, homogeneity_verdict, spectrum_of, NSpectrum};
use crate::error::{Error, Result};
use crate::haar::{HaarSampler, McConfig};
use crate::matrix::{frob, op_norm, real, CMatrix, Tolerance, C64};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use crate::polynomial::{eval_star_polynomial, StarPolynomial};
use crate::star_algebra::MatTuple;
use crate::subspace::SubspaceBasis;

/// Residual allowed when checking user-supplied *-homomorphisms.
const HOM_TOL: f64 = 1e-6;

/// `orbits` free orbits of `U_n`; orbit `i` has an implicit base point `x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FiniteNSpace {
    pub n: usize,
    pub orbits: usize,
}

impl FiniteNSpace {
    pub fn new(n: usize, orbits: usize) -> Self {
        assert!(n >= 1, "n-spaces need n >= 1");
        Self { n, orbits }
    }

    pub fn check_orbit(&self, orbit: usize) -> Result<()> {
        if orbit >= self.orbits {
            return Err(Error::IndexOutOfRange { index: orbit, bound: self.orbits });
        }
        Ok(())
    }

    /// `dim C*(X,.) = m n^2`.
    pub fn algebra_dim(&self) -> usize {
        self.orbits * self.n * self.n
    }

    /// The matrix unit `E^i_ab` (value `e_a e_b^T` on orbit `i`, zero elsewhere).
    pub fn matrix_unit(&self, i: usize, a: usize, b: usize) -> EquivariantElement {
        let mut f = EquivariantElement::zero(*self);
        f.values[i][(a, b)] = real(1.0);
        f
    }

    /// Matrix units ordered by `(orbit, row, column)`.
    pub fn standard_basis(&self) -> Vec<EquivariantElement> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.algebra_dim());
        for i in 0..self.orbits {
            for a in 0..n {
                for b in 0..n {
                    out.push(self.matrix_unit(i, a, b));
                }
            }
        }
        out
    }
}

/// An element of `C*(X,.)`: its value at each orbit's base point.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantElement {
    pub space: FiniteNSpace,
    pub values: Vec<CMatrix>,
}

impl EquivariantElement {
    pub fn new(space: FiniteNSpace, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != space.orbits {
            return Err(Error::SpaceMismatch(format!("{} values for {} orbits", values.len(), space.orbits)));
        }
        for v in &values {
            if v.shape() != (space.n, space.n) {
                return Err(Error::SpaceMismatch(format!("value of shape {:?} in a {}-space", v.shape(), space.n)));
            }
            crate::matrix::check_finite(v)?;
        }
        Ok(Self { space, values })
    }

    pub fn zero(space: FiniteNSpace) -> Self {
        Self { space, values: (0..space.orbits).map(|_| CMatrix::zeros(space.n, space.n)).collect() }
    }

    pub fn unit(space: FiniteNSpace) -> Self {
        Self { space, values: (0..space.orbits).map(|_| CMatrix::identity(space.n, space.n)).collect() }
    }

    fn zip<F: Fn(&CMatrix, &CMatrix) -> CMatrix>(&self, other: &Self, f: F) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("elements live on different spaces".into()));
        }
        Ok(Self { space: self.space, values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect() })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { space: self.space, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space, values: self.values.iter().map(|v| v.adjoint()).collect() }
    }

    /// Sup norm `max_i ||F_i||_op`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// Values stacked vertically, the layout used for subspace computations.
    pub fn stacked(&self) -> CMatrix {
        let n = self.space.n;
        let mut m = CMatrix::zeros(self.space.orbits * n, n);
        for (i, v) in self.values.iter().enumerate() {
            m.view_mut((i * n, 0), (n, n)).copy_from(v);
        }
        m
    }

    pub fn from_stacked(space: FiniteNSpace, m: &CMatrix) -> Self {
        let n = space.n;
        let values = (0..space.orbits).map(|i| m.view((i * n, 0), (n, n)).into_owned()).collect();
        Self { space, values }
    }
}

/// The point `u.x_orbit`; `u` is normalised so that the first nonzero entry of
/// its first column is real positive (points only depend on `u` modulo phase).
#[derive(Debug, Clone, PartialEq)]
pub struct PointRef {
    pub orbit: usize,
    pub u: CMatrix,
}

impl PointRef {
    pub fn new(orbit: usize, u: CMatrix) -> Self {
        Self { orbit, u: fix_phase(&u) }
    }

    pub fn base(space: &FiniteNSpace, orbit: usize) -> Self {
        Self { orbit, u: CMatrix::identity(space.n, space.n) }
    }
}

/// `f(u.x) = u f(x) u*`.
pub fn eval_point(f: &EquivariantElement, p: &PointRef) -> Result<CMatrix> {
    f.space.check_orbit(p.orbit)?;
    Ok(&p.u * &f.values[p.orbit] * p.u.adjoint())
}

/// An ideal of `C*(X,.)` with its vanishing set.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealReport {
    pub vanishing_set: Vec<usize>,
    pub ideal_basis: SubspaceBasis,
}

/// The closed two-sided ideal generated by `gens` and the orbits where all
/// generators vanish; asserts the ideal equals `I_A` for that set `A`.
pub fn ideal_from_generators(gens: &[EquivariantElement], space: FiniteNSpace, tol: &Tolerance) -> Result<IdealReport> {
    for g in gens {
        if g.space != space {
            return Err(Error::SpaceMismatch("generator lives on a different space".into()));
        }
    }
    let n = space.n;
    let scale = gens.iter().map(|g| frob(&g.stacked())).fold(0.0, f64::max);
    let vanishing_set: Vec<usize> = (0..space.orbits)
        .filter(|&i| gens.iter().all(|g| frob(&g.values[i]) <= tol.eq_tol * scale))
        .collect();
    // Products E^i_ab g E^i_ce over all matrix units of the same orbit,
    // normalised by the generator scale so that the rank cut is relative.
    let mut ideal_basis = SubspaceBasis::empty(space.orbits * n, n);
    let units = space.standard_basis();
    for g in gens {
        let s = frob(&g.stacked());
        if s == 0.0 {
            continue;
        }
        let mut products = Vec::new();
        for (ix, x) in units.iter().enumerate() {
            let xg = x.mul(g)?;
            let orbit = ix / (n * n);
            for y in &units[orbit * n * n..(orbit + 1) * n * n] {
                products.push(crate::matrix::flatten(&xg.mul(y)?.stacked()) / real(s));
            }
        }
        ideal_basis.extend(&CMatrix::from_columns(&products), tol)?;
    }
    let expected = ideal_of_set(space, &vanishing_set)?;
    if !ideal_basis.same_subspace(&expected, tol) {
        return Err(Error::NumericalFailure(format!(
            "generated ideal has dimension {}, expected {}",
            ideal_basis.dim(),
            expected.dim()
        )));
    }
    Ok(IdealReport { vanishing_set, ideal_basis })
}

/// `I_A`: all elements vanishing on the orbits in `a`.
pub fn ideal_of_set(space: FiniteNSpace, a: &[usize]) -> Result<SubspaceBasis> {
    for &i in a {
        space.check_orbit(i)?;
    }
    let n = space.n;
    let keep: Vec<usize> = (0..space.orbits).filter(|i| !a.contains(i)).collect();
    let ambient = space.orbits * n * n;
    let mut q = CMatrix::zeros(ambient, keep.len() * n * n);
    for (col, idx) in keep.iter().flat_map(|&i| (0..n * n).map(move |e| i * n * n + e)).enumerate() {
        q[(idx, col)] = real(1.0);
    }
    Ok(SubspaceBasis::from_orthonormal(space.orbits * n, n, q))
}

/// Orbits on which every element of the ideal vanishes.
pub fn vanishing_set(ideal: &SubspaceBasis, space: FiniteNSpace, tol: &Tolerance) -> Vec<usize> {
    let n = space.n;
    (0..space.orbits)
        .filter(|&i| {
            let rows = ideal.matrix().rows(i * n * n, n * n);
            frob(&rows.into_owned()) <= tol.eq_tol * (ideal.dim().max(1) as f64).sqrt()
        })
        .collect()
}

/// Classification of a representation of `C*(X,.)` on `C^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum RepClass {
    Zero,
    Point(PointRef),
}

fn check_star_hom(images: &[CMatrix], space: FiniteNSpace, target: usize) -> Result<f64> {
    let n = space.n;
    if images.len() != space.algebra_dim() {
        return Err(Error::SpaceMismatch(format!("{} images for a basis of size {}", images.len(), space.algebra_dim())));
    }
    for m in images {
        if m.shape() != (target, target) {
            return Err(Error::DimensionMismatch(format!("image of shape {:?}", m.shape())));
        }
        crate::matrix::check_finite(m)?;
    }
    let scale = images.iter().map(frob).fold(1.0, f64::max);
    let idx = |i: usize, a: usize, b: usize| i * n * n + a * n + b;
    let mut worst: f64 = 0.0;
    for i in 0..space.orbits {
        for a in 0..n {
            for b in 0..n {
                let x = &images[idx(i, a, b)];
                worst = worst.max(frob(&(x.adjoint() - &images[idx(i, b, a)])));
                for j in 0..space.orbits {
                    for c in 0..n {
                        for e in 0..n {
                            let prod = x * &images[idx(j, c, e)];
                            let expected = if i == j && b == c { images[idx(i, a, e)].clone() } else { CMatrix::zeros(target, target) };
                            worst = worst.max(frob(&(prod - expected)));
                        }
                    }
                }
            }
        }
    }
    if worst > HOM_TOL * scale * scale {
        return Err(Error::NotAStarHom { residual: worst });
    }
    Ok(scale)
}

/// Finds the point `u.x_i` with `pi(f) = f(u.x_i)`, given the images of the
/// standard basis under a *-homomorphism `pi` into `M_n`.
pub fn classify_matrix_rep(images: &[CMatrix], space: FiniteNSpace, _tol: &Tolerance) -> Result<RepClass> {
    let n = space.n;
    let scale = check_star_hom(images, space, n)?;
    let idx = |i: usize, a: usize, b: usize| i * n * n + a * n + b;
    let live: Vec<usize> = (0..space.orbits)
        .filter(|&i| (0..n).any(|a| frob(&images[idx(i, a, a)]) > HOM_TOL * scale))
        .collect();
    let i = match live.as_slice() {
        [] => return Ok(RepClass::Zero),
        [i] => *i,
        _ => return Err(Error::NumericalFailure(format!("representation lives on orbits {live:?}"))),
    };
    // u e_1 spans the range of pi(E_11); u e_a = pi(E_a1) u e_1.
    let e11 = crate::matrix::hermitian_part(&images[idx(i, 0, 0)]);
    let eig = crate::matrix::herm_eig_unchecked(&e11)?;
    let top = eig.vectors.column(n - 1).into_owned();
    let mut u = CMatrix::zeros(n, n);
    for a in 0..n {
        let col = &images[idx(i, a, 0)] * &top;
        u.set_column(a, &col);
    }
    let svd = crate::matrix::svd(&u)?;
    let u = svd.u * svd.v.adjoint();
    let point = PointRef::new(i, u);
    let mut residual: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let f = space.matrix_unit(i, a, b);
            residual = residual.max(frob(&(eval_point(&f, &point)? - &images[idx(i, a, b)])));
        }
    }
    if residual > HOM_TOL * scale {
        return Err(Error::NumericalFailure(format!("no point evaluation matches (residual {residual:.3e})")));
    }
    Ok(RepClass::Point(point))
}

/// Images of the standard basis under evaluation at `p`.
pub fn point_evaluation_images(space: FiniteNSpace, p: &PointRef) -> Result<Vec<CMatrix>> {
    space.standard_basis().iter().map(|f| eval_point(f, p)).collect()
}

/// The finite-orbit form of a morphism `C*(X,.) -> C*(Y,.)`: the Y-orbits in
/// the domain `U` of the point map, and for each the point of X it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Morphism {
    /// `(y_orbit, image point u.x_i)` for orbits in `U`.
    pub mapped: Vec<(usize, PointRef)>,
    /// Y-orbits outside `U`.
    pub unmapped: Vec<usize>,
}

/// Recovers the point map of a *-homomorphism given on the standard basis of
/// `C*(X,.)` as elements of `C*(Y,.)`.
pub fn extract_morphism(
    images: &[EquivariantElement],
    x: FiniteNSpace,
    y: FiniteNSpace,
    tol: &Tolerance,
) -> Result<Morphism> {
    if x.n != y.n {
        return Err(Error::SpaceMismatch(format!("{}-space mapped into a {}-space", x.n, y.n)));
    }
    for f in images {
        if f.space != y {
            return Err(Error::SpaceMismatch("image lives on a different space".into()));
        }
    }
    let mut mapped = Vec::new();
    let mut unmapped = Vec::new();
    for j in 0..y.orbits {
        let at_j: Vec<CMatrix> = images.iter().map(|f| f.values[j].clone()).collect();
        match classify_matrix_rep(&at_j, x, tol)? {
            RepClass::Zero => unmapped.push(j),
            RepClass::Point(p) => mapped.push((j, p)),
        }
    }
    Ok(Morphism { mapped, unmapped })
}

/// The Gelfand picture of an n-homogeneous tuple: one orbit per spectrum
/// class, and the generator tables.
#[derive(Debug, Clone, PartialEq)]
pub struct GelfandTransform {
    pub space: FiniteNSpace,
    pub images: Vec<EquivariantElement>,
    pub spectrum: NSpectrum,
}

pub fn gelfand_transform(t: &MatTuple, n: usize, tol: &Tolerance, seed: u64) -> Result<GelfandTransform> {
    let report = homogeneity_verdict(t, n, tol, seed)?;
    let spectrum = spectrum_of(&report)?;
    let space = FiniteNSpace::new(n, spectrum.points.len());
    let images = (0..t.k())
        .map(|j| EquivariantElement::new(space, spectrum.points.iter().map(|p| p.gens[j].clone()).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(GelfandTransform { space, images, spectrum })
}

/// `| ||p(T)|| - max_i ||p(x_i)|| |` for a polynomial without constant term.
pub fn gelfand_isometry_defect(t: &MatTuple, g: &GelfandTransform, p: &StarPolynomial) -> Result<f64> {
    let direct = op_norm(&eval_star_polynomial(p, t)?);
    let mut sup: f64 = 0.0;
    for point in &g.spectrum.points {
        sup = sup.max(op_norm(&eval_star_polynomial(p, point)?));
    }
    Ok((direct - sup).abs())
}

/// An atomic n-measure: pairing matrices `M_i`, one per orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct NMeasure {
    pub space: FiniteNSpace,
    pub pairing: Vec<CMatrix>,
}

/// The n-measure with `phi(f) = sum_i tr(F_i M_i)`: `(M_i)_ba = phi(E^i_ab)`.
pub fn represent_functional<F: Fn(&EquivariantElement) -> C64>(space: FiniteNSpace, phi: F) -> NMeasure {
    let n = space.n;
    let pairing = (0..space.orbits)
        .map(|i| CMatrix::from_fn(n, n, |b, a| phi(&space.matrix_unit(i, a, b))))
        .collect();
    NMeasure { space, pairing }
}

/// `int f dmu = sum_i tr(F_i M_i)`.
pub fn integrate_n_measure(f: &EquivariantElement, mu: &NMeasure) -> Result<C64> {
    if f.space != mu.space {
        return Err(Error::SpaceMismatch("element and measure live on different spaces".into()));
    }
    Ok(f.values.iter().zip(&mu.pairing).map(|(a, m)| (a * m).trace()).sum())
}

/// Monte-Carlo value of `int g dmu` for a possibly non-equivariant `g`:
/// `sum_i int tr(g(u.x_i) u M_i u*) du`.
pub fn integrate_sampled<G: Fn(&PointRef) -> CMatrix>(g: G, mu: &NMeasure, mc: McConfig) -> Result<C64> {
    mc.check()?;
    let sampler = HaarSampler::new(mu.space.n, mc.seed);
    let mut total = real(0.0);
    for (i, m) in mu.pairing.iter().enumerate() {
        let mut acc = real(0.0);
        for s in 0..mc.samples as u64 {
            let u = sampler.unitary_at(s);
            let value = g(&PointRef::new(i, u.clone()));
            acc += (value * &u * m * u.adjoint()).trace();
        }
        total += acc / real(mc.samples as f64);
    }
    Ok(total)
}
