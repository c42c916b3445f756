//! The n-functional calculus of a decomposed tuple, its spectral projections,
//! Monte-Carlo entries of the spectral n-measure and convergence runs.

use alloc::format;
use alloc::vec::Vec;

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::haar::{HaarSampler, McConfig};
use crate::matrix::{frob, op_norm, real, CMatrix, C64};
use crate::polynomial::{eval_star_polynomial, StarPolynomial};
use crate::star_algebra::MatTuple;

/// Tolerance of the direct-versus-decomposed cross-check.
const CROSS_CHECK: f64 = 1e-8;

/// One `n x n` value per spectrum class, attached to the class
/// representatives it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTable {
    pub values: Vec<CMatrix>,
    pub representatives: Vec<MatTuple>,
}

impl OrbitTable {
    /// Table on the classes of `dec`; values must be square of the class size.
    pub fn new(dec: &Decomposition, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != dec.classes.len() {
            return Err(Error::TableMismatch(format!(
                "{} values for {} classes",
                values.len(),
                dec.classes.len()
            )));
        }
        for (i, (v, c)) in values.iter().zip(&dec.classes).enumerate() {
            if v.shape() != (c.d, c.d) {
                return Err(Error::TableMismatch(format!("value {i} has shape {:?}, class has size {}", v.shape(), c.d)));
            }
            crate::matrix::check_finite(v)?;
        }
        Ok(Self { values, representatives: dec.classes.clone() })
    }

    pub fn from_fn<F: FnMut(usize, &MatTuple) -> CMatrix>(dec: &Decomposition, mut f: F) -> Result<Self> {
        let values = dec.classes.iter().enumerate().map(|(i, c)| f(i, c)).collect();
        Self::new(dec, values)
    }

    /// The coordinate table `p_j`: each class maps to its `j`-th generator.
    pub fn coordinate(dec: &Decomposition, j: usize) -> Result<Self> {
        if dec.classes.first().is_some_and(|c| j >= c.k()) {
            return Err(Error::IndexOutOfRange { index: j, bound: dec.source.k() });
        }
        Self::from_fn(dec, |_, c| c.gens[j].clone())
    }

    pub fn unit(dec: &Decomposition) -> Result<Self> {
        Self::from_fn(dec, |_, c| CMatrix::identity(c.d, c.d))
    }

    pub fn zero(dec: &Decomposition) -> Result<Self> {
        Self::from_fn(dec, |_, c| CMatrix::zeros(c.d, c.d))
    }

    fn same_classes(&self, other: &Self) -> Result<()> {
        if self.representatives != other.representatives {
            return Err(Error::TableMismatch("tables belong to different representatives".into()));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_classes(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self { values, representatives: self.representatives.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_classes(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { values, representatives: self.representatives.clone() })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect(), representatives: self.representatives.clone() }
    }

    pub fn adjoint(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.adjoint()).collect(), representatives: self.representatives.clone() }
    }

    /// `max_i ||F_i||_op`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(op_norm).fold(0.0, f64::max)
    }
}

fn require_homogeneous(dec: &Decomposition) -> Result<()> {
    if !dec.classes.is_empty() && dec.homogeneous_dim().is_none() {
        return Err(Error::NotNHomogeneous {
            n: dec.classes[0].d,
            reason: format!("class dimensions {:?}", dec.class_dims()),
        });
    }
    Ok(())
}

fn check_table(table: &OrbitTable, dec: &Decomposition) -> Result<()> {
    if table.representatives != dec.classes {
        return Err(Error::TableMismatch("table was built for different class representatives".into()));
    }
    Ok(())
}

/// `v blockdiag(W_b F_{class(b)} W_b*, 0) v*`.
fn assemble_values(dec: &Decomposition, values: &[CMatrix]) -> CMatrix {
    let inner = dec.assemble(|b| &b.aligner * &values[b.class_id] * b.aligner.adjoint());
    &dec.v * inner * dec.v.adjoint()
}

/// The calculus applied to an orbit table.
pub fn calc_table(table: &OrbitTable, dec: &Decomposition) -> Result<CMatrix> {
    require_homogeneous(dec)?;
    check_table(table, dec)?;
    Ok(assemble_values(dec, &table.values))
}

/// The calculus applied to a *-polynomial, cross-checked against direct
/// evaluation at the source tuple. A constant term acts as the unit of the
/// algebra, which is the projection onto the nonzero blocks.
pub fn calc_polynomial(p: &StarPolynomial, dec: &Decomposition) -> Result<CMatrix> {
    require_homogeneous(dec)?;
    let values = dec
        .classes
        .iter()
        .map(|c| eval_star_polynomial(p, c))
        .collect::<Result<Vec<_>>>()?;
    let via = assemble_values(dec, &values);
    let mut direct = eval_star_polynomial(p, &dec.source)?;
    let c0 = p.constant_term();
    if c0 != real(0.0) {
        let d = dec.source.d;
        direct -= (CMatrix::identity(d, d) - support_projection(dec)) * c0;
    }
    let diff = frob(&(&via - &direct));
    if diff > CROSS_CHECK * (1.0 + frob(&direct)) {
        return Err(Error::NumericalFailure(format!(
            "calculus through the decomposition differs from direct evaluation by {diff:.3e}"
        )));
    }
    Ok(via)
}

/// Either form of calculus input.
#[derive(Debug, Clone, PartialEq)]
pub enum CalcInput {
    Polynomial(StarPolynomial),
    Table(OrbitTable),
}

pub fn calc(f: &CalcInput, dec: &Decomposition) -> Result<CMatrix> {
    match f {
        CalcInput::Polynomial(p) => calc_polynomial(p, dec),
        CalcInput::Table(t) => calc_table(t, dec),
    }
}

/// Applies the coordinate tables: recovers the source generators.
pub fn reconstruct_generators(dec: &Decomposition) -> Result<MatTuple> {
    let gens = (0..dec.source.k())
        .map(|j| calc_table(&OrbitTable::coordinate(dec, j)?, dec))
        .collect::<Result<Vec<_>>>()?;
    MatTuple::new(gens)
}

/// Projection onto the sum of all nonzero blocks.
pub fn support_projection(dec: &Decomposition) -> CMatrix {
    let d = dec.source.d;
    let mut p = CMatrix::zeros(d, d);
    for b in &dec.blocks {
        p += &b.basis * b.basis.adjoint();
    }
    p
}

/// `F(s)`: projection onto the blocks whose class lies in `s`.
pub fn invariant_spectral_projection(dec: &Decomposition, s: &[usize]) -> Result<CMatrix> {
    for &i in s {
        if i >= dec.classes.len() {
            return Err(Error::IndexOutOfRange { index: i, bound: dec.classes.len() });
        }
    }
    let d = dec.source.d;
    let mut p = CMatrix::zeros(d, d);
    for b in dec.blocks.iter().filter(|b| s.contains(&b.class_id)) {
        p += &b.basis * b.basis.adjoint();
    }
    Ok(p)
}

/// A Borel set of the orbit of a class representative, described through
/// the unitary `u` of the point `u.x`.
pub enum Region<'a> {
    WholeOrbit,
    Empty,
    Predicate(&'a dyn Fn(&CMatrix) -> bool),
}

/// Entry `E_jk(A)` (0-based `j`, `k`) of the spectral n-measure on a subset
/// `A` of the orbit of class `class`:
/// `sum_b J_b (int chi_A(u.x) u* e_k e_j^T u du) J_b*` with `J_b` the block
/// isometry composed with its aligner. The whole orbit is evaluated exactly.
pub fn n_measure_entry_mc(
    dec: &Decomposition,
    class: usize,
    j: usize,
    k: usize,
    region: Region<'_>,
    mc: McConfig,
) -> Result<CMatrix> {
    mc.check()?;
    require_homogeneous(dec)?;
    let c = dec.classes.get(class).ok_or(Error::IndexOutOfRange { index: class, bound: dec.classes.len() })?;
    let n = c.d;
    for idx in [j, k] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, bound: n });
        }
    }
    let d = dec.source.d;
    let inner = match region {
        Region::Empty => return Ok(CMatrix::zeros(d, d)),
        Region::WholeOrbit => {
            if j != k {
                return Ok(CMatrix::zeros(d, d));
            }
            CMatrix::identity(n, n) / real(n as f64)
        }
        Region::Predicate(inside) => {
            let sampler = HaarSampler::new(n, mc.seed);
            let mut acc = CMatrix::zeros(n, n);
            for i in 0..mc.samples as u64 {
                let u = sampler.unitary_at(i);
                if inside(&u) {
                    // u* e_k e_j^T u = (row k of u)* (row j of u).
                    acc += u.row(k).adjoint() * u.row(j);
                }
            }
            acc / real(mc.samples as f64)
        }
    };
    let mut out = CMatrix::zeros(d, d);
    for b in dec.blocks_of_class(class) {
        let jb = &b.basis * &b.aligner;
        out += &jb * &inner * jb.adjoint();
    }
    Ok(out)
}

/// Residuals `||(calc(table_m) - calc(f)) h||` of a sequence of tables.
pub fn dominated_convergence_run(
    dec: &Decomposition,
    tables: &[OrbitTable],
    f: &OrbitTable,
    h: &[C64],
) -> Result<Vec<f64>> {
    if h.len() != dec.source.d {
        return Err(Error::DimensionMismatch(format!("vector of length {} for dimension {}", h.len(), dec.source.d)));
    }
    let bound = tables.iter().map(|t| t.sup_norm()).fold(f.sup_norm(), f64::max);
    if !bound.is_finite() {
        return Err(Error::TableMismatch("tables are not uniformly bounded".into()));
    }
    let hv = nalgebra::DVector::from_column_slice(h);
    let limit = calc_table(f, dec)?;
    tables
        .iter()
        .map(|t| Ok(((calc_table(t, dec)? - &limit) * &hv).norm()))
        .collect()
}

/// Verifies the calculus is isometric on a table: `||calc(f)|| = max_i ||F_i||`.
pub fn isometry_defect(table: &OrbitTable, dec: &Decomposition) -> Result<f64> {
    let value = calc_table(table, dec)?;
    Ok((op_norm(&value) - table.sup_norm()).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::instances::{random_gaussian, random_homogeneous};
    use crate::matrix::{diag, from_real_rows, identity, Tolerance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paulis() -> MatTuple {
        MatTuple::new(alloc::vec![from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]), diag(&[1.0, -1.0])]).unwrap()
    }

    fn sample_dec(seed: u64, zero_dim: usize) -> Decomposition {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_homogeneous(&mut rng, 2, 2, 2, 2, zero_dim);
        decompose(&inst.tuple, &Tolerance::default(), seed).unwrap()
    }

    fn random_table(dec: &Decomposition, rng: &mut ChaCha8Rng) -> OrbitTable {
        OrbitTable::from_fn(dec, |_, c| random_gaussian(rng, c.d, c.d)).unwrap()
    }

    #[test]
    fn calc_examples() {
        let dec = sample_dec(1, 1);
        let t1 = calc_table(&OrbitTable::coordinate(&dec, 0).unwrap(), &dec).unwrap();
        assert!(frob(&(t1 - &dec.source.gens[0])) < 1e-9);
        let unit = calc_table(&OrbitTable::unit(&dec).unwrap(), &dec).unwrap();
        assert!(frob(&(&unit - support_projection(&dec))) < 1e-12);
        assert!(frob(&(&unit * &unit - &unit)) < 1e-10);
        assert!(frob(&(unit - identity(dec.source.d))) > 0.5);
        let zero = calc_table(&OrbitTable::zero(&dec).unwrap(), &dec).unwrap();
        assert_eq!(frob(&zero), 0.0);
    }

    #[test]
    fn polynomial_paths_agree() {
        let dec = sample_dec(2, 1);
        for text in ["z1", "z1*z2' - 2*z2*z2", "3 + z1*z1'", "(1+2i)*z2'*z1*z2"] {
            let p = StarPolynomial::parse(text).unwrap();
            let via = calc_polynomial(&p, &dec).unwrap();
            if !p.is_unital() {
                let direct = eval_star_polynomial(&p, &dec.source).unwrap();
                assert!(frob(&(via - direct)) < 1e-8);
            }
        }
    }

    #[test]
    fn table_mismatch_is_rejected() {
        let dec = sample_dec(3, 0);
        let other = sample_dec(4, 0);
        let t = OrbitTable::unit(&other).unwrap();
        assert!(matches!(calc_table(&t, &dec), Err(Error::TableMismatch(_))));
        assert!(OrbitTable::new(&dec, alloc::vec![]).is_err());
    }

    #[test]
    fn reconstruction_examples() {
        let tol = Tolerance::default();
        let dec = decompose(&paulis(), &tol, 0).unwrap();
        let r = reconstruct_generators(&dec).unwrap();
        assert!(r.distance(&paulis()) < 1e-10);
        let zero = MatTuple::new(alloc::vec![CMatrix::zeros(2, 2)]).unwrap();
        let dec = decompose(&zero, &tol, 0).unwrap();
        assert_eq!(reconstruct_generators(&dec).unwrap(), zero);
    }

    #[test]
    fn projection_examples() {
        let tol = Tolerance::default();
        let dec = decompose(&MatTuple::new(alloc::vec![diag(&[1.0, 2.0])]).unwrap(), &tol, 0).unwrap();
        let all: Vec<usize> = (0..dec.classes.len()).collect();
        assert!(frob(&(invariant_spectral_projection(&dec, &all).unwrap() - identity(2))) < 1e-12);
        assert_eq!(invariant_spectral_projection(&dec, &[]).unwrap(), CMatrix::zeros(2, 2));
        let one = dec.classes.iter().position(|c| (c.gens[0][(0, 0)].re - 1.0).abs() < 1e-9).unwrap();
        let p = invariant_spectral_projection(&dec, &[one]).unwrap();
        assert!(frob(&(p - diag(&[1.0, 0.0]))) < 1e-12);
        assert!(invariant_spectral_projection(&dec, &[5]).is_err());
    }

    #[test]
    fn homomorphism_laws() {
        let dec = sample_dec(5, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let f = random_table(&dec, &mut rng);
            let g = random_table(&dec, &mut rng);
            let cf = calc_table(&f, &dec).unwrap();
            let cg = calc_table(&g, &dec).unwrap();
            let cfg = calc_table(&f.mul(&g).unwrap(), &dec).unwrap();
            assert!(frob(&(cfg - &cf * &cg)) < 1e-8);
            assert!(frob(&(calc_table(&f.adjoint(), &dec).unwrap() - cf.adjoint())) < 1e-8);
            assert!(isometry_defect(&f, &dec).unwrap() < 1e-8);
            let p = invariant_spectral_projection(&dec, &[0]).unwrap();
            assert!(frob(&(&cf * &p - &p * &cf)) < 1e-8);
        }
    }

    #[test]
    fn measure_entries() {
        let dec = sample_dec(6, 0);
        let mc = McConfig::new(2000, 3);
        let f0 = invariant_spectral_projection(&dec, &[0]).unwrap();
        let off = n_measure_entry_mc(&dec, 0, 0, 1, Region::WholeOrbit, mc).unwrap();
        assert_eq!(frob(&off), 0.0);
        let diag_entry = n_measure_entry_mc(&dec, 0, 1, 1, Region::WholeOrbit, mc).unwrap();
        assert!(frob(&(diag_entry - f0 / real(2.0))) < 1e-12);
        assert_eq!(frob(&n_measure_entry_mc(&dec, 0, 0, 0, Region::Empty, mc).unwrap()), 0.0);
        let half = |u: &CMatrix| u[(0, 0)].re > 0.0;
        let e01 = n_measure_entry_mc(&dec, 0, 0, 1, Region::Predicate(&half), mc).unwrap();
        let e10 = n_measure_entry_mc(&dec, 0, 1, 0, Region::Predicate(&half), mc).unwrap();
        assert!(frob(&(e01.adjoint() - e10)) < 1e-12);
        let small = McConfig::new(10, 3);
        assert!(matches!(n_measure_entry_mc(&dec, 0, 0, 0, Region::WholeOrbit, small), Err(Error::McBudgetTooSmall { .. })));
    }

    #[test]
    fn dominated_convergence() {
        let dec = sample_dec(7, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_table(&dec, &mut rng);
        let unit = OrbitTable::unit(&dec).unwrap();
        let h: Vec<C64> = (0..dec.source.d).map(|i| real(1.0 + i as f64)).collect();
        let hn = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let same = dominated_convergence_run(&dec, &[f.clone(), f.clone()], &f, &h).unwrap();
        assert!(same.iter().all(|&r| r == 0.0));
        let tables: Vec<OrbitTable> = (1..=10).map(|m| f.add(&unit.scale(real(1.0 / m as f64))).unwrap()).collect();
        let res = dominated_convergence_run(&dec, &tables, &f, &h).unwrap();
        for (m, r) in res.iter().enumerate() {
            assert!(*r <= hn / (m + 1) as f64 + 1e-10);
        }
        let alternating: Vec<OrbitTable> =
            (0..10).map(|m| if m % 2 == 0 { f.clone() } else { f.add(&unit).unwrap() }).collect();
        let res = dominated_convergence_run(&dec, &alternating, &f, &h).unwrap();
        assert!(res[9] > 0.1);
    }
}
