//! The *-algebra generated by a matrix tuple, its commutant, irreducibility
//! and unit membership.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::{check_finite, frob, CMatrix, Tolerance};
use crate::subspace::{nullspace, span_closure, SubspaceBasis};

/// A system `(T_1, ..., T_k)` of `d x d` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatTuple {
    pub d: usize,
    pub gens: Vec<CMatrix>,
}

impl MatTuple {
    pub fn new(gens: Vec<CMatrix>) -> Result<Self> {
        let first = gens.first().ok_or_else(|| Error::InvalidInput("tuple needs at least one generator".into()))?;
        let d = first.nrows();
        if d == 0 {
            return Err(Error::InvalidInput("generators must be at least 1x1".into()));
        }
        for (j, g) in gens.iter().enumerate() {
            if g.shape() != (d, d) {
                return Err(Error::InvalidInput(format!(
                    "generator {j} has shape {:?}, expected ({d}, {d})",
                    g.shape()
                )));
            }
            check_finite(g)?;
        }
        Ok(Self { d, gens })
    }

    pub fn k(&self) -> usize {
        self.gens.len()
    }

    /// Generators followed by their adjoints.
    pub fn with_adjoints(&self) -> Vec<CMatrix> {
        let mut all = self.gens.clone();
        all.extend(self.gens.iter().map(|g| g.adjoint()));
        all
    }

    /// Largest generator Frobenius norm.
    pub fn scale(&self) -> f64 {
        self.gens.iter().map(frob).fold(0.0, f64::max)
    }

    /// Compression `(V* T_j V)_j` onto the range of an isometry `v`.
    pub fn compress(&self, v: &CMatrix) -> MatTuple {
        MatTuple { d: v.ncols(), gens: self.gens.iter().map(|g| v.adjoint() * g * v).collect() }
    }

    /// Appends the identity as an extra generator (the unitisation).
    pub fn with_identity(&self) -> MatTuple {
        let mut gens = self.gens.clone();
        gens.push(CMatrix::identity(self.d, self.d));
        MatTuple { d: self.d, gens }
    }

    /// Maximal generator-wise Frobenius distance.
    pub fn distance(&self, other: &MatTuple) -> f64 {
        self.gens.iter().zip(&other.gens).map(|(a, b)| frob(&(a - b))).fold(0.0, f64::max)
    }
}

/// Orthonormal basis of the (non-unital) *-algebra generated by `t`: the span
/// of all words of length at least one in the generators and their adjoints.
pub fn word_span(t: &MatTuple, tol: &Tolerance) -> Result<SubspaceBasis> {
    span_closure(t.d, t.d, &t.gens, |x, g| x * g, tol)
}

/// Row-major Kronecker product.
fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Basis of `{U : U A_j = B_j U, U A_j* = B_j* U for all j}` (shape `b.d x a.d`).
pub fn intertwiner_space(a: &MatTuple, b: &MatTuple, tol: &Tolerance) -> Result<SubspaceBasis> {
    if a.k() != b.k() {
        return Err(Error::DimensionMismatch(format!("{} vs {} generators", a.k(), b.k())));
    }
    let (da, db) = (a.d, b.d);
    let ia = CMatrix::identity(da, da);
    let ib = CMatrix::identity(db, db);
    let blocks: Vec<CMatrix> = a
        .with_adjoints()
        .iter()
        .zip(b.with_adjoints().iter())
        .map(|(x, y)| kron(&ib, &x.transpose()) - kron(y, &ia))
        .collect();
    let rows = blocks.len() * da * db;
    let mut l = CMatrix::zeros(rows, da * db);
    for (i, blk) in blocks.iter().enumerate() {
        l.rows_mut(i * da * db, da * db).copy_from(blk);
    }
    let null = nullspace(&l, a.scale().max(b.scale()), tol)?;
    Ok(SubspaceBasis::from_orthonormal(db, da, null))
}

/// Basis of all matrices commuting with every generator and adjoint.
pub fn commutant(t: &MatTuple, tol: &Tolerance) -> Result<SubspaceBasis> {
    intertwiner_space(t, t, tol)
}

/// Irreducibility: scalar commutant, cross-checked against Burnside
/// (`dim word_span = d^2`). The zero tuple on `C^1` is not irreducible.
pub fn is_irreducible(t: &MatTuple, tol: &Tolerance) -> Result<bool> {
    let comm = commutant(t, tol)?.dim();
    let span = word_span(t, tol)?.dim();
    if span == 0 {
        return Ok(false);
    }
    let by_commutant = comm == 1;
    let by_span = span == t.d * t.d;
    if by_commutant != by_span {
        return Err(Error::NumericalFailure(format!(
            "commutant dimension {comm} and word-span dimension {span} disagree (d = {})",
            t.d
        )));
    }
    Ok(by_commutant)
}

/// Whether `I_d` lies in the algebra generated by `t`.
pub fn contains_identity(t: &MatTuple, tol: &Tolerance) -> Result<bool> {
    let span = word_span(t, tol)?;
    let id = CMatrix::identity(t.d, t.d);
    Ok(span.residual(&id) <= tol.eq_tol * (t.d as f64).sqrt())
}
