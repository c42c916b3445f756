//! Orthonormal bases of matrix subspaces under the trace inner product, gap-checked
//! numerical rank, nullspaces and multiplicative span closure.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DVector, QR};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::{flatten, frob, real, svd, unflatten, CMatrix, Tolerance, C64};


/// Minimal ratio between the smallest kept and the largest dropped singular value.
pub const RANK_GAP: f64 = 10.0;

/// Orthonormal basis (trace inner product `<X,Y> = tr(Y* X)`) of a subspace of
/// `rows x cols` matrices. Elements are stored row-major flattened as columns of `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    rows: usize,
    cols: usize,
    q: CMatrix,
}

impl SubspaceBasis {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, q: CMatrix::zeros(rows * cols, 0) }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        Self { rows, cols, q: CMatrix::identity(n, n) }
    }

    /// Wraps columns that are already orthonormal.
    pub(crate) fn from_orthonormal(rows: usize, cols: usize, q: CMatrix) -> Self {
        debug_assert_eq!(q.nrows(), rows * cols);
        Self { rows, cols, q }
    }

    /// Orthonormal basis of the span of `elements`. Elements with norm below
    /// `rank_cut` times the largest element norm do not contribute.
    pub fn span_of(rows: usize, cols: usize, elements: &[CMatrix], tol: &Tolerance) -> Result<Self> {
        let scale = elements.iter().map(frob).fold(0.0, f64::max);
        let mut basis = Self::empty(rows, cols);
        if scale == 0.0 {
            return Ok(basis);
        }
        let cand = CMatrix::from_fn(rows * cols, elements.len(), |i, j| {
            let (r, c) = (i / cols, i % cols);
            elements[j][(r, c)] / real(scale)
        });
        basis.extend(&cand, tol)?;
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Flattened basis as columns.
    pub fn matrix(&self) -> &CMatrix {
        &self.q
    }

    pub fn element(&self, i: usize) -> CMatrix {
        let col: Vec<C64> = self.q.column(i).iter().copied().collect();
        unflatten(&col, self.rows, self.cols)
    }

    pub fn elements(&self) -> Vec<CMatrix> {
        (0..self.dim()).map(|i| self.element(i)).collect()
    }

    /// Coordinates of the orthogonal projection of `m`.
    pub fn coordinates(&self, m: &CMatrix) -> DVector<C64> {
        self.q.adjoint() * flatten(m)
    }

    pub fn project(&self, m: &CMatrix) -> CMatrix {
        let v = &self.q * self.coordinates(m);
        unflatten(v.as_slice(), self.rows, self.cols)
    }

    /// `||m - P m||_F`.
    pub fn residual(&self, m: &CMatrix) -> f64 {
        frob(&(m - self.project(m)))
    }

    pub fn contains(&self, m: &CMatrix, tol: &Tolerance) -> bool {
        self.residual(m) <= tol.eq_tol * (1.0 + frob(m))
    }

    /// Every basis element of `other` lies in `self` within `rank_cut`-scaled residual.
    pub fn contains_subspace(&self, other: &SubspaceBasis, tol: &Tolerance) -> bool {
        if other.dim() == 0 {
            return true;
        }
        let r = other.q.clone() - &self.q * (self.q.adjoint() * &other.q);
        frob(&r) <= (tol.rank_cut * 1e3).max(tol.eq_tol) * (other.dim() as f64).sqrt()
    }

    /// Equal dimensions and mutual containment.
    pub fn same_subspace(&self, other: &SubspaceBasis, tol: &Tolerance) -> bool {
        self.shape() == other.shape()
            && self.dim() == other.dim()
            && self.contains_subspace(other, tol)
            && other.contains_subspace(self, tol)
    }

    /// Deviation of the Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        let k = self.dim();
        frob(&(self.q.adjoint() * &self.q - CMatrix::identity(k, k)))
    }

    /// Adds the directions of the candidate columns not yet spanned. Candidates
    /// must be pre-scaled so that a column of norm `rank_cut` counts as noise.
    /// Returns the number of new directions.
    pub fn extend(&mut self, candidates: &CMatrix, tol: &Tolerance) -> Result<usize> {
        if candidates.ncols() == 0 {
            return Ok(0);
        }
        let residual = candidates - &self.q * (self.q.adjoint() * candidates);
        let svd = svd(&residual)?;
        let rank = gap_rank(&svd.singular_values, tol.rank_cut)?;
        if rank == 0 {
            return Ok(0);
        }
        let u = svd.u;
        let mut fresh = u.columns(0, rank).into_owned();
        // Reorthogonalise against the current basis, then among themselves.
        fresh -= &self.q * (self.q.adjoint() * &fresh);
        let fresh = QR::new(fresh).q();
        let old = self.q.ncols();
        let mut q = CMatrix::zeros(self.q.nrows(), old + rank);
        q.columns_mut(0, old).copy_from(&self.q);
        q.columns_mut(old, rank).copy_from(&fresh);
        self.q = q;
        Ok(rank)
    }
}

/// Number of singular values (sorted descending) above `threshold`; fails when
/// the kept/dropped gap is narrower than [`RANK_GAP`].
pub fn gap_rank(sv: &[f64], threshold: f64) -> Result<usize> {
    let rank = sv.iter().take_while(|&&s| s > threshold).count();
    if rank > 0 && rank < sv.len() {
        let kept = sv[rank - 1];
        let dropped = sv[rank];
        if dropped > 0.0 && kept / dropped < RANK_GAP {
            return Err(Error::NumericalFailure(format!(
                "ambiguous rank: singular values {kept:.3e} and {dropped:.3e} straddle the cutoff {threshold:.3e}"
            )));
        }
    }
    Ok(rank)
}

/// Orthonormal basis (as columns) of the nullspace of `l`, thresholded at
/// `rank_cut` times the larger of `scale` and the top singular value.
/// `scale` is the size of the data `l` was built from, so that a map which
/// vanishes up to rounding is recognised as zero.
pub fn nullspace(l: &CMatrix, scale: f64, tol: &Tolerance) -> Result<CMatrix> {
    let (r, c) = l.shape();
    if c == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let padded = if r < c {
        let mut p = CMatrix::zeros(c, c);
        p.rows_mut(0, r).copy_from(l);
        p
    } else {
        l.clone()
    };
    let svd = svd(&padded)?;
    let sv = svd.singular_values;
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = tol.rank_cut * smax.max(scale);
    if cut == 0.0 {
        return Ok(CMatrix::identity(c, c));
    }
    let rank = gap_rank(&sv, cut)?;
    Ok(svd.v.columns(rank, c - rank).into_owned())
}

/// Smallest subspace containing `generators` (and their adjoints when
/// `with_adjoints`) closed under right multiplication by every generator and
/// adjoint. `mul(x, g)` is the product used by the algebra (matrix or pointwise).
pub fn span_closure<M>(
    rows: usize,
    cols: usize,
    generators: &[CMatrix],
    mul: M,
    tol: &Tolerance,
) -> Result<SubspaceBasis>
where
    M: Fn(&CMatrix, &CMatrix) -> CMatrix,
{
    let mut actions: Vec<CMatrix> = Vec::with_capacity(2 * generators.len());
    for g in generators {
        actions.push(g.clone());
        actions.push(adjoint_elementwise(g, rows, cols));
    }
    let mut basis = SubspaceBasis::span_of(rows, cols, &actions, tol)?;
    let mut frontier_start = 0;
    loop {
        let frontier_end = basis.dim();
        if frontier_start == frontier_end {
            break;
        }
        let frontier: Vec<CMatrix> = (frontier_start..frontier_end).map(|i| basis.element(i)).collect();
        frontier_start = frontier_end;
        for g in &actions {
            let scale = frob(g);
            if scale == 0.0 {
                continue;
            }
            let products: Vec<DVector<C64>> = frontier.iter().map(|x| flatten(&mul(x, g)) / real(scale)).collect();
            let cand = CMatrix::from_columns(&products);
            basis.extend(&cand, tol)?;
            if basis.dim() == rows * cols {
                return Ok(basis);
            }
        }
    }
    Ok(basis)
}

/// Adjoint of a square matrix, or blockwise adjoint of a vertical stack of
/// `cols x cols` blocks.
fn adjoint_elementwise(g: &CMatrix, rows: usize, cols: usize) -> CMatrix {
    if rows == cols {
        return g.adjoint();
    }
    let mut out = CMatrix::zeros(rows, cols);
    for b in 0..rows / cols {
        let block = g.view((b * cols, 0), (cols, cols)).adjoint();
        out.view_mut((b * cols, 0), (cols, cols)).copy_from(&block);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{diag, identity};

    #[test]
    fn gap_rank_detects_ambiguity() {
        assert_eq!(gap_rank(&[1.0, 0.5, 1e-15], 1e-9).unwrap(), 2);
        assert_eq!(gap_rank(&[1.0, 0.0], 1e-9).unwrap(), 1);
        assert_eq!(gap_rank(&[1e-12], 1e-9).unwrap(), 0);
        assert!(gap_rank(&[1.0, 2e-9, 5e-10], 1e-9).is_err());
    }

    #[test]
    fn span_of_diagonals() {
        let tol = Tolerance::default();
        let b = SubspaceBasis::span_of(2, 2, &[diag(&[1.0, 0.0]), diag(&[0.0, 1.0]), identity(2)], &tol).unwrap();
        assert_eq!(b.dim(), 2);
        assert!(b.gram_defect() < 1e-12);
        assert!(b.contains(&diag(&[3.0, -2.0]), &tol));
        assert!(!b.contains(&crate::matrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]), &tol));
    }

    #[test]
    fn nullspace_of_rank_one() {
        let tol = Tolerance::default();
        let l = crate::matrix::from_real_rows(&[&[1.0, 1.0, 0.0]]);
        let n = nullspace(&l, 1.0, &tol).unwrap();
        assert_eq!(n.ncols(), 2);
        assert!(frob(&(&l * &n)) < 1e-12);
        let z = CMatrix::zeros(3, 2);
        assert_eq!(nullspace(&z, 1.0, &tol).unwrap().ncols(), 2);
    }
}
