//! Dense complex-matrix kernel.
//!
//! Hermitian eigendecomposition, spectral functions of Hermitian matrices,
//! the positive-semidefinite order and spectra of normal matrices. Every
//! other module is built on these routines.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Complex double-precision scalar.
pub type C64 = Complex<f64>;

/// Dense complex matrix, the numeric carrier of the whole crate.
pub type CMatrix = DMatrix<C64>;

const EIG_MAX_ITER: usize = 10_000;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Tolerance policy shared by all verdicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative singular-value threshold for rank decisions.
    pub rank_cut: f64,
    /// Eigenvalue slack for order checks.
    pub psd_slack: f64,
    /// Elementwise comparison tolerance.
    pub eq_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rank_cut: 1e-9, psd_slack: 1e-8, eq_tol: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(rank_cut: f64, psd_slack: f64, eq_tol: f64) -> Result<Self> {
        let tol = Self { rank_cut, psd_slack, eq_tol };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rank_cut", self.rank_cut), ("psd_slack", self.psd_slack), ("eq_tol", self.eq_tol)] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(Error::InvalidInput(format!("{name} = {v} must lie in (0, 1e-2)")));
            }
        }
        Ok(())
    }
}

/// Builds a matrix from rows, rejecting ragged, empty or non-finite input.
pub fn from_rows(rows: &[Vec<C64>]) -> Result<CMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::InvalidInput("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::InvalidInput("matrix has no columns".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::InvalidInput(format!(
                "ragged matrix: row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
    }
    let m = CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    check_finite(&m)?;
    Ok(m)
}

/// Builds a matrix from real rows.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(nrows, ncols, |i, j| real(rows[i][j]))
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has a non-finite entry".into()))
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { real(values[i]) } else { real(0.0) })
}

/// Frobenius norm.
pub fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Full singular value decomposition `a = u diag(s) v*`, singular values in
/// descending order. `u` is `m x m` and `v` is `n x n`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

// nalgebra's bidiagonal SVD returns inconsistent factors for some
// rank-deficient inputs, so factorisations go through faer.
fn to_faer(a: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Svd { singular_values: Vec::new(), u: CMatrix::identity(m, m), v: CMatrix::identity(n, n) });
    }
    check_finite(a)?;
    let f = to_faer(a)
        .svd()
        .map_err(|_| Error::NumericalFailure("SVD did not converge".into()))?;
    let singular_values = f.S().column_vector().iter().map(|s| s.re).collect();
    Ok(Svd { singular_values, u: from_faer(f.U()), v: from_faer(f.V()) })
}

pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    check_finite(a)?;
    to_faer(a)
        .singular_values()
        .map_err(|_| Error::NumericalFailure("SVD did not converge".into()))
}

/// Operator (spectral) norm: the largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    match singular_values(m) {
        Ok(sv) => sv.first().copied().unwrap_or(0.0),
        // Frobenius bound if the SVD stalls.
        Err(_) => frob(m),
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Row-major flattening, matching the trace inner product `tr(Y*X) = vec(Y)^H vec(X)`.
pub fn flatten(m: &CMatrix) -> DVector<C64> {
    let (r, c) = m.shape();
    DVector::from_fn(r * c, |k, _| m[(k / c, k % c)])
}

pub fn unflatten(v: &[C64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

fn ensure_square(a: &CMatrix) -> Result<usize> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    Ok(r)
}

pub fn hermitian_defect(a: &CMatrix) -> f64 {
    frob(&(a - a.adjoint()))
}

pub fn ensure_hermitian(a: &CMatrix, tol: &Tolerance) -> Result<()> {
    ensure_square(a)?;
    let asym = hermitian_defect(a);
    if asym <= tol.eq_tol * (1.0 + frob(a)) {
        Ok(())
    } else {
        Err(Error::NotHermitian { asymmetry: asym })
    }
}

/// Hermitian part `(a + a*)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * real(0.5)
}

/// Result of a Hermitian eigendecomposition: ascending eigenvalues and the
/// unitary whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    /// Rebuilds `u diag(g(lambda)) u*`.
    pub fn map<F: Fn(f64) -> f64>(&self, g: F) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = real(g(lambda));
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

pub fn herm_eig(a: &CMatrix, tol: &Tolerance) -> Result<HermEig> {
    ensure_hermitian(a, tol)?;
    herm_eig_unchecked(a)
}

/// Eigendecomposition of the Hermitian part of `a`, skipping the precondition check.
pub(crate) fn herm_eig_unchecked(a: &CMatrix) -> Result<HermEig> {
    let n = a.nrows();
    if n == 0 {
        return Ok(HermEig { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let sym = hermitian_part(a);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn herm_eigenvalues(a: &CMatrix, tol: &Tolerance) -> Result<Vec<f64>> {
    Ok(herm_eig(a, tol)?.values)
}

/// Applies a real scalar function to a Hermitian matrix through its spectrum.
pub fn herm_fun<F: Fn(f64) -> f64>(a: &CMatrix, f: F, tol: &Tolerance) -> Result<CMatrix> {
    let eig = herm_eig(a, tol)?;
    for &lambda in &eig.values {
        let v = f(lambda);
        if !v.is_finite() {
            return Err(Error::DomainError(format!("f({lambda:.6e}) is not finite")));
        }
    }
    Ok(eig.map(f))
}

/// `a^s` for positive semidefinite `a` and `s >= 0`; eigenvalues in
/// `[-psd_slack * scale, 0]` are clamped to zero.
pub fn psd_power(a: &CMatrix, s: f64, tol: &Tolerance) -> Result<CMatrix> {
    if !(s >= 0.0) {
        return Err(Error::DomainError(format!("exponent {s} must be nonnegative")));
    }
    let eig = herm_eig(a, tol)?;
    let slack = tol.psd_slack * frob(a).max(1.0);
    if let Some(&min) = eig.values.first() {
        if min < -slack {
            return Err(Error::DomainError(format!("matrix is not positive semidefinite (min eigenvalue {min:.3e})")));
        }
    }
    Ok(eig.map(|l| if l <= 0.0 { if s == 0.0 { 1.0 } else { 0.0 } } else { l.powf(s) }))
}

pub fn sqrt_psd(a: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    psd_power(a, 0.5, tol)
}

/// `|u| = sqrt(u* u)` for an arbitrary square matrix.
pub fn abs_mat(u: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    ensure_square(u)?;
    sqrt_psd(&(u.adjoint() * u), tol)
}

/// `|h|` for Hermitian `h`, computed as `u diag(|lambda|) u*` (equal to `sqrt(h*h)`).
pub fn abs_herm(h: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    herm_fun(h, f64::abs, tol)
}

/// Outcome of comparing two Hermitian matrices in the Loewner order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PsdOrder {
    /// `a <= b` with `b - a` singular (within slack).
    Leq,
    /// `a < b`: `b - a` positive definite.
    Lt,
    Incomparable,
}

impl PsdOrder {
    /// True for both `Leq` and `Lt`.
    pub fn is_leq(self) -> bool {
        matches!(self, PsdOrder::Leq | PsdOrder::Lt)
    }
}

/// Compares `a` and `b`. The slack is `psd_slack` scaled by `max(1, |a|, |b|)`.
pub fn psd_order(a: &CMatrix, b: &CMatrix, tol: &Tolerance) -> Result<PsdOrder> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    ensure_hermitian(a, tol)?;
    ensure_hermitian(b, tol)?;
    let slack = tol.psd_slack * frob(a).max(frob(b)).max(1.0);
    let min = min_eigenvalue(&(b - a))?;
    Ok(if min > slack {
        PsdOrder::Lt
    } else if min >= -slack {
        PsdOrder::Leq
    } else {
        PsdOrder::Incomparable
    })
}

pub(crate) fn min_eigenvalue(h: &CMatrix) -> Result<f64> {
    Ok(herm_eig_unchecked(h)?.values.first().copied().unwrap_or(0.0))
}

/// `M(a) = max sigma(a)` for Hermitian `a`.
pub fn max_spec(a: &CMatrix, tol: &Tolerance) -> Result<f64> {
    let values = herm_eigenvalues(a, tol)?;
    values
        .last()
        .copied()
        .ok_or_else(|| Error::InvalidInput("empty matrix".into()))
}

/// `||x x* - x* x||_F`.
pub fn normal_defect(x: &CMatrix) -> f64 {
    frob(&(x * x.adjoint() - x.adjoint() * x))
}

pub fn is_normal(x: &CMatrix, tol: &Tolerance) -> bool {
    x.is_square() && normal_defect(x) <= tol.eq_tol * (1.0 + frob(x).powi(2))
}

/// Eigenvalues of a normal matrix.
///
/// Uses the complex Schur form; if it does not converge, falls back to the
/// commuting Hermitian pair `(Re x, Im x)`, diagonalised together through
/// a generic real combination.
pub fn normal_eigenvalues(x: &CMatrix, tol: &Tolerance) -> Result<Vec<C64>> {
    let n = ensure_square(x)?;
    if !is_normal(x, tol) {
        return Err(Error::PreconditionFailed("matrix is not normal".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if let Ok(values) = to_faer(x).eigenvalues() {
        return Ok(values);
    }
    let re = hermitian_part(x);
    let im = (x - x.adjoint()) * c64(0.0, -0.5);
    let pencil = &re + &im * real(core::f64::consts::FRAC_1_SQRT_2 * 0.917);
    let eig = herm_eig_unchecked(&pencil)?;
    let u = &eig.vectors;
    Ok((0..n)
        .map(|j| {
            let col = u.column(j);
            (col.adjoint() * x * col)[(0, 0)]
        })
        .collect())
}

/// Why two matrices failed the spectral-disjointness test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeparationFailure {
    /// The first (`0`) or second (`1`) matrix is not normal.
    NonNormal(u8),
    /// Spectra come closer than `2 psd_slack`.
    Overlap { distance: f64 },
    ShapeMismatch,
}

/// Verdict of [`normal_spectra_disjoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSeparation {
    pub disjoint: bool,
    pub reason: Option<SeparationFailure>,
    /// Minimal distance between the spectra, when both are normal.
    pub distance: Option<f64>,
}

/// True iff `a` and `b` are normal with spectra further apart than `2 psd_slack`.
pub fn normal_spectra_disjoint(a: &CMatrix, b: &CMatrix, tol: &Tolerance) -> SpectralSeparation {
    let fail = |reason| SpectralSeparation { disjoint: false, reason: Some(reason), distance: None };
    if !a.is_square() || !b.is_square() {
        return fail(SeparationFailure::ShapeMismatch);
    }
    if !is_normal(a, tol) {
        return fail(SeparationFailure::NonNormal(0));
    }
    if !is_normal(b, tol) {
        return fail(SeparationFailure::NonNormal(1));
    }
    let (Ok(sa), Ok(sb)) = (normal_eigenvalues(a, tol), normal_eigenvalues(b, tol)) else {
        return fail(SeparationFailure::Overlap { distance: 0.0 });
    };
    let distance = spectral_distance(&sa, &sb);
    if distance > 2.0 * tol.psd_slack {
        SpectralSeparation { disjoint: true, reason: None, distance: Some(distance) }
    } else {
        SpectralSeparation {
            disjoint: false,
            reason: Some(SeparationFailure::Overlap { distance }),
            distance: Some(distance),
        }
    }
}

pub(crate) fn spectral_distance(sa: &[C64], sb: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for x in sa {
        for y in sb {
            best = best.min((x - y).norm());
        }
    }
    best
}
