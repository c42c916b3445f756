//! Irreducible block decomposition of a matrix tuple, unitary-equivalence
//! classes of the blocks, the homogeneity verdict and the n-spectrum.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::haar::complex_gaussian;
use crate::matrix::{frob, herm_eig_unchecked, hermitian_part, real, CMatrix, Tolerance, C64};
use crate::star_algebra::{commutant, intertwiner_space, is_irreducible, MatTuple};

/// Reseeds allowed when the random splitter produces near-degenerate gaps.
const SPLIT_ATTEMPTS: usize = 5;
/// Relative eigenvalue gaps in `(psd_slack, AMBIGUOUS_GAP)` trigger a reseed.
const AMBIGUOUS_GAP: f64 = 1e-6;
/// Word budget of the trace fingerprint.
const FINGERPRINT_WORDS: usize = 8192;
const FINGERPRINT_TOL: f64 = 1e-6;

/// An irreducible invariant subspace and its subrepresentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// `d x m` isometry onto the subspace.
    pub basis: CMatrix,
    /// Compressions `basis* T_j basis`.
    pub rep: MatTuple,
    pub class_id: usize,
    /// Unitary `W` with `W (class representative)_j W* = rep_j`.
    pub aligner: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub source: MatTuple,
    /// Unitary whose columns are the block bases followed by the zero block.
    pub v: CMatrix,
    pub blocks: Vec<Block>,
    /// Isometry onto the common null space of all generators.
    pub zero_basis: CMatrix,
    pub classes: Vec<MatTuple>,
    pub multiplicities: Vec<usize>,
}

impl Decomposition {
    pub fn zero_dim(&self) -> usize {
        self.zero_basis.ncols()
    }

    pub fn class_dims(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.d).collect()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rep.d).collect()
    }

    /// The common block size, if all classes share one (vacuously `Some(n)`
    /// is not produced: an empty class list gives `None`).
    pub fn homogeneous_dim(&self) -> Option<usize> {
        let first = self.classes.first()?.d;
        self.classes.iter().all(|c| c.d == first).then_some(first)
    }

    pub fn blocks_of_class(&self, class: usize) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(move |b| b.class_id == class)
    }

    /// Largest relative deviation of `v* T_j v` from the block-diagonal form.
    pub fn block_diagonal_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, g) in self.source.gens.iter().enumerate() {
            let expected = self.assemble(|b| b.rep.gens[j].clone());
            let scale = frob(g).max(1.0);
            worst = worst.max(frob(&(self.v.adjoint() * g * &self.v - expected)) / scale);
        }
        worst
    }

    /// `blockdiag(value(b))` in the basis `v` (zeros on the zero block).
    pub(crate) fn assemble<F: Fn(&Block) -> CMatrix>(&self, value: F) -> CMatrix {
        let d = self.source.d;
        let mut m = CMatrix::zeros(d, d);
        let mut off = 0;
        for b in &self.blocks {
            let k = b.rep.d;
            m.view_mut((off, off), (k, k)).copy_from(&value(b));
            off += k;
        }
        m
    }
}

/// Word-trace fingerprint `(tr w(T / s))_w` over words of length
/// `1..=min(6, 2 d^2)` in generators and adjoints, in a fixed word order.
/// Long words are dropped once the total exceeds a fixed budget.
pub fn fingerprint(t: &MatTuple, scale: f64) -> Vec<C64> {
    let s = scale.max(1.0);
    let letters: Vec<CMatrix> = t.with_adjoints().into_iter().map(|g| g / real(s)).collect();
    let max_len = 6.min(2 * t.d * t.d);
    let mut out = Vec::new();
    let mut layer = letters.clone();
    for len in 1..=max_len {
        if len > 1 {
            if out.len() + layer.len() * letters.len() > FINGERPRINT_WORDS {
                break;
            }
            layer = layer.iter().flat_map(|w| letters.iter().map(move |l| w * l)).collect();
        }
        out.extend(layer.iter().map(|w| w.trace()));
    }
    out
}

fn fingerprints_match(a: &[C64], b: &[C64], d: usize) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= FINGERPRINT_TOL * d as f64)
}

fn compare_fingerprints(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// A unitary `U` with `U A_j U* = B_j` for all `j`, or `None` if the
/// irreducible tuples are inequivalent.
pub fn unitarily_equivalent(a: &MatTuple, b: &MatTuple, tol: &Tolerance) -> Result<Option<CMatrix>> {
    if a.d != b.d || a.k() != b.k() {
        return Err(Error::DimensionMismatch(format!(
            "tuples of size {}x{} and {}x{}",
            a.k(),
            a.d,
            b.k(),
            b.d
        )));
    }
    if !is_irreducible(a, tol)? || !is_irreducible(b, tol)? {
        return Err(Error::NotIrreducible);
    }
    let scale = a.scale().max(b.scale());
    if !fingerprints_match(&fingerprint(a, scale), &fingerprint(b, scale), a.d) {
        return Ok(None);
    }
    intertwining_unitary(a, b, tol)
}

/// Intertwiner solve for irreducible tuples with matching fingerprints.
fn intertwining_unitary(a: &MatTuple, b: &MatTuple, tol: &Tolerance) -> Result<Option<CMatrix>> {
    let space = intertwiner_space(a, b, tol)?;
    match space.dim() {
        0 => Ok(None),
        1 => {
            let w = space.element(0);
            let d = a.d;
            let gram = w.adjoint() * &w;
            let c = gram.trace().re / d as f64;
            if c <= 0.0 || frob(&(&gram - CMatrix::identity(d, d) * real(c))) > 1e-6 * c * (d as f64).sqrt() {
                return Ok(None);
            }
            let u = fix_phase(&(w / real(c.sqrt())));
            let scale = a.scale().max(b.scale()).max(1.0);
            for (x, y) in a.gens.iter().zip(&b.gens) {
                if frob(&(&u * x * u.adjoint() - y)) > 1e-7 * scale {
                    return Err(Error::NumericalFailure("intertwiner does not conjugate the tuples".into()));
                }
            }
            Ok(Some(u))
        }
        k => Err(Error::NumericalFailure(format!(
            "intertwiner space of irreducible tuples has dimension {k}"
        ))),
    }
}

/// Multiplies by the phase making the first nonzero entry of the first
/// column real and positive.
pub(crate) fn fix_phase(u: &CMatrix) -> CMatrix {
    if u.ncols() == 0 {
        return u.clone();
    }
    let col_norm = u.column(0).norm();
    for i in 0..u.nrows() {
        let z = u[(i, 0)];
        if z.norm() > 1e-8 * col_norm.max(1e-300) {
            let phase = z.conj() / real(z.norm());
            return u * phase;
        }
    }
    u.clone()
}

/// Splits the range of the isometry `v` into irreducible invariant pieces;
/// pushes `(isometry, is_zero)` pairs in a deterministic order.
fn split(
    t: &MatTuple,
    v: CMatrix,
    zero_level: f64,
    rng: &mut ChaCha8Rng,
    tol: &Tolerance,
    out: &mut Vec<(CMatrix, bool)>,
) -> Result<()> {
    let rep = t.compress(&v);
    if rep.scale() <= zero_level {
        out.push((v, true));
        return Ok(());
    }
    let comm = commutant(&rep, tol)?;
    if comm.dim() <= 1 {
        out.push((v, false));
        return Ok(());
    }
    let elements = comm.elements();
    for _ in 0..SPLIT_ATTEMPTS {
        let mut h = CMatrix::zeros(rep.d, rep.d);
        for e in &elements {
            h += e * complex_gaussian(rng);
        }
        let h = hermitian_part(&h);
        let norm = frob(&h);
        if norm == 0.0 {
            continue;
        }
        let eig = herm_eig_unchecked(&(h / real(norm)))?;
        let mut clusters: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        let mut ambiguous = false;
        for i in 1..=eig.values.len() {
            if i == eig.values.len() {
                clusters.push((start, i));
                break;
            }
            let gap = eig.values[i] - eig.values[i - 1];
            if gap > tol.psd_slack {
                if gap < AMBIGUOUS_GAP {
                    ambiguous = true;
                    break;
                }
                clusters.push((start, i));
                start = i;
            }
        }
        if ambiguous || clusters.len() < 2 {
            continue;
        }
        for (lo, hi) in clusters {
            let piece = &v * eig.vectors.columns(lo, hi - lo);
            split(t, piece, zero_level, rng, tol, out)?;
        }
        return Ok(());
    }
    Err(Error::NumericalFailure(format!(
        "commutant splitter stayed degenerate after {SPLIT_ATTEMPTS} draws"
    )))
}

/// Decomposes the tuple into irreducible blocks grouped by unitary equivalence.
pub fn decompose(t: &MatTuple, tol: &Tolerance, seed: u64) -> Result<Decomposition> {
    let d = t.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero_level = tol.eq_tol * t.scale();
    let mut pieces = Vec::new();
    split(t, CMatrix::identity(d, d), zero_level, &mut rng, tol, &mut pieces)?;

    let mut zero_cols: Vec<CMatrix> = Vec::new();
    let mut irreducible: Vec<(CMatrix, MatTuple, Vec<C64>)> = Vec::new();
    let scale = t.scale();
    for (basis, is_zero) in pieces {
        if is_zero {
            zero_cols.push(basis);
        } else {
            let rep = t.compress(&basis);
            let fp = fingerprint(&rep, scale);
            irreducible.push((basis, rep, fp));
        }
    }
    irreducible.sort_by(|a, b| a.1.d.cmp(&b.1.d).then_with(|| compare_fingerprints(&a.2, &b.2)));

    let mut classes: Vec<MatTuple> = Vec::new();
    let mut class_fps: Vec<Vec<C64>> = Vec::new();
    let mut multiplicities: Vec<usize> = Vec::new();
    let mut blocks = Vec::with_capacity(irreducible.len());
    for (basis, rep, fp) in irreducible {
        let mut found = None;
        for (c, class) in classes.iter().enumerate() {
            if class.d == rep.d && fingerprints_match(&class_fps[c], &fp, rep.d) {
                if let Some(w) = intertwining_unitary(class, &rep, tol)? {
                    found = Some((c, w));
                    break;
                }
            }
        }
        let (class_id, aligner) = match found {
            Some(hit) => hit,
            None => {
                if !is_irreducible(&rep, tol)? {
                    return Err(Error::NumericalFailure("split produced a reducible block".into()));
                }
                classes.push(rep.clone());
                class_fps.push(fp);
                multiplicities.push(0);
                (classes.len() - 1, CMatrix::identity(rep.d, rep.d))
            }
        };
        multiplicities[class_id] += 1;
        blocks.push(Block { basis, rep, class_id, aligner });
    }

    let zero_dim: usize = zero_cols.iter().map(|z| z.ncols()).sum();
    let mut zero_basis = CMatrix::zeros(d, zero_dim);
    let mut off = 0;
    for z in &zero_cols {
        zero_basis.columns_mut(off, z.ncols()).copy_from(z);
        off += z.ncols();
    }
    let mut v = CMatrix::zeros(d, d);
    let mut off = 0;
    for b in &blocks {
        v.columns_mut(off, b.rep.d).copy_from(&b.basis);
        off += b.rep.d;
    }
    v.columns_mut(off, zero_dim).copy_from(&zero_basis);

    Ok(Decomposition { source: t.clone(), v, blocks, zero_basis, classes, multiplicities })
}

/// Outcome of the n-homogeneity test.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneityReport {
    pub is_n_homogeneous: bool,
    pub n: usize,
    pub block_dims: Vec<usize>,
    pub zero_dim: usize,
    pub reason: Option<String>,
    pub decomposition: Decomposition,
}

/// True iff every nonzero irreducible block has dimension `n`.
pub fn homogeneity_verdict(t: &MatTuple, n: usize, tol: &Tolerance, seed: u64) -> Result<HomogeneityReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let dec = decompose(t, tol, seed)?;
    Ok(verdict_of(dec, n))
}

pub fn verdict_of(dec: Decomposition, n: usize) -> HomogeneityReport {
    let block_dims = dec.block_dims();
    let reason = block_dims
        .iter()
        .find(|&&m| m != n)
        .map(|m| format!("irreducible block of dimension {m}"));
    HomogeneityReport {
        is_n_homogeneous: reason.is_none(),
        n,
        block_dims,
        zero_dim: dec.zero_dim(),
        reason,
        decomposition: dec,
    }
}

/// Orbit representatives of the irreducible n-dimensional representations.
#[derive(Debug, Clone, PartialEq)]
pub struct NSpectrum {
    pub n: usize,
    pub points: Vec<MatTuple>,
    pub multiplicities: Vec<usize>,
    /// The zero representation lies in the closure (zero blocks exist).
    pub zero_in_closure: bool,
}

pub fn n_spectrum(t: &MatTuple, n: usize, tol: &Tolerance, seed: u64) -> Result<NSpectrum> {
    let report = homogeneity_verdict(t, n, tol, seed)?;
    spectrum_of(&report)
}

pub fn spectrum_of(report: &HomogeneityReport) -> Result<NSpectrum> {
    if !report.is_n_homogeneous {
        return Err(Error::NotNHomogeneous {
            n: report.n,
            reason: report.reason.clone().unwrap_or_default(),
        });
    }
    let dec = &report.decomposition;
    Ok(NSpectrum {
        n: report.n,
        points: dec.classes.clone(),
        multiplicities: dec.multiplicities.clone(),
        zero_in_closure: dec.zero_dim() > 0,
    })
}
