//! Stone-Weierstrass machinery for `M_n`-valued functions on a finite set:
//! generated *-subalgebras, spectral separation, the two-point closure
//! `Delta_2(E)`, density and unit criteria, operator envelopes, and a
//! constructive approximation pipeline.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{
    flatten, frob, singular_values, svd, herm_eig_unchecked, hermitian_part, min_eigenvalue, normal_eigenvalues, normal_spectra_disjoint,
    op_norm, psd_order, psd_power, real, CMatrix, Tolerance, C64,
};
use crate::polynomial::{Letter, StarPolynomial};
use crate::subspace::{gap_rank, nullspace, span_closure, SubspaceBasis};

/// Random real combinations tried by the separation search.
pub const SEPARATION_DRAWS: usize = 200;

/// A function `X -> M_n` on `points` points, stored as the vertical stack of
/// its values (`points * n` rows, `n` columns).
pub type PointFn = CMatrix;

pub fn stack(values: &[CMatrix]) -> PointFn {
    let n = values.first().map_or(0, |v| v.ncols());
    let mut m = CMatrix::zeros(values.len() * n, n);
    for (i, v) in values.iter().enumerate() {
        m.view_mut((i * n, 0), (n, n)).copy_from(v);
    }
    m
}

pub fn value_at(f: &PointFn, n: usize, x: usize) -> CMatrix {
    f.view((x * n, 0), (n, n)).into_owned()
}

fn map_points<F: Fn(usize, CMatrix) -> Result<CMatrix>>(f: &PointFn, n: usize, g: F) -> Result<PointFn> {
    let points = f.nrows() / n.max(1);
    let values = (0..points).map(|x| g(x, value_at(f, n, x))).collect::<Result<Vec<_>>>()?;
    Ok(stack_or_empty(&values, n))
}

fn stack_or_empty(values: &[CMatrix], n: usize) -> PointFn {
    if values.is_empty() {
        CMatrix::zeros(0, n)
    } else {
        stack(values)
    }
}

/// Pointwise product.
pub fn pointwise_mul(a: &PointFn, b: &PointFn, n: usize) -> PointFn {
    let mut out = CMatrix::zeros(a.nrows(), n);
    for x in 0..a.nrows() / n {
        let p = a.view((x * n, 0), (n, n)) * b.view((x * n, 0), (n, n));
        out.view_mut((x * n, 0), (n, n)).copy_from(&p);
    }
    out
}

/// Pointwise adjoint.
pub fn pointwise_adjoint(a: &PointFn, n: usize) -> PointFn {
    let mut out = CMatrix::zeros(a.nrows(), n);
    for x in 0..a.nrows() / n {
        out.view_mut((x * n, 0), (n, n)).copy_from(&a.view((x * n, 0), (n, n)).adjoint());
    }
    out
}

/// Pointwise Hermitian part.
fn herm_part(a: &PointFn, n: usize) -> PointFn {
    (a + pointwise_adjoint(a, n)) * real(0.5)
}

/// Sup norm `max_x ||f(x)||_op`.
pub fn sup_norm(f: &PointFn, n: usize) -> f64 {
    (0..f.nrows() / n.max(1)).map(|x| op_norm(&value_at(f, n, x))).fold(0.0, f64::max)
}

pub fn unit_fn(points: usize, n: usize) -> PointFn {
    stack_or_empty(&alloc::vec![CMatrix::identity(n, n); points], n)
}

/// A *-subalgebra `E` of functions `X -> M_n` on a finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct FnAlgebra {
    pub points: usize,
    pub n: usize,
    pub basis: SubspaceBasis,
}

impl FnAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn full_dim(&self) -> usize {
        self.points * self.n * self.n
    }

    pub fn elements(&self) -> Vec<PointFn> {
        self.basis.elements()
    }

    /// Hermitian parts `(b + b*)/2` and `(b - b*)/2i` of the basis elements;
    /// they span the self-adjoint part of `E` over the reals.
    pub fn hermitian_elements(&self) -> Vec<PointFn> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for b in self.elements() {
            let adj = pointwise_adjoint(&b, self.n);
            out.push((&b + &adj) * real(0.5));
            out.push((&b - &adj) * C64::new(0.0, -0.5));
        }
        out
    }

    /// `dim E(x)`, the dimension of the values at `x`.
    pub fn dim_at(&self, x: usize, tol: &Tolerance) -> Result<usize> {
        let n2 = self.n * self.n;
        let rows = self.basis.matrix().rows(x * n2, n2).into_owned();
        restricted_rank(&rows, tol)
    }

    pub fn contains(&self, f: &PointFn, tol: &Tolerance) -> bool {
        self.basis.contains(f, tol)
    }
}

fn restricted_rank(rows: &CMatrix, tol: &Tolerance) -> Result<usize> {
    if rows.ncols() == 0 {
        return Ok(0);
    }
    gap_rank(&singular_values(rows)?, tol.rank_cut)
}

/// Orthonormal basis of the columns of `rows` (rank-gapped).
fn column_space(rows: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    if rows.ncols() == 0 {
        return Ok(CMatrix::zeros(rows.nrows(), 0));
    }
    let svd = svd(rows)?;
    let rank = gap_rank(&svd.singular_values, tol.rank_cut)?;
    Ok(svd.u.columns(0, rank).into_owned())
}

/// Smallest *-subalgebra containing `gens` (functions stacked as `points * n x n`).
pub fn closure_star_subalgebra(points: usize, n: usize, gens: &[PointFn], tol: &Tolerance) -> Result<FnAlgebra> {
    for g in gens {
        if g.shape() != (points * n, n) {
            return Err(Error::DimensionMismatch(format!(
                "generator of shape {:?}, expected ({}, {n})",
                g.shape(),
                points * n
            )));
        }
        crate::matrix::check_finite(g)?;
    }
    let basis = span_closure(points * n, n, gens, |x, g| pointwise_mul(x, g, n), tol)?;
    Ok(FnAlgebra { points, n, basis })
}

/// Outcome of the separation search at a pair of points.
#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    /// A function with normal values and disjoint spectra at the two points.
    CertifiedTrue { witness: PointFn, distance: f64 },
    /// `E(x) = E(y) = M_n` and `v(y)` is determined by `v(x)`: every value
    /// pair is related by a *-automorphism, so spectra always coincide.
    CertifiedFalse,
    NotFound,
}

impl Separation {
    pub fn is_certified_true(&self) -> bool {
        matches!(self, Separation::CertifiedTrue { .. })
    }
}

fn random_real_combination(elements: &[PointFn], rng: &mut ChaCha8Rng) -> Option<PointFn> {
    let first = elements.first()?;
    let mut acc = CMatrix::zeros(first.nrows(), first.ncols());
    for e in elements {
        let c: f64 = rng.sample(StandardNormal);
        acc += e * real(c);
    }
    Some(acc)
}

/// Searches for a function whose values at `x` and `y` are normal with
/// disjoint spectra: basis elements, their Hermitian parts, then seeded
/// random real combinations of the Hermitian parts. Among the random draws
/// the best-separated one (relative to its sup norm) is kept.
pub fn spectrally_separates(e: &FnAlgebra, x: usize, y: usize, tol: &Tolerance, seed: u64) -> Result<Separation> {
    if x == y {
        return Err(Error::SamePoint);
    }
    for p in [x, y] {
        if p >= e.points {
            return Err(Error::IndexOutOfRange { index: p, bound: e.points });
        }
    }
    let n = e.n;
    let test = |f: &PointFn| -> Option<f64> {
        let s = normal_spectra_disjoint(&value_at(f, n, x), &value_at(f, n, y), tol);
        if s.disjoint {
            s.distance.map(|d| d / sup_norm(f, n).max(f64::MIN_POSITIVE))
        } else {
            None
        }
    };
    let herm = e.hermitian_elements();
    let mut best: Option<(f64, PointFn)> = None;
    for f in e.elements().into_iter().chain(herm.iter().cloned()) {
        if let Some(d) = test(&f) {
            if best.as_ref().is_none_or(|(b, _)| d > *b) {
                best = Some((d, f));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((x as u64) << 32) ^ y as u64);
    for _ in 0..SEPARATION_DRAWS {
        let Some(f) = random_real_combination(&herm, &mut rng) else { break };
        if let Some(d) = test(&f) {
            if best.as_ref().is_none_or(|(b, _)| d > *b) {
                best = Some((d, f));
            }
        }
    }
    if let Some((_, witness)) = best {
        let distance = {
            let sx = normal_eigenvalues(&value_at(&witness, n, x), tol)?;
            let sy = normal_eigenvalues(&value_at(&witness, n, y), tol)?;
            crate::matrix::spectral_distance(&sx, &sy)
        };
        return Ok(Separation::CertifiedTrue { witness, distance });
    }
    let n2 = n * n;
    let full_x = e.dim_at(x, tol)? == n2;
    let full_y = e.dim_at(y, tol)? == n2;
    if full_x && full_y && restricted_rank(&pair_rows(e, x, y), tol)? == n2 {
        return Ok(Separation::CertifiedFalse);
    }
    Ok(Separation::NotFound)
}

/// Rows of the basis matrix belonging to points `x` and `y`.
fn pair_rows(e: &FnAlgebra, x: usize, y: usize) -> CMatrix {
    let n2 = e.n * e.n;
    let q = e.basis.matrix();
    let mut rows = CMatrix::zeros(2 * n2, q.ncols());
    rows.rows_mut(0, n2).copy_from(&q.rows(x * n2, n2));
    rows.rows_mut(n2, n2).copy_from(&q.rows(y * n2, n2));
    rows
}

/// `Delta_2(E)`: functions whose restriction to every pair of points agrees
/// with the restriction of some element of `E`.
pub fn delta2_subspace(e: &FnAlgebra, tol: &Tolerance) -> Result<SubspaceBasis> {
    let n = e.n;
    let n2 = n * n;
    let total = e.full_dim();
    let mut pairs = Vec::new();
    if e.points == 1 {
        pairs.push((0, 0));
    }
    for x in 0..e.points {
        for y in x + 1..e.points {
            pairs.push((x, y));
        }
    }
    let mut constraints = CMatrix::zeros(pairs.len() * 2 * n2, total);
    for (p, &(x, y)) in pairs.iter().enumerate() {
        let rows = pair_rows(e, x, y);
        let range = column_space(&rows, tol)?;
        let proj = CMatrix::identity(2 * n2, 2 * n2) - &range * range.adjoint();
        let block_rows = if x == y { n2 } else { 2 * n2 };
        let mut local = constraints.view_mut((p * 2 * n2, 0), (block_rows, total));
        for (half, point) in [(0, x), (1, y)] {
            if x == y && half == 1 {
                break;
            }
            let src = proj.view((0, half * n2), (block_rows, n2));
            let mut dst = local.columns_mut(point * n2, n2);
            dst += src;
        }
    }
    let null = nullspace(&constraints, 1.0, tol)?;
    Ok(SubspaceBasis::from_orthonormal(e.points * n, n, null))
}

/// Per-pair separation verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct PairVerdict {
    pub x: usize,
    pub y: usize,
    pub verdict: Separation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    /// `dim E = |X| n^2`.
    pub dense: bool,
    pub dim: usize,
    pub full_dim: usize,
    pub fullness_per_point: Vec<bool>,
    pub separation: Vec<PairVerdict>,
    /// Separation at all pairs and fullness at all points, when decidable
    /// from the certified verdicts.
    pub criterion: Option<bool>,
}

impl DensityReport {
    /// Whether the density flag matches the criterion (`None` if undecided).
    pub fn agrees(&self) -> Option<bool> {
        self.criterion.map(|c| c == self.dense)
    }

    pub fn not_found_pairs(&self) -> usize {
        self.separation.iter().filter(|p| p.verdict == Separation::NotFound).count()
    }
}

pub fn density_check(e: &FnAlgebra, tol: &Tolerance, seed: u64) -> Result<DensityReport> {
    let n2 = e.n * e.n;
    let fullness_per_point = (0..e.points).map(|x| Ok(e.dim_at(x, tol)? == n2)).collect::<Result<Vec<_>>>()?;
    let mut separation = Vec::new();
    for x in 0..e.points {
        for y in x + 1..e.points {
            separation.push(PairVerdict { x, y, verdict: spectrally_separates(e, x, y, tol, seed)? });
        }
    }
    let criterion = if fullness_per_point.iter().any(|f| !f)
        || separation.iter().any(|p| p.verdict == Separation::CertifiedFalse)
    {
        Some(false)
    } else if separation.iter().all(|p| p.verdict.is_certified_true()) {
        Some(true)
    } else {
        None
    };
    Ok(DensityReport {
        dense: e.dim() == e.full_dim(),
        dim: e.dim(),
        full_dim: e.full_dim(),
        fullness_per_point,
        separation,
        criterion,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitReport {
    pub contains_unit: bool,
    /// `1_X` when it lies in `E`.
    pub witness: Option<PointFn>,
    /// A point where `sum_j f_j* f_j` is singular.
    pub singular_point: Option<usize>,
}

/// `1_X` lies in `E` iff `u = sum_j f_j* f_j` is invertible at every point.
pub fn unit_in_closure(e: &FnAlgebra, tol: &Tolerance) -> Result<UnitReport> {
    let n = e.n;
    let mut u = CMatrix::zeros(e.points * n, n);
    for f in e.elements() {
        u += pointwise_mul(&pointwise_adjoint(&f, n), &f, n);
    }
    let scale = sup_norm(&u, n).max(1.0);
    for x in 0..e.points {
        if e.points == 0 || min_eigenvalue(&value_at(&u, n, x))? <= tol.psd_slack * scale {
            return Ok(UnitReport { contains_unit: false, witness: None, singular_point: Some(x) });
        }
    }
    // The spectral function equal to 1 on sigma(u(x)) is the identity at each point.
    let witness = map_points(&u, n, |_, ux| {
        let eig = herm_eig_unchecked(&ux)?;
        Ok(eig.map(|l| if l > 0.0 { 1.0 } else { 0.0 }))
    })?;
    let residual = e.basis.residual(&witness);
    if residual > tol.eq_tol * (1.0 + frob(&witness)) {
        return Err(Error::NumericalFailure(format!(
            "u is invertible everywhere but 1_X is at distance {residual:.3e} from E"
        )));
    }
    Ok(UnitReport { contains_unit: true, witness: Some(witness), singular_point: None })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    /// The exponent `N`.
    pub power: usize,
    pub env: CMatrix,
}

/// Smallest `N >= 2` with `k^(1/N) <= 1 + eps / r`.
pub fn envelope_power(k: usize, eps: f64, r: f64) -> usize {
    if r <= 0.0 || k <= 1 {
        return 2;
    }
    let target = (1.0 + eps / r).ln();
    let lnk = (k as f64).ln();
    let mut n = ((lnk / target).ceil() as usize).max(2);
    while n > 2 && lnk / (n - 1) as f64 <= target {
        n -= 1;
    }
    while lnk / n as f64 > target {
        n += 1;
    }
    n
}

/// Joint eigenbasis of commuting Hermitian matrices, if the family commutes.
fn joint_eigenbasis(mats: &[CMatrix], tol: &Tolerance) -> Result<Option<CMatrix>> {
    let d = mats[0].nrows();
    let scale = mats.iter().map(frob).fold(1.0, f64::max);
    for (i, a) in mats.iter().enumerate() {
        for b in &mats[i + 1..] {
            if frob(&(a * b - b * a)) > tol.eq_tol * scale * scale {
                return Ok(None);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut h = CMatrix::zeros(d, d);
    for m in mats {
        let c: f64 = rng.sample(StandardNormal);
        h += m * real(c);
    }
    let u = herm_eig_unchecked(&h)?.vectors;
    for m in mats {
        let t = u.adjoint() * m * &u;
        let off = frob(&(&t - CMatrix::from_diagonal(&t.diagonal())));
        if off > 1e3 * tol.eq_tol * scale {
            return Ok(None);
        }
    }
    Ok(Some(u))
}

/// `(sum_j a_j^N)^(1/N)` with `N` chosen so the envelope lies between every
/// `a_s` and `b + eps I`. Requires `0 <= a_j <= b` and `b` commuting with each `a_j`.
pub fn power_mean_envelope(a: &[CMatrix], b: &CMatrix, eps: f64, tol: &Tolerance) -> Result<Envelope> {
    if a.is_empty() {
        return Err(Error::InvalidInput("envelope of an empty family".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} must be positive")));
    }
    let d = b.nrows();
    let scale = op_norm(b).max(1.0);
    let zero = CMatrix::zeros(d, d);
    let mut violations: Vec<String> = Vec::new();
    for (j, aj) in a.iter().enumerate() {
        if aj.shape() != b.shape() {
            return Err(Error::DimensionMismatch(format!("a_{j} has shape {:?}", aj.shape())));
        }
        if !psd_order(&zero, aj, tol)?.is_leq() {
            violations.push(format!("a_{j} is not positive semidefinite"));
        }
        if !psd_order(aj, b, tol)?.is_leq() {
            violations.push(format!("a_{j} <= b fails"));
        }
        if frob(&(b * aj - aj * b)) > tol.eq_tol * scale * scale {
            violations.push(format!("b does not commute with a_{j}"));
        }
    }
    if !violations.is_empty() {
        return Err(Error::PreconditionFailed(violations.join("; ")));
    }
    let r = op_norm(b);
    let power = envelope_power(a.len(), eps, r);
    let mut family: Vec<CMatrix> = a.to_vec();
    family.push(b.clone());
    let env = match joint_eigenbasis(&family, tol)? {
        Some(u) => {
            // Scaled scalar power mean per joint eigenvalue: m (sum (l/m)^N)^(1/N).
            let diags: Vec<DVector<C64>> = a.iter().map(|aj| (u.adjoint() * aj * &u).diagonal()).collect();
            let values: Vec<f64> = (0..d)
                .map(|i| {
                    let ls: Vec<f64> = diags.iter().map(|dg| dg[i].re.max(0.0)).collect();
                    let m = ls.iter().copied().fold(0.0, f64::max);
                    if m == 0.0 {
                        0.0
                    } else {
                        m * ls.iter().map(|l| (l / m).powi(power as i32)).sum::<f64>().powf(1.0 / power as f64)
                    }
                })
                .collect();
            let dm = CMatrix::from_diagonal(&DVector::from_iterator(d, values.into_iter().map(real)));
            hermitian_part(&(&u * dm * u.adjoint()))
        }
        None => {
            let mut sum = CMatrix::zeros(d, d);
            for aj in a {
                sum += psd_power(aj, power as f64, tol)?;
            }
            psd_power(&hermitian_part(&sum), 1.0 / power as f64, tol)?
        }
    };
    for (j, aj) in a.iter().enumerate() {
        if !psd_order(aj, &env, tol)?.is_leq() {
            return Err(Error::NumericalFailure(format!("envelope is not above a_{j}")));
        }
    }
    let upper = b + CMatrix::identity(d, d) * real(eps);
    if !psd_order(&env, &upper, tol)?.is_leq() {
        return Err(Error::NumericalFailure("envelope exceeds b + eps I".into()));
    }
    Ok(Envelope { power, env })
}

/// Pointwise `h_k = (h_{k-1} + g_k + |h_{k-1} - g_k|) / 2` with `h_1 = g_1`.
pub fn lattice_join_chain(g: &[PointFn], n: usize, tol: &Tolerance) -> Result<PointFn> {
    let first = g.first().ok_or_else(|| Error::InvalidInput("empty chain".into()))?;
    let points = first.nrows() / n;
    for f in g {
        for x in 0..points {
            crate::matrix::ensure_hermitian(&value_at(f, n, x), tol)?;
        }
    }
    let mut h = herm_part(first, n);
    for gk in &g[1..] {
        let gk = herm_part(gk, n);
        let diff = &h - &gk;
        let abs = map_points(&diff, n, |_, v| Ok(herm_eig_unchecked(&v)?.map(f64::abs)))?;
        h = herm_part(&((&h + &gk + abs) * real(0.5)), n);
    }
    let scale = g.iter().map(|f| sup_norm(f, n)).fold(1.0, f64::max);
    for f in g {
        for x in 0..points {
            let gap = &value_at(&h, n, x) - hermitian_part(&value_at(f, n, x));
            if min_eigenvalue(&gap)? < -tol.psd_slack * scale {
                return Err(Error::NumericalFailure(format!("join is not above a chain element at point {x}")));
            }
        }
    }
    Ok(h)
}

/// Coefficients (constant first) of the Lagrange polynomial through `nodes`.
fn lagrange_coefficients(nodes: &[(C64, C64)]) -> Vec<C64> {
    let m = nodes.len();
    let mut coeffs = alloc::vec![real(0.0); m];
    for (i, &(zi, vi)) in nodes.iter().enumerate() {
        if vi == real(0.0) {
            continue;
        }
        let mut basis = alloc::vec![real(1.0)];
        let mut denom = real(1.0);
        for (j, &(zj, _)) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut next = alloc::vec![real(0.0); basis.len() + 1];
            for (k, &c) in basis.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * zj;
            }
            basis = next;
            denom *= zi - zj;
        }
        for (k, c) in basis.iter().enumerate() {
            coeffs[k] += c * vi / denom;
        }
    }
    coeffs
}

/// Merges eigenvalues closer than `radius`.
fn merge_nodes(values: &[C64], radius: f64) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::new();
    for &v in values {
        if !out.iter().any(|w| (w - v).norm() <= radius) {
            out.push(v);
        }
    }
    out
}

/// One-variable polynomial `p` with `p(a) = alpha I` and `p(b) = beta I` for
/// normal `a`, `b` with disjoint spectra (Lagrange interpolation on the joint spectrum).
pub fn two_point_flatten(a: &CMatrix, b: &CMatrix, alpha: f64, beta: f64, tol: &Tolerance) -> Result<StarPolynomial> {
    let sep = normal_spectra_disjoint(a, b, tol);
    if !sep.disjoint {
        return Err(Error::SpectraNotDisjoint { distance: sep.distance.unwrap_or(0.0) });
    }
    let sa = normal_eigenvalues(a, tol)?;
    let sb = normal_eigenvalues(b, tol)?;
    let radius = sa.iter().chain(&sb).map(|z| z.norm()).fold(1.0, f64::max) * tol.psd_slack;
    let mut nodes: Vec<(C64, C64)> = merge_nodes(&sa, radius).into_iter().map(|z| (z, real(alpha))).collect();
    nodes.extend(merge_nodes(&sb, radius).into_iter().map(|z| (z, real(beta))));
    let coeffs = lagrange_coefficients(&nodes);
    let terms = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != real(0.0))
        .map(|(k, c)| (*c, alloc::vec![Letter::new(0, false); k]))
        .collect();
    let p = StarPolynomial::new(terms)?;
    let bound = 1e-8 * (1.0 + alpha.abs() + beta.abs());
    for (m, target) in [(a, alpha), (b, beta)] {
        let t = crate::star_algebra::MatTuple { d: m.nrows(), gens: alloc::vec![m.clone()] };
        let value = crate::polynomial::eval_star_polynomial(&p, &t)?;
        let err = frob(&(value - CMatrix::identity(m.nrows(), m.nrows()) * real(target)));
        if err > bound {
            return Err(Error::NumericalFailure(format!("interpolation error {err:.3e} (ill-conditioned nodes)")));
        }
    }
    Ok(p)
}

/// Evaluates a one-variable polynomial at a function, pointwise; the constant
/// term multiplies `unit`.
fn eval_on_fn(p: &StarPolynomial, w: &PointFn, unit: &PointFn, n: usize) -> PointFn {
    let mut acc = CMatrix::zeros(w.nrows(), n);
    let degree = p.degree();
    let mut powers = alloc::vec![unit.clone()];
    for k in 1..=degree {
        let next = if k == 1 { w.clone() } else { pointwise_mul(&powers[k - 1], w, n) };
        powers.push(next);
    }
    for (c, word) in &p.terms {
        acc += &powers[word.len()] * *c;
    }
    acc
}

/// Minimum eigenvalue of `b^s - a^s` for each exponent.
pub fn loewner_heinz_check(a: &CMatrix, b: &CMatrix, s_grid: &[f64], tol: &Tolerance) -> Result<Vec<(f64, f64)>> {
    let d = a.nrows();
    let zero = CMatrix::zeros(d, d);
    if !psd_order(&zero, a, tol)?.is_leq() || !psd_order(&zero, b, tol)?.is_leq() {
        return Err(Error::PreconditionFailed("a and b must be positive semidefinite".into()));
    }
    if !psd_order(a, b, tol)?.is_leq() {
        return Err(Error::PreconditionFailed("a <= b fails".into()));
    }
    let scale = op_norm(b).max(1.0);
    let mut out = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidInput(format!("exponent {s} outside (0, 1)")));
        }
        let diff = psd_power(b, s, tol)? - psd_power(a, s, tol)?;
        let min = min_eigenvalue(&diff)?;
        if min < -tol.psd_slack * scale {
            return Err(Error::NumericalFailure(format!("b^s - a^s has eigenvalue {min:.3e} at s = {s}")));
        }
        out.push((s, min));
    }
    Ok(out)
}

/// Standing hypotheses of the constructive approximation, checked at every pair of points.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// Each pair is spectrally separated or has `M(h(x)) = M(h(y))` for every
    /// self-adjoint `h` in `E`.
    pub pairs_ok: bool,
    pub failing_pair: Option<(usize, usize)>,
    pub unit: bool,
    /// Classes of the relation `M(h(x)) = M(h(y))` for all self-adjoint `h`.
    pub classes: Vec<Vec<usize>>,
    pub separation: Vec<PairVerdict>,
}

/// Whether `M(h(x)) = M(h(y))` for the self-adjoint part of `E`, tested on
/// the Hermitian basis and random real combinations.
fn max_spec_related(e: &FnAlgebra, herm: &[PointFn], combos: &[PointFn], x: usize, y: usize, tol: &Tolerance) -> Result<bool> {
    let n = e.n;
    for h in herm.iter().chain(combos) {
        let scale = sup_norm(h, n).max(1.0);
        let mx = herm_eig_unchecked(&value_at(h, n, x))?.values.last().copied().unwrap_or(0.0);
        let my = herm_eig_unchecked(&value_at(h, n, y))?.values.last().copied().unwrap_or(0.0);
        if (mx - my).abs() > 10.0 * tol.psd_slack * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn check_hypotheses(e: &FnAlgebra, tol: &Tolerance, seed: u64) -> Result<HypothesisReport> {
    let herm = e.hermitian_elements();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
    let combos: Vec<PointFn> = (0..32).filter_map(|_| random_real_combination(&herm, &mut rng)).collect();
    let m = e.points;
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut failing_pair = None;
    let mut separation = Vec::new();
    for x in 0..m {
        for y in x + 1..m {
            let related = max_spec_related(e, &herm, &combos, x, y, tol)?;
            let verdict = spectrally_separates(e, x, y, tol, seed)?;
            if related {
                let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                parent[rx] = ry;
            } else if !verdict.is_certified_true() && failing_pair.is_none() {
                failing_pair = Some((x, y));
            }
            separation.push(PairVerdict { x, y, verdict });
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for x in 0..m {
        let r = find(&mut parent, x);
        match roots.iter().position(|&q| q == r) {
            Some(i) => classes[i].push(x),
            None => {
                roots.push(r);
                classes.push(alloc::vec![x]);
            }
        }
    }
    let unit = unit_in_closure(e, tol)?.contains_unit;
    Ok(HypothesisReport { pairs_ok: failing_pair.is_none(), failing_pair, unit, classes, separation })
}

/// Output of the constructive approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    /// Element of `E` assembled from class indicators and local approximants.
    pub g: PointFn,
    pub constructive_error: f64,
    /// Orthogonal projection of the target onto `E`.
    pub projection: PointFn,
    pub projection_error: f64,
    pub classes: Vec<Vec<usize>>,
    /// `max_x ||h_x(x) - f(x)||` for the pointwise joins of pair interpolants
    /// of the Hermitian parts of `f` (zero when the joins touch `f`).
    pub envelope_defect: f64,
    pub certified: bool,
}

/// Least-squares element of `E` matching `f` on the points `set`.
fn local_approximant(e: &FnAlgebra, f: &PointFn, set: &[usize], tol: &Tolerance) -> Result<PointFn> {
    let n2 = e.n * e.n;
    let q = e.basis.matrix();
    let target = flatten(f);
    let mut rows = CMatrix::zeros(set.len() * n2, q.ncols());
    let mut rhs = DVector::zeros(set.len() * n2);
    for (i, &x) in set.iter().enumerate() {
        rows.rows_mut(i * n2, n2).copy_from(&q.rows(x * n2, n2));
        rhs.rows_mut(i * n2, n2).copy_from(&target.rows(x * n2, n2));
    }
    if q.ncols() == 0 {
        return Ok(CMatrix::zeros(f.nrows(), e.n));
    }
    // Truncated pseudo-inverse solve.
    let svd = svd(&rows)?;
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let proj = svd.u.adjoint() * rhs;
    let mut coeffs = DVector::zeros(q.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol.rank_cut * smax {
            coeffs += svd.v.column(i) * (proj[i] / real(s));
        }
    }
    let v = q * coeffs;
    Ok(crate::matrix::unflatten(v.as_slice(), f.nrows(), e.n))
}

/// Pointwise joins of the pair interpolants of a Hermitian target `h`:
/// returns `max_x ||h_x(x) - h(x)||` where `h_x = join_y v_xy`.
fn envelope_defect(e: &FnAlgebra, h: &PointFn, tol: &Tolerance) -> Result<f64> {
    let n = e.n;
    let mut worst: f64 = 0.0;
    for x in 0..e.points {
        let interpolants = (0..e.points)
            .map(|y| {
                let set: Vec<usize> = if x == y { alloc::vec![x] } else { alloc::vec![x, y] };
                Ok(herm_part(&local_approximant(e, h, &set, tol)?, n))
            })
            .collect::<Result<Vec<_>>>()?;
        let hx = lattice_join_chain(&interpolants, n, tol)?;
        worst = worst.max(frob(&(value_at(&hx, n, x) - value_at(h, n, x))));
    }
    Ok(worst)
}

/// Approximates `f in Delta_2(E)` by an element of `E`: the points are grouped
/// into classes of the max-spectrum relation, class indicators are built in
/// `E` as products of two-point interpolation polynomials of separating
/// functions, and each class contributes a local approximant.
pub fn constructive_approximate(e: &FnAlgebra, f: &PointFn, eps: f64, tol: &Tolerance, seed: u64) -> Result<Approximation> {
    let n = e.n;
    if f.shape() != (e.points * n, n) {
        return Err(Error::DimensionMismatch(format!("target of shape {:?}", f.shape())));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} must be positive")));
    }
    let delta2 = delta2_subspace(e, tol)?;
    if !delta2.contains(f, tol) {
        return Err(Error::PreconditionFailed("target does not lie in Delta_2(E)".into()));
    }
    let hyp = check_hypotheses(e, tol, seed)?;
    if let Some((x, y)) = hyp.failing_pair {
        return Err(Error::HypothesisViolated(format!(
            "points {x} and {y} are neither spectrally separated nor max-spectrum related"
        )));
    }
    if !hyp.unit {
        return Err(Error::HypothesisViolated("the unit 1_X is not in the closure of E".into()));
    }
    let unit = unit_fn(e.points, n);

    // q_xy in E with q_xy(x) = I and q_xy(y) = 0 for x, y in different classes.
    let witness_of = |x: usize, y: usize| -> Result<PointFn> {
        let (a, b, flip) = if x < y { (x, y, false) } else { (y, x, true) };
        let verdict = hyp
            .separation
            .iter()
            .find(|p| p.x == a && p.y == b)
            .map(|p| &p.verdict)
            .ok_or_else(|| Error::NumericalFailure("missing separation verdict".into()))?;
        let Separation::CertifiedTrue { witness, .. } = verdict else {
            return Err(Error::HypothesisViolated(format!("points {a} and {b} are not separated")));
        };
        let w = witness / real(sup_norm(witness, n).max(f64::MIN_POSITIVE));
        let (alpha, beta) = if flip { (0.0, 1.0) } else { (1.0, 0.0) };
        let p = two_point_flatten(&value_at(&w, n, a), &value_at(&w, n, b), alpha, beta, tol)?;
        Ok(eval_on_fn(&p, &w, &unit, n))
    };

    let mut g = CMatrix::zeros(e.points * n, n);
    for class in &hyp.classes {
        // chi_C = prod_{y not in C} r_y, r_y = 1 - prod_{x in C} (1 - q_xy).
        let mut chi = unit.clone();
        for y in (0..e.points).filter(|y| !class.contains(y)) {
            let mut prod = unit.clone();
            for &x in class {
                prod = pointwise_mul(&prod, &(&unit - witness_of(x, y)?), n);
            }
            chi = pointwise_mul(&chi, &(&unit - prod), n);
        }
        let local = local_approximant(e, f, class, tol)?;
        g += pointwise_mul(&chi, &local, n);
    }
    let constructive_error = sup_norm(&(&g - f), n);
    let projection = e.basis.project(f);
    let projection_error = sup_norm(&(&projection - f), n);
    let re = herm_part(f, n);
    let im = herm_part(&(f * C64::new(0.0, -1.0)), n);
    let envelope_defect = envelope_defect(e, &re, tol)?.max(envelope_defect(e, &im, tol)?);
    let certified = constructive_error <= eps + tol.psd_slack && e.contains(&g, tol);
    Ok(Approximation {
        g,
        constructive_error,
        projection,
        projection_error,
        classes: hyp.classes,
        envelope_defect,
        certified,
    })
}
