//! Seeded random instance builders: Gaussian matrices, random irreducible
//! tuples and unitarily scrambled direct sums with known structure.

use alloc::vec::Vec;

use rand::Rng;

use crate::haar::{complex_gaussian, haar_unitary_from_rng};
use crate::matrix::{real, CMatrix};
use crate::star_algebra::MatTuple;

/// Matrix of independent standard complex Gaussians.
pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_gaussian(rng, n, n);
    (&g + g.adjoint()) * real(0.5)
}

/// `g g* / n`, positive semidefinite with spectrum of order one.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_gaussian(rng, n, n);
    &g * g.adjoint() / real(n.max(1) as f64)
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    haar_unitary_from_rng(rng, n)
}

/// `k` independent Ginibre matrices of size `n`; irreducible with probability one
/// (for `n = 1` the scalar is nonzero with probability one).
pub fn random_irreducible<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> MatTuple {
    let gens = (0..k).map(|_| random_gaussian(rng, n, n)).collect();
    MatTuple::new(gens).expect("generated tuple is well formed")
}

/// Conjugates every generator by `u`: `u.t = (u T_j u*)_j`.
pub fn conjugate(t: &MatTuple, u: &CMatrix) -> MatTuple {
    MatTuple::new(t.gens.iter().map(|g| u * g * u.adjoint()).collect()).expect("same shapes")
}

/// Block-diagonal direct sum of tuples with the same generator count.
pub fn direct_sum(parts: &[MatTuple], zero_dim: usize) -> MatTuple {
    let k = parts[0].k();
    let d: usize = parts.iter().map(|p| p.d).sum::<usize>() + zero_dim;
    let mut gens = Vec::with_capacity(k);
    for j in 0..k {
        let mut m = CMatrix::zeros(d, d);
        let mut off = 0;
        for p in parts {
            m.view_mut((off, off), (p.d, p.d)).copy_from(&p.gens[j]);
            off += p.d;
        }
        gens.push(m);
    }
    MatTuple::new(gens).expect("direct sum is well formed")
}

/// Known structure of a generated instance.
#[derive(Debug, Clone)]
pub struct ScrambledSum {
    pub tuple: MatTuple,
    /// Inequivalent irreducible summands, each with its multiplicity.
    pub summands: Vec<(MatTuple, usize)>,
    pub zero_dim: usize,
    pub scramble: CMatrix,
}

/// `U (rho_1^{m_1} + ... + 0_z) U*` where each copy of `rho_i` is conjugated
/// by its own random unitary before summing.
pub fn scrambled_direct_sum<R: Rng + ?Sized>(
    rng: &mut R,
    summands: &[(MatTuple, usize)],
    zero_dim: usize,
) -> ScrambledSum {
    let mut parts = Vec::new();
    for (rho, mult) in summands {
        for _ in 0..*mult {
            let w = random_unitary(rng, rho.d);
            parts.push(conjugate(rho, &w));
        }
    }
    let sum = direct_sum(&parts, zero_dim);
    let u = random_unitary(rng, sum.d);
    ScrambledSum { tuple: conjugate(&sum, &u), summands: summands.to_vec(), zero_dim, scramble: u }
}

/// Random `n`-homogeneous tuple: `classes` inequivalent irreducibles of size
/// `n` with multiplicities in `1..=max_mult`, plus `zero_dim` zero directions.
pub fn random_homogeneous<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    classes: usize,
    max_mult: usize,
    zero_dim: usize,
) -> ScrambledSum {
    let summands: Vec<(MatTuple, usize)> = (0..classes)
        .map(|_| (random_irreducible(rng, n, k), rng.random_range(1..=max_mult)))
        .collect();
    scrambled_direct_sum(rng, &summands, zero_dim)
}

/// Shape of the values at a group of linked points in a random function algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// Values range over all of `M_n`.
    Full,
    /// Values range over the diagonal matrices (up to a fixed unitary per point).
    Diagonal,
    /// Every function vanishes here.
    Vanishing,
}

/// Knobs for [`random_fn_algebra`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnAlgebraStyle {
    /// Chance that a point joins an existing group (values linked by a unitary).
    pub link_prob: f64,
    /// Chance that a new group carries diagonal values.
    pub diag_prob: f64,
    /// Adds a distinguished point where every function vanishes.
    pub vanishing: bool,
}

impl FnAlgebraStyle {
    pub const DENSE: Self = Self { link_prob: 0.0, diag_prob: 0.0, vanishing: false };
}

/// Generators of a *-algebra of functions on a finite set with known structure.
#[derive(Debug, Clone)]
pub struct FnAlgebraInstance {
    pub points: usize,
    pub n: usize,
    /// Each generator as the vertical stack of its values.
    pub gens: Vec<CMatrix>,
    pub groups: Vec<Vec<usize>>,
    pub kinds: Vec<PointKind>,
}

impl FnAlgebraInstance {
    /// Dimension of the generated algebra (one copy of the group algebra per group).
    pub fn expected_dim(&self) -> usize {
        self.kinds
            .iter()
            .map(|k| match k {
                PointKind::Full => self.n * self.n,
                PointKind::Diagonal => self.n,
                PointKind::Vanishing => 0,
            })
            .sum()
    }

    pub fn expect_dense(&self) -> bool {
        self.expected_dim() == self.points * self.n * self.n
    }
}

/// Random generators: points are grouped, each group gets independent random
/// values of its kind, and the other points of a group carry unitary
/// conjugates of the first point's values.
pub fn random_fn_algebra<R: Rng + ?Sized>(
    rng: &mut R,
    points: usize,
    n: usize,
    k: usize,
    style: FnAlgebraStyle,
) -> FnAlgebraInstance {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut kinds: Vec<PointKind> = Vec::new();
    let mut twist: Vec<CMatrix> = Vec::with_capacity(points);
    for x in 0..points {
        if x == 0 && style.vanishing {
            groups.push(alloc::vec![x]);
            kinds.push(PointKind::Vanishing);
            twist.push(CMatrix::identity(n, n));
            continue;
        }
        let linkable: Vec<usize> = (0..groups.len()).filter(|&g| kinds[g] != PointKind::Vanishing).collect();
        if !linkable.is_empty() && rng.random::<f64>() < style.link_prob {
            let g = linkable[rng.random_range(0..linkable.len())];
            groups[g].push(x);
            twist.push(random_unitary(rng, n));
        } else {
            groups.push(alloc::vec![x]);
            kinds.push(if rng.random::<f64>() < style.diag_prob { PointKind::Diagonal } else { PointKind::Full });
            twist.push(if kinds.last() == Some(&PointKind::Diagonal) {
                random_unitary(rng, n)
            } else {
                CMatrix::identity(n, n)
            });
        }
    }
    let mut gens = alloc::vec![CMatrix::zeros(points * n, n); k];
    for (group, kind) in groups.iter().zip(&kinds) {
        for g in gens.iter_mut() {
            let base = match kind {
                PointKind::Full => random_gaussian(rng, n, n),
                PointKind::Diagonal => {
                    let d = random_gaussian(rng, n, 1);
                    CMatrix::from_diagonal(&d.column(0))
                }
                PointKind::Vanishing => CMatrix::zeros(n, n),
            };
            for &x in group {
                let v = &twist[x] * &base * twist[x].adjoint();
                g.view_mut((x * n, 0), (n, n)).copy_from(&v);
            }
        }
    }
    FnAlgebraInstance { points, n, gens, groups, kinds }
}
