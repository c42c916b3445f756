//! Finite-dimensional toolkit for n-homogeneous C*-algebras: irreducible
//! decomposition of matrix systems, n-spectra, the n-functional calculus,
//! finite n-space models, Haar averaging and a constructive operator-valued
//! Stone-Weierstrass engine.
//!
//! The crate is `no_std` with `alloc`; enable the `std` feature for the
//! standard-library integrations of the dependencies.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calculus;
pub mod decomposition;
pub mod error;
pub mod haar;
pub mod instances;
pub mod matrix;
pub mod nspace;
pub mod polynomial;
pub mod star_algebra;
pub mod subspace;
pub mod sw_engine;

pub use decomposition::{decompose, homogeneity_verdict, n_spectrum, unitarily_equivalent, Decomposition, NSpectrum};
pub use error::{Error, Result};
pub use matrix::{c64, CMatrix, Tolerance, C64};
pub use polynomial::StarPolynomial;
pub use star_algebra::MatTuple;
pub use subspace::SubspaceBasis;
