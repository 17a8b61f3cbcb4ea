//! Divergence-conforming B-spline discretization of the 2D Stokes equations
//! and block-diagonal preconditioners for MINRES.
//!
//! The crate is organized bottom-up:
//!
//! - [`spline`]: univariate B-spline spaces on open knot vectors.
//! - [`space`]: tensor-product spaces and the divergence-conforming
//!   velocity/pressure pair with its DOF numbering.
//! - [`geometry`]: parametric-to-physical maps, Piola and integral-preserving
//!   pushforwards, boundary faces.
//! - [`assembly`]: the viscous block with Nitsche terms, the divergence block,
//!   the pressure mass matrix and the right-hand side.
//! - [`sparse`]: CSR storage, reordering, complete and incomplete Cholesky,
//!   dense eigensolvers and Matrix Market exchange.
//! - [`krylov`]: preconditioned MINRES, PCG and the block-diagonal
//!   preconditioning strategies.
//! - [`analysis`]: error norms, inf-sup constants, spectra and divergence checks.
//!
//! Data-parallel loops (element assembly, SpMV, dense operator builds) run on
//! rayon when the `parallel` feature is enabled and fall back to sequential
//! iteration otherwise; results are bit-identical either way.

pub mod analysis;
pub mod assembly;
mod error;
pub mod geometry;
pub mod krylov;
pub mod par;
pub mod quadrature;
pub mod space;
pub mod sparse;
pub mod spline;

pub use error::{Error, Result};

/// A point or vector in the plane.
pub type Point = [f64; 2];

/// Row-major 2x2 matrix, `m[row][col]`.
pub type Mat2 = [[f64; 2]; 2];
