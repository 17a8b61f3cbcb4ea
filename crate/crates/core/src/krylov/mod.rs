//! Krylov solvers for the saddle-point system and its blocks.
//!
//! [`minres`] solves the symmetric indefinite Stokes system with a symmetric
//! positive definite block-diagonal preconditioner; [`pcg`] solves SPD
//! blocks, either directly or as the inner solver of a preconditioner block.

mod minres;
mod pcg;
mod precond;

pub use minres::{minres, MinresOptions, SolveReport};
pub use pcg::{pcg, PcgOptions, PcgResult, ResidualNorm};
pub use precond::{
    exact_schur_preconditioner, make_strategy, pressure_kernel, solve_stokes, BlockDiagPreconditioner,
    BlockSolver, InnerOptions, InnerPreconditioner, StokesSolution, Strategy, filter_pressure, schur_complement,
};

use crate::par::Execution;
use crate::sparse::CsrMatrix;
use crate::Result;

/// A linear map `y = A x` on `R^dim`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y, Execution::default())
            .expect("operator dimensions checked by the solver");
    }
}

/// `[A Bᵀ; B 0]` applied blockwise.
pub struct SaddlePointOperator<'a> {
    pub a: &'a CsrMatrix,
    pub b: &'a CsrMatrix,
    pub bt: &'a CsrMatrix,
    pub exec: Execution,
}

impl<'a> SaddlePointOperator<'a> {
    pub fn new(a: &'a CsrMatrix, b: &'a CsrMatrix, bt: &'a CsrMatrix) -> Self {
        Self {
            a,
            b,
            bt,
            exec: Execution::default(),
        }
    }

    pub fn n_u(&self) -> usize {
        self.a.n_rows()
    }
}

impl LinearOperator for SaddlePointOperator<'_> {
    fn dim(&self) -> usize {
        self.a.n_rows() + self.b.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n_u = self.n_u();
        let (xu, xp) = x.split_at(n_u);
        let (yu, yp) = y.split_at_mut(n_u);
        self.a.spmv_into(xu, yu, self.exec).expect("velocity block size");
        let mut t = vec![0.0; n_u];
        self.bt.spmv_into(xp, &mut t, self.exec).expect("pressure block size");
        for (a, b) in yu.iter_mut().zip(&t) {
            *a += b;
        }
        self.b.spmv_into(xu, yp, self.exec).expect("pressure block size");
    }
}

/// Symmetric positive definite preconditioner `z = M⁻¹ r`. Inner iterative
/// solvers make `apply` stateful.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()>;

    /// Mean inner iterations per application of the `(top, bottom)` blocks,
    /// for blocks solved iteratively.
    fn inner_means(&self) -> (Option<f64>, Option<f64>) {
        (None, None)
    }
}

/// `M = I`.
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
