use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{dot, minres, pcg, LinearOperator, MinresOptions, PcgOptions, Preconditioner, ResidualNorm, SaddlePointOperator, SolveReport};
use crate::assembly::StokesSystem;
use crate::sparse::{complete_cholesky, ic0, CholeskyFactor, CsrMatrix, Ordering, DEFAULT_EIG_CAP};
use crate::{Error, Result};

/// Block-diagonal preconditioning strategies for the Stokes system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    IdealAQ,
    PcgAQ,
    IdealADiagQ,
    PcgADiagQ,
    DiagAQ,
    Ic0PcgAQ,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::IdealAQ,
        Strategy::PcgAQ,
        Strategy::IdealADiagQ,
        Strategy::PcgADiagQ,
        Strategy::DiagAQ,
        Strategy::Ic0PcgAQ,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::IdealAQ => "Ideal(A,Q)",
            Strategy::PcgAQ => "PCG(A,Q)",
            Strategy::IdealADiagQ => "Ideal(A)+Diag(Q)",
            Strategy::PcgADiagQ => "PCG(A)+Diag(Q)",
            Strategy::DiagAQ => "Diag(A,Q)",
            Strategy::Ic0PcgAQ => "IC0-PCG(A,Q)",
        }
    }

    /// File-name friendly identifier.
    pub fn slug(self) -> &'static str {
        match self {
            Strategy::IdealAQ => "ideal_aq",
            Strategy::PcgAQ => "pcg_aq",
            Strategy::IdealADiagQ => "ideal_a_diag_q",
            Strategy::PcgADiagQ => "pcg_a_diag_q",
            Strategy::DiagAQ => "diag_aq",
            Strategy::Ic0PcgAQ => "ic0_pcg_aq",
        }
    }

    /// Accepts a label or a slug, ignoring case and surrounding whitespace.
    pub fn from_name(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase();
        Strategy::ALL
            .into_iter()
            .find(|s| s.label().to_ascii_lowercase() == key || s.slug() == key)
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    /// Whether some block is solved by an inner PCG iteration.
    pub fn has_inner_iterations(self) -> bool {
        matches!(self, Strategy::PcgAQ | Strategy::PcgADiagQ | Strategy::Ic0PcgAQ)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::from_name(s)
    }
}

/// Settings of inner PCG block solves.
#[derive(Clone, Copy, Debug)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub norm: ResidualNorm,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
            norm: ResidualNorm::Preconditioned,
        }
    }
}

/// Preconditioner of an inner PCG block solve.
#[derive(Clone, Debug)]
pub enum InnerPreconditioner {
    /// Inverse diagonal.
    Jacobi(Vec<f64>),
    Ic0(CholeskyFactor),
}

impl Preconditioner for InnerPreconditioner {
    fn dim(&self) -> usize {
        match self {
            InnerPreconditioner::Jacobi(d) => d.len(),
            InnerPreconditioner::Ic0(f) => f.n(),
        }
    }

    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        match self {
            InnerPreconditioner::Jacobi(d) => {
                for ((z, r), d) in z.iter_mut().zip(r).zip(d.iter()) {
                    *z = r * d;
                }
                Ok(())
            }
            InnerPreconditioner::Ic0(f) => f.solve_into(r, z),
        }
    }
}

/// Approximate inverse of one diagonal block.
#[derive(Clone, Debug)]
pub enum BlockSolver {
    /// Sparse Cholesky factor.
    Exact(CholeskyFactor),
    /// Inverse diagonal.
    Jacobi(Vec<f64>),
    /// Inner PCG to a relative tolerance, started from zero.
    Pcg {
        matrix: CsrMatrix,
        inner: InnerPreconditioner,
        opts: InnerOptions,
        applications: usize,
        iterations: usize,
    },
    /// Dense Cholesky factor, used for Schur complements.
    Dense(Cholesky<f64, Dyn>),
}

fn inverse_diagonal(m: &CsrMatrix) -> Result<Vec<f64>> {
    m.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::Breakdown { row: i, pivot: d })
            }
        })
        .collect()
}

impl BlockSolver {
    pub fn exact(m: &CsrMatrix) -> Result<Self> {
        Ok(BlockSolver::Exact(complete_cholesky(m, Ordering::Rcm)?))
    }

    pub fn jacobi(m: &CsrMatrix) -> Result<Self> {
        Ok(BlockSolver::Jacobi(inverse_diagonal(m)?))
    }

    pub fn pcg_jacobi(m: &CsrMatrix, opts: InnerOptions) -> Result<Self> {
        Ok(Self::pcg_with(m, InnerPreconditioner::Jacobi(inverse_diagonal(m)?), opts))
    }

    pub fn pcg_ic0(m: &CsrMatrix, opts: InnerOptions) -> Result<Self> {
        Ok(Self::pcg_with(m, InnerPreconditioner::Ic0(ic0(m, Ordering::Rcm)?), opts))
    }

    fn pcg_with(m: &CsrMatrix, inner: InnerPreconditioner, opts: InnerOptions) -> Self {
        BlockSolver::Pcg {
            matrix: m.clone(),
            inner,
            opts,
            applications: 0,
            iterations: 0,
        }
    }

    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        Cholesky::new(m)
            .map(BlockSolver::Dense)
            .ok_or(Error::Breakdown { row: n, pivot: f64::NAN })
    }

    pub fn dim(&self) -> usize {
        match self {
            BlockSolver::Exact(f) => f.n(),
            BlockSolver::Jacobi(d) => d.len(),
            BlockSolver::Pcg { matrix, .. } => matrix.n_rows(),
            BlockSolver::Dense(c) => c.l_dirty().nrows(),
        }
    }

    /// Mean inner iterations per application, for PCG blocks that were used.
    pub fn mean_inner_iterations(&self) -> Option<f64> {
        match self {
            BlockSolver::Pcg { applications, iterations, .. } if *applications > 0 => {
                Some(*iterations as f64 / *applications as f64)
            }
            _ => None,
        }
    }

    pub fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        match self {
            BlockSolver::Exact(f) => f.solve_into(r, z),
            BlockSolver::Jacobi(d) => {
                for ((z, r), d) in z.iter_mut().zip(r).zip(d.iter()) {
                    *z = r * d;
                }
                Ok(())
            }
            BlockSolver::Pcg { matrix, inner, opts, applications, iterations } => {
                z.fill(0.0);
                let o = PcgOptions { tol: opts.tol, max_iter: opts.max_iter, norm: opts.norm };
                let res = pcg(&*matrix, r, inner, z, &o)?;
                *applications += 1;
                *iterations += res.iterations;
                Ok(())
            }
            BlockSolver::Dense(c) => {
                let x = c.solve(&DVector::from_column_slice(r));
                z.copy_from_slice(x.as_slice());
                Ok(())
            }
        }
    }
}

/// `M = diag(M_top, M_bottom)` acting on `[velocity; pressure]`.
#[derive(Clone, Debug)]
pub struct BlockDiagPreconditioner {
    pub top: BlockSolver,
    pub bottom: BlockSolver,
    pub label: String,
}

impl BlockDiagPreconditioner {
    pub fn new(top: BlockSolver, bottom: BlockSolver, label: impl Into<String>) -> Self {
        Self { top, bottom, label: label.into() }
    }
}

impl Preconditioner for BlockDiagPreconditioner {
    fn dim(&self) -> usize {
        self.top.dim() + self.bottom.dim()
    }

    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let n = self.top.dim();
        let (rt, rb) = r.split_at(n);
        let (zt, zb) = z.split_at_mut(n);
        self.top.apply(rt, zt)?;
        if dot(rt, zt) < 0.0 {
            return Err(Error::IndefinitePreconditioner { block: format!("{} top", self.label) });
        }
        self.bottom.apply(rb, zb)?;
        if dot(rb, zb) < 0.0 {
            return Err(Error::IndefinitePreconditioner { block: format!("{} bottom", self.label) });
        }
        Ok(())
    }

    fn inner_means(&self) -> (Option<f64>, Option<f64>) {
        (self.top.mean_inner_iterations(), self.bottom.mean_inner_iterations())
    }
}

/// Builds the preconditioner of a strategy. The pressure block always uses
/// `Q_ν = Q / (2ν)`.
pub fn make_strategy(strategy: Strategy, system: &StokesSystem, inner: &InnerOptions) -> Result<BlockDiagPreconditioner> {
    let (a, q) = (&system.a, &system.q_nu);
    let (top, bottom) = match strategy {
        Strategy::IdealAQ => (BlockSolver::exact(a)?, BlockSolver::exact(q)?),
        Strategy::PcgAQ => (BlockSolver::pcg_jacobi(a, *inner)?, BlockSolver::pcg_jacobi(q, *inner)?),
        Strategy::IdealADiagQ => (BlockSolver::exact(a)?, BlockSolver::jacobi(q)?),
        Strategy::PcgADiagQ => (BlockSolver::pcg_jacobi(a, *inner)?, BlockSolver::jacobi(q)?),
        Strategy::DiagAQ => (BlockSolver::jacobi(a)?, BlockSolver::jacobi(q)?),
        Strategy::Ic0PcgAQ => (BlockSolver::pcg_ic0(a, *inner)?, BlockSolver::pcg_ic0(q, *inner)?),
    };
    Ok(BlockDiagPreconditioner::new(top, bottom, strategy.label()))
}

/// Kernel of `Bᵀ`: the coefficients of the discrete constant pressure,
/// `Q⁻¹ m`. On the identity map this is the vector of ones.
pub fn pressure_kernel(system: &StokesSystem) -> Result<Vec<f64>> {
    if system.map.is_affine() {
        return Ok(vec![1.0; system.n_p()]);
    }
    complete_cholesky(&system.q, Ordering::Rcm)?.solve(&system.pressure_integrals)
}

/// Dense `S = B A⁻¹ Bᵀ`.
pub fn schur_complement(system: &StokesSystem) -> Result<DMatrix<f64>> {
    let (n_u, n_p) = (system.n_u(), system.n_p());
    if n_p > DEFAULT_EIG_CAP {
        return Err(Error::AnalysisCap { n: n_p, cap: DEFAULT_EIG_CAP });
    }
    let fa = complete_cholesky(&system.a, Ordering::Rcm)?;
    let mut s = DMatrix::zeros(n_p, n_p);
    let mut col = vec![0.0; n_u];
    let mut y = vec![0.0; n_u];
    let mut e = vec![0.0; n_p];
    for j in 0..n_p {
        e[j] = 1.0;
        system.bt.spmv_into(&e, &mut col, Default::default())?;
        e[j] = 0.0;
        fa.solve_into(&col, &mut y)?;
        let sj = system.b.spmv(&y)?;
        s.column_mut(j).copy_from_slice(&sj);
    }
    let sym = (&s + s.transpose()) * 0.5;
    Ok(sym)
}

/// `diag(A, S + c z zᵀ)` with the Schur complement `S` and its kernel `z`
/// lifted so the block is definite; MINRES then converges in at most three
/// iterations on consistent right-hand sides.
pub fn exact_schur_preconditioner(system: &StokesSystem) -> Result<BlockDiagPreconditioner> {
    let mut s = schur_complement(system)?;
    let z = DVector::from_vec(pressure_kernel(system)?);
    let c = s.trace() / (s.nrows() as f64 * z.norm_squared());
    s += &z * z.transpose() * c;
    Ok(BlockDiagPreconditioner::new(BlockSolver::exact(&system.a)?, BlockSolver::dense(s)?, "Exact-Schur"))
}

#[derive(Clone, Debug)]
pub struct StokesSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub report: SolveReport,
}

/// Removes the component along the kernel `z` so that `∫ p = mᵀ p = 0`.
pub fn filter_pressure(p: &mut [f64], m: &[f64], z: &[f64]) {
    let mz = dot(m, z);
    if mz == 0.0 {
        return;
    }
    let s = dot(m, p) / mz;
    for (p, z) in p.iter_mut().zip(z) {
        *p -= s * z;
    }
}

/// Solves the Stokes system by preconditioned MINRES from a zero initial
/// guess and filters the pressure to zero mean.
pub fn solve_stokes(
    system: &StokesSystem,
    precond: &mut dyn Preconditioner,
    opts: &MinresOptions,
) -> Result<StokesSolution> {
    let op = SaddlePointOperator::new(&system.a, &system.b, &system.bt);
    let rhs = system.full_rhs();
    let mut x = vec![0.0; op.dim()];
    let report = minres(&op, &rhs, precond, &mut x, opts)?;
    let pressure_part = x.split_off(system.n_u());
    let mut pressure = pressure_part;
    let z = pressure_kernel(system)?;
    filter_pressure(&mut pressure, &system.pressure_integrals, &z);
    Ok(StokesSolution { velocity: x, pressure, report })
}
