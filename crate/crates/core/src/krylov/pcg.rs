use super::{dot, norm, LinearOperator, Preconditioner};
use crate::{Error, Result};

/// Norm in which the relative residual is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualNorm {
    /// `sqrt(rᵀ M⁻¹ r)`.
    Preconditioned,
    /// `‖r‖₂`.
    Euclidean,
}

#[derive(Clone, Copy, Debug)]
pub struct PcgOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub norm: ResidualNorm,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
            norm: ResidualNorm::Preconditioned,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcgResult {
    pub iterations: usize,
    pub converged: bool,
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients. `x` holds the initial guess on entry.
pub fn pcg(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &mut dyn Preconditioner,
    x: &mut [f64],
    opts: &PcgOptions,
) -> Result<PcgResult> {
    let n = op.dim();
    for len in [b.len(), x.len(), precond.dim()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mut q = vec![0.0; n];
    op.apply(x, &mut q);
    let mut r: Vec<f64> = b.iter().zip(&q).map(|(b, a)| b - a).collect();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z)?;
    let mut rz = dot(&r, &z);
    if rz < 0.0 {
        return Err(Error::IndefinitePreconditioner { block: "M".into() });
    }
    let measure = |r: &[f64], rz: f64| match opts.norm {
        ResidualNorm::Preconditioned => rz.max(0.0).sqrt(),
        ResidualNorm::Euclidean => norm(r),
    };
    let r0 = measure(&r, rz);
    if r0 == 0.0 {
        return Ok(PcgResult { iterations: 0, converged: true, rel_residual: 0.0 });
    }
    let mut p = z.clone();
    let mut rel = 1.0;
    for it in 1..=opts.max_iter {
        op.apply(&p, &mut q);
        let curvature = dot(&p, &q);
        if curvature <= 0.0 {
            return Err(Error::NotPositiveDefinite { curvature });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        precond.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        if rz_new < 0.0 {
            return Err(Error::IndefinitePreconditioner { block: "M".into() });
        }
        rel = measure(&r, rz_new) / r0;
        if rel <= opts.tol {
            return Ok(PcgResult { iterations: it, converged: true, rel_residual: rel });
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(PcgResult {
        iterations: opts.max_iter,
        converged: false,
        rel_residual: rel,
    })
}
