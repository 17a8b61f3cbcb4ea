use std::time::{Duration, Instant};

use super::{dot, norm, LinearOperator, Preconditioner, ResidualNorm};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct MinresOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Also record `‖b − A x_k‖₂ / ‖b − A x₀‖₂` (one extra product per step).
    pub track_true_residual: bool,
    /// Norm the stopping test uses. `Euclidean` implies tracking the true
    /// residual; the reported history stays in the `M⁻¹` norm.
    pub stop_norm: ResidualNorm,
}

impl Default for MinresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            track_true_residual: false,
            stop_norm: ResidualNorm::Preconditioned,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// `‖r_k‖_{M⁻¹} / ‖r_0‖_{M⁻¹}`; `history[0] = 1`.
    pub history: Vec<f64>,
    /// Euclidean relative residuals when tracked.
    pub true_history: Option<Vec<f64>>,
    pub wall_time: Duration,
    pub top_inner_mean: Option<f64>,
    pub bottom_inner_mean: Option<f64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.history.last().unwrap_or(&0.0)
    }
}

fn check_rz(rz: f64) -> Result<f64> {
    if rz < 0.0 || !rz.is_finite() {
        return Err(Error::IndefinitePreconditioner { block: "M".into() });
    }
    Ok(rz.sqrt())
}

/// Preconditioned MINRES (Lanczos with Givens QR). `x` holds the initial
/// guess on entry and the iterate on return. The operator may be singular
/// provided `b` is consistent.
pub fn minres(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &mut dyn Preconditioner,
    x: &mut [f64],
    opts: &MinresOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    let n = op.dim();
    for len in [b.len(), x.len(), precond.dim()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mut report = SolveReport::default();

    let mut ax = vec![0.0; n];
    op.apply(x, &mut ax);
    let mut r1: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut y = vec![0.0; n];
    precond.apply(&r1, &mut y)?;
    let beta1 = check_rz(dot(&r1, &y))?;
    report.history.push(1.0);
    let true0 = norm(&r1);
    let euclidean = opts.stop_norm == ResidualNorm::Euclidean;
    let mut true_hist = (opts.track_true_residual || euclidean).then(|| vec![1.0]);
    if beta1 == 0.0 {
        report.converged = true;
        report.true_history = true_hist;
        report.wall_time = start.elapsed();
        return Ok(report);
    }

    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];

    for itn in 1..=opts.max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        op.apply(&v, &mut y);
        if itn >= 2 {
            let c = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= c * ri;
            }
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= c * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond.apply(&r2, &mut y)?;
        oldb = beta;
        beta = check_rz(dot(&r2, &y))?;

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }

        let rel = phibar / beta1;
        report.history.push(rel);
        report.iterations = itn;
        let mut stop = rel;
        if let Some(h) = true_hist.as_mut() {
            op.apply(x, &mut ax);
            let r: f64 = b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt();
            let t = if true0 > 0.0 { r / true0 } else { 0.0 };
            h.push(t);
            if euclidean {
                stop = t;
            }
        }
        if stop <= opts.tol || beta == 0.0 {
            report.converged = true;
            break;
        }
    }
    let (top, bottom) = precond.inner_means();
    report.top_inner_mean = top;
    report.bottom_inner_mean = bottom;
    report.true_history = true_hist;
    report.wall_time = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{pcg, IdentityPreconditioner, PcgOptions};
    use crate::sparse::CsrMatrix;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    struct Jacobi(Vec<f64>);

    impl Preconditioner for Jacobi {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
            for i in 0..r.len() {
                z[i] = r[i] / self.0[i];
            }
            Ok(())
        }
    }

    fn random_symmetric(n: usize, seed: u64, shift: f64) -> CsrMatrix {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = &b + b.transpose() + DMatrix::identity(n, n) * shift;
        CsrMatrix::from_dense(&a, 0.0)
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let mut x = vec![0.0; 5];
        let rep = minres(&a, &b, &mut IdentityPreconditioner(5), &mut x, &MinresOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert!(x.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-15));
    }

    #[test]
    fn zero_rhs_returns_immediately() {
        let a = CsrMatrix::identity(3);
        let mut x = vec![0.0; 3];
        let rep = minres(&a, &[0.0; 3], &mut IdentityPreconditioner(3), &mut x, &MinresOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.history, vec![1.0]);
    }

    #[test]
    fn solves_an_indefinite_system() {
        let a = random_symmetric(40, 1, 0.0);
        let xe: Vec<f64> = (0..40).map(|i| (i as f64).cos()).collect();
        let b = a.spmv(&xe).unwrap();
        let mut x = vec![0.0; 40];
        let opts = MinresOptions { tol: 1e-12, max_iter: 500, track_true_residual: true, ..Default::default() };
        let rep = minres(&a, &b, &mut IdentityPreconditioner(40), &mut x, &opts).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.history.len(), rep.iterations + 1);
        let err = x.iter().zip(&xe).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8);
        assert!(*rep.true_history.unwrap().last().unwrap() < 1e-10);
    }

    #[test]
    fn singular_consistent_system() {
        // diag(0, 1, 2, ...) with b orthogonal to the kernel.
        let d: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let a = CsrMatrix::from_diagonal(&d);
        let mut b: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        b[0] = 0.0;
        let mut x = vec![0.0; 10];
        let rep = minres(&a, &b, &mut IdentityPreconditioner(10), &mut x, &MinresOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(x[0], 0.0);
        for i in 1..10 {
            assert!((x[i] - b[i] / d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let a = random_symmetric(60, 2, 0.0);
        let b = vec![1.0; 60];
        let mut x = vec![0.0; 60];
        let opts = MinresOptions { tol: 1e-14, max_iter: 3, ..Default::default() };
        let rep = minres(&a, &b, &mut IdentityPreconditioner(60), &mut x, &opts).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn euclidean_stopping_test() {
        let a = random_symmetric(40, 5, 0.5);
        let b = vec![1.0; 40];
        let mut x = vec![0.0; 40];
        let opts = MinresOptions { tol: 1e-9, max_iter: 400, stop_norm: ResidualNorm::Euclidean, ..Default::default() };
        let rep = minres(&a, &b, &mut IdentityPreconditioner(40), &mut x, &opts).unwrap();
        assert!(rep.converged);
        let th = rep.true_history.unwrap();
        assert_eq!(th.len(), rep.history.len());
        assert!(*th.last().unwrap() <= 1e-9);
        assert!(th[th.len() - 2] > 1e-9);
    }

    #[test]
    fn indefinite_preconditioner_is_detected() {
        let a = CsrMatrix::identity(3);
        let mut m = Jacobi(vec![1.0, -1.0, 1.0]);
        let mut x = vec![0.0; 3];
        let r = minres(&a, &[0.0, 1.0, 0.0], &mut m, &mut x, &MinresOptions::default());
        assert!(matches!(r, Err(Error::IndefinitePreconditioner { .. })));
    }

    #[test]
    fn agrees_with_pcg_on_spd_systems() {
        let a = random_symmetric(50, 3, 30.0);
        let diag = a.diagonal();
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut xm = vec![0.0; 50];
        minres(&a, &b, &mut Jacobi(diag.clone()), &mut xm, &MinresOptions::default()).unwrap();
        let mut xc = vec![0.0; 50];
        let opts = PcgOptions { tol: 1e-14, ..Default::default() };
        pcg(&a, &b, &mut Jacobi(diag), &mut xc, &opts).unwrap();
        let xd = a.to_dense().lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..50 {
            assert!((xm[i] - xc[i]).abs() < 1e-10);
            assert!((xm[i] - xd[i]).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn residual_history_is_monotone(n in 2usize..40, seed in any::<u64>(), shift in -2.0f64..2.0, precond in any::<bool>()) {
            let a = random_symmetric(n, seed, shift);
            let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).sin()).collect();
            let mut x = vec![0.0; n];
            let opts = MinresOptions { tol: 1e-10, max_iter: 3 * n, ..Default::default() };
            let rep = if precond {
                let d: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
                minres(&a, &b, &mut Jacobi(d), &mut x, &opts).unwrap()
            } else {
                minres(&a, &b, &mut IdentityPreconditioner(n), &mut x, &opts).unwrap()
            };
            prop_assert_eq!(rep.history[0], 1.0);
            for w in rep.history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-10));
            }
        }
    }
}
