//! Error norms, inf-sup and boundedness constants, preconditioned spectra
//! with their theoretical inclusion sets, and pointwise divergence checks.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::assembly::StokesSystem;
use crate::geometry::GeometricMap;
use crate::krylov::{schur_complement, Strategy};
use crate::par::Execution;
use crate::quadrature::GaussRule;
use crate::space::DiscretePair;
use crate::sparse::{dense_gen_eig, CsrMatrix};
use crate::{Error, Mat2, Point, Result};

/// A closed-form velocity/pressure pair on the physical domain.
pub trait ExactSolution: Sync {
    fn velocity(&self, x: Point) -> [f64; 2];
    /// `g[r][c] = ∂u_r/∂x_c`.
    fn gradient(&self, x: Point) -> Mat2;
    fn pressure(&self, x: Point) -> f64;
}

/// Physical velocity and gradient of a coefficient vector at a parametric
/// point of element `e`, with the physical point.
pub fn eval_velocity(
    pair: &DiscretePair,
    map: &GeometricMap,
    u: &[f64],
    e: usize,
    xh: Point,
) -> Result<(Point, [f64; 2], Mat2)> {
    let (vh, gh) = pair.eval_parametric_velocity(u, e, xh)?;
    let m = map.eval(xh)?;
    let (v, g) = m.piola(vh, gh);
    Ok((m.x, v, g))
}

/// Physical pressure of a coefficient vector at a parametric point.
pub fn eval_pressure(pair: &DiscretePair, map: &GeometricMap, p: &[f64], e: usize, xh: Point) -> Result<(Point, f64)> {
    let qh = pair.eval_parametric_pressure(p, e, xh)?;
    let m = map.eval(xh)?;
    Ok((m.x, m.integral(qh)))
}

/// Gauss points of element `e` with their parametric weights.
fn element_points(pair: &DiscretePair, rule: &GaussRule, e: usize) -> Vec<(Point, f64)> {
    let el = pair.mesh().element(e);
    let mut out = Vec::with_capacity(rule.len() * rule.len());
    for (y, wy) in rule.mapped(el.y.0, el.y.1) {
        for (x, wx) in rule.mapped(el.x.0, el.x.1) {
            out.push(([x, y], wx * wy));
        }
    }
    out
}

/// Errors on one mesh level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    /// Parametric element size `1 / n_elem`.
    pub h: f64,
    /// `|u − u_h|_{H¹}`.
    pub h1_velocity: f64,
    pub l2_velocity: f64,
    /// `‖p − p_h‖_{L²}` modulo constants.
    pub l2_pressure: f64,
}

/// Velocity and pressure errors by Gauss quadrature with `quad_points` per
/// direction. Pressures are compared modulo constants: the mean of `p − p_h`
/// is removed before taking the norm.
pub fn error_norms(
    pair: &DiscretePair,
    map: &GeometricMap,
    u: &[f64],
    p: &[f64],
    exact: &dyn ExactSolution,
    quad_points: usize,
) -> Result<ErrorNorms> {
    let rule = GaussRule::new(quad_points);
    let per_element = Execution::default().map(0..pair.mesh().n_elements(), |e| -> Result<[f64; 5]> {
        let mut s = [0.0; 5];
        for (xh, w) in element_points(pair, &rule, e) {
            let m = map.eval(xh)?;
            let (vh, gh) = pair.eval_parametric_velocity(u, e, xh)?;
            let (v, g) = m.piola(vh, gh);
            let ph = m.integral(pair.eval_parametric_pressure(p, e, xh)?);
            let dx = w * m.det;
            let (ve, ge) = (exact.velocity(m.x), exact.gradient(m.x));
            let dp = exact.pressure(m.x) - ph;
            for r in 0..2 {
                s[1] += dx * (ve[r] - v[r]).powi(2);
                for c in 0..2 {
                    s[0] += dx * (ge[r][c] - g[r][c]).powi(2);
                }
            }
            s[2] += dx * dp * dp;
            s[3] += dx * dp;
            s[4] += dx;
        }
        Ok(s)
    });
    let mut s = [0.0; 5];
    for part in per_element {
        for (a, b) in s.iter_mut().zip(part?) {
            *a += b;
        }
    }
    let (mean, area) = (s[3] / s[4], s[4]);
    Ok(ErrorNorms {
        h: 1.0 / pair.n_elem() as f64,
        h1_velocity: s[0].sqrt(),
        l2_velocity: s[1].sqrt(),
        l2_pressure: (s[2] - mean * mean * area).max(0.0).sqrt(),
    })
}

/// Observed orders `log2(e_{2h} / e_h)` between consecutive levels, for the
/// H¹ velocity, L² velocity and L² pressure errors.
pub fn convergence_orders(levels: &[ErrorNorms]) -> Vec<[f64; 3]> {
    levels
        .windows(2)
        .map(|w| {
            let r = (w[0].h / w[1].h).log2();
            [
                (w[0].h1_velocity / w[1].h1_velocity).log2() / r,
                (w[0].l2_velocity / w[1].l2_velocity).log2() / r,
                (w[0].l2_pressure / w[1].l2_pressure).log2() / r,
            ]
        })
        .collect()
}

/// CSV with one row per level; orders are empty on the first row.
pub fn errors_csv(levels: &[ErrorNorms]) -> String {
    let orders = convergence_orders(levels);
    let mut out = String::from("h,h1_velocity,h1_order,l2_velocity,l2u_order,l2_pressure,l2p_order\n");
    for (i, l) in levels.iter().enumerate() {
        let o = if i == 0 {
            [String::new(), String::new(), String::new()]
        } else {
            orders[i - 1].map(|v| format!("{v:.4}"))
        };
        let _ = writeln!(
            out,
            "{},{:.6e},{},{:.6e},{},{:.6e},{}",
            l.h, l.h1_velocity, o[0], l.l2_velocity, o[1], l.l2_pressure, o[2]
        );
    }
    out
}

/// Maximum pointwise physical divergence of a discrete velocity over the
/// Gauss points of every element.
pub fn divergence_free_check(pair: &DiscretePair, map: &GeometricMap, u: &[f64], quad_points: usize) -> Result<f64> {
    let rule = GaussRule::new(quad_points);
    let per_element = Execution::default().map(0..pair.mesh().n_elements(), |e| -> Result<f64> {
        let mut worst = 0.0f64;
        for (xh, _) in element_points(pair, &rule, e) {
            let (_, _, g) = eval_velocity(pair, map, u, e, xh)?;
            worst = worst.max((g[0][0] + g[1][1]).abs());
        }
        Ok(worst)
    });
    per_element.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

/// Maximum pointwise velocity magnitude over the same Gauss points, the
/// natural scale for [`divergence_free_check`].
pub fn max_velocity(pair: &DiscretePair, map: &GeometricMap, u: &[f64], quad_points: usize) -> Result<f64> {
    let rule = GaussRule::new(quad_points);
    let per_element = Execution::default().map(0..pair.mesh().n_elements(), |e| -> Result<f64> {
        let mut worst = 0.0f64;
        for (xh, _) in element_points(pair, &rule, e) {
            let (_, v, _) = eval_velocity(pair, map, u, e, xh)?;
            worst = worst.max(v[0].hypot(v[1]));
        }
        Ok(worst)
    });
    per_element.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

/// Squared inf-sup and boundedness constants: the extreme nonzero
/// eigenvalues of `(B A⁻¹ Bᵀ, Q_ν)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfSup {
    pub beta0_sq: f64,
    pub cb_sq: f64,
    /// Eigenvalues discarded as the pressure kernel.
    pub kernel_dim: usize,
}

impl InfSup {
    pub fn beta0(&self) -> f64 {
        self.beta0_sq.sqrt()
    }

    pub fn cb(&self) -> f64 {
        self.cb_sq.sqrt()
    }
}

/// Relative threshold below which a Schur eigenvalue counts as kernel.
pub const KERNEL_TOL: f64 = 1e-10;

pub fn infsup_constants(system: &StokesSystem) -> Result<InfSup> {
    let s = schur_complement(system)?;
    let ev = dense_gen_eig(&s, &system.q_nu.to_dense())?;
    let cb_sq = *ev.last().ok_or_else(|| Error::InvalidMatrix("empty pressure space".into()))?;
    let kept: Vec<f64> = ev.iter().copied().filter(|&l| l > KERNEL_TOL * cb_sq).collect();
    Ok(InfSup {
        beta0_sq: kept[0],
        cb_sq,
        kernel_dim: ev.len() - kept.len(),
    })
}

/// Fixed approximation of a diagonal block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockApprox {
    /// The block itself.
    Exact,
    /// Its diagonal.
    Jacobi,
    /// The identity.
    Identity,
}

impl BlockApprox {
    fn dense(self, block: &CsrMatrix) -> DMatrix<f64> {
        match self {
            BlockApprox::Exact => block.to_dense(),
            BlockApprox::Jacobi => DMatrix::from_diagonal(&block.diagonal().into()),
            BlockApprox::Identity => DMatrix::identity(block.n_rows(), block.n_rows()),
        }
    }

    /// Block approximations of a strategy with fixed (non-iterative) blocks.
    pub fn of_strategy(strategy: Strategy) -> Result<(BlockApprox, BlockApprox)> {
        match strategy {
            Strategy::IdealAQ => Ok((BlockApprox::Exact, BlockApprox::Exact)),
            Strategy::IdealADiagQ => Ok((BlockApprox::Exact, BlockApprox::Jacobi)),
            Strategy::DiagAQ => Ok((BlockApprox::Jacobi, BlockApprox::Jacobi)),
            other => Err(Error::Unsupported(format!(
                "{other} has iterative blocks and no fixed preconditioner matrix"
            ))),
        }
    }
}

/// Extreme eigenvalues `(γ, Γ)` of `(block, M_block)`.
pub fn block_bounds(block: &CsrMatrix, approx: BlockApprox) -> Result<(f64, f64)> {
    if approx == BlockApprox::Exact {
        return Ok((1.0, 1.0));
    }
    let ev = dense_gen_eig(&block.to_dense(), &approx.dense(block))?;
    Ok((ev[0], ev[ev.len() - 1]))
}

/// The Stokes matrix `[A Bᵀ; B 0]` as a dense matrix.
pub fn saddle_dense(system: &StokesSystem) -> DMatrix<f64> {
    let (nu, np) = (system.n_u(), system.n_p());
    let mut k = DMatrix::zeros(nu + np, nu + np);
    k.view_mut((0, 0), (nu, nu)).copy_from(&system.a.to_dense());
    let b = system.b.to_dense();
    k.view_mut((nu, 0), (np, nu)).copy_from(&b);
    k.view_mut((0, nu), (nu, np)).copy_from(&b.transpose());
    k
}

/// Extreme negative and positive eigenvalues, ignoring the kernel and the
/// cluster at one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitingEigenvalues {
    pub neg_min: f64,
    pub neg_max: f64,
    pub pos_min: f64,
    pub pos_max: f64,
}

impl LimitingEigenvalues {
    pub fn as_array(&self) -> [f64; 4] {
        [self.neg_min, self.neg_max, self.pos_min, self.pos_max]
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// All eigenvalues of `M⁻¹𝒜`, ascending.
    pub eigenvalues: Vec<f64>,
    pub limits: LimitingEigenvalues,
    /// Eigenvalues treated as zero.
    pub n_zero: usize,
    /// Eigenvalues within `tol` of one.
    pub n_one: usize,
}

/// Eigenvalues of `M⁻¹𝒜` with `M = diag(M_A, M_Q)` built from `Q_ν`.
pub fn preconditioned_spectrum(system: &StokesSystem, top: BlockApprox, bottom: BlockApprox) -> Result<Spectrum> {
    let (nu, np) = (system.n_u(), system.n_p());
    let k = saddle_dense(system);
    let mut m = DMatrix::zeros(nu + np, nu + np);
    m.view_mut((0, 0), (nu, nu)).copy_from(&top.dense(&system.a));
    m.view_mut((nu, nu), (np, np)).copy_from(&bottom.dense(&system.q_nu));
    let eigenvalues = dense_gen_eig(&k, &m)?;
    limiting(eigenvalues)
}

fn limiting(eigenvalues: Vec<f64>) -> Result<Spectrum> {
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero = KERNEL_TOL * scale;
    let one = 1e-8;
    let is_zero = |l: f64| l.abs() <= zero;
    let is_one = |l: f64| (l - 1.0).abs() <= one;
    let neg: Vec<f64> = eigenvalues.iter().copied().filter(|&l| l < 0.0 && !is_zero(l)).collect();
    let pos: Vec<f64> = eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > 0.0 && !is_zero(l) && !is_one(l))
        .collect();
    if neg.is_empty() || pos.is_empty() {
        return Err(Error::InvalidMatrix("spectrum is not indefinite".into()));
    }
    let limits = LimitingEigenvalues {
        neg_min: neg[0],
        neg_max: neg[neg.len() - 1],
        pos_min: pos[0],
        pos_max: pos[pos.len() - 1],
    };
    let n_zero = eigenvalues.iter().filter(|&&l| is_zero(l)).count();
    let n_one = eigenvalues.iter().filter(|&&l| is_one(l)).count();
    Ok(Spectrum { eigenvalues, limits, n_zero, n_one })
}

/// A union of closed intervals containing a spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionSet {
    pub intervals: Vec<(f64, f64)>,
}

impl InclusionSet {
    /// Set for exact blocks: `[(1−√(1+4C_b²))/2, (1−√(1+4β₀²))/2] ∪ {1} ∪
    /// [(1+√(1+4β₀²))/2, (1+√(1+4C_b²))/2]`.
    pub fn ideal(c: &InfSup) -> Self {
        let lo = (1.0 + 4.0 * c.beta0_sq).sqrt();
        let hi = (1.0 + 4.0 * c.cb_sq).sqrt();
        Self {
            intervals: vec![
                ((1.0 - hi) / 2.0, (1.0 - lo) / 2.0),
                (1.0, 1.0),
                ((1.0 + lo) / 2.0, (1.0 + hi) / 2.0),
            ],
        }
    }

    /// Set for general SPD blocks with `γ_A ≤ A/M_A ≤ Γ_A` and
    /// `γ_Q ≤ Q_ν/M_Q ≤ Γ_Q`.
    pub fn general(c: &InfSup, a: (f64, f64), q: (f64, f64)) -> Self {
        let ((ga, gam_a), (gq, gam_q)) = (a, q);
        let neg_lo = (ga - (ga * ga + 4.0 * c.cb_sq * gam_a * gam_q).sqrt()) / 2.0;
        let neg_hi = (ga - (ga * ga + 4.0 * c.beta0_sq * ga * gq).sqrt()) / 2.0;
        let pos_hi = (gam_a + (gam_a * gam_a + 4.0 * c.cb_sq * gam_a * gam_q).sqrt()) / 2.0;
        Self {
            intervals: vec![(neg_lo, neg_hi), (ga, pos_hi)],
        }
    }

    /// Whether `l` lies in the set up to a relative slack.
    pub fn contains(&self, l: f64, slack: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| {
            let tol = slack * a.abs().max(b.abs()).max(1.0);
            l >= a - tol && l <= b + tol
        })
    }

    /// Eigenvalues outside the set, ignoring the kernel.
    pub fn violations(&self, s: &Spectrum, slack: f64) -> Vec<f64> {
        let scale = s.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        s.eigenvalues
            .iter()
            .copied()
            .filter(|l| l.abs() > KERNEL_TOL * scale && !self.contains(*l, slack))
            .collect()
    }
}

/// Everything the spectral analysis measures for one strategy.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub strategy: Strategy,
    pub infsup: InfSup,
    pub a_bounds: (f64, f64),
    pub q_bounds: (f64, f64),
    pub spectrum: Spectrum,
    pub inclusion: InclusionSet,
}

pub fn spectral_report(system: &StokesSystem, strategy: Strategy) -> Result<SpectralReport> {
    let (top, bottom) = BlockApprox::of_strategy(strategy)?;
    let infsup = infsup_constants(system)?;
    let a_bounds = block_bounds(&system.a, top)?;
    let q_bounds = block_bounds(&system.q_nu, bottom)?;
    let spectrum = preconditioned_spectrum(system, top, bottom)?;
    let inclusion = if strategy == Strategy::IdealAQ {
        InclusionSet::ideal(&infsup)
    } else {
        InclusionSet::general(&infsup, a_bounds, q_bounds)
    };
    Ok(SpectralReport {
        strategy,
        infsup,
        a_bounds,
        q_bounds,
        spectrum,
        inclusion,
    })
}

impl SpectralReport {
    /// Single-row summary CSV with a header.
    pub fn summary_csv(&self) -> String {
        let l = self.spectrum.limits;
        format!(
            "strategy,beta0_sq,cb_sq,gamma_a,Gamma_a,gamma_q,Gamma_q,neg_min,neg_max,pos_min,pos_max\n\
             {},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6},{:.6},{:.6},{:.6}\n",
            self.strategy.slug(),
            self.infsup.beta0_sq,
            self.infsup.cb_sq,
            self.a_bounds.0,
            self.a_bounds.1,
            self.q_bounds.0,
            self.q_bounds.1,
            l.neg_min,
            l.neg_max,
            l.pos_min,
            l.pos_max
        )
    }
}

/// One eigenvalue per row, `index,eigenvalue`.
pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, l) in s.eigenvalues.iter().enumerate() {
        let _ = writeln!(out, "{i},{l:.17e}");
    }
    out
}
