//! Assembly of the discrete Stokes operators.
//!
//! The velocity is tested against Piola-mapped basis functions and the
//! pressure against integral-mapped ones. The tangential Dirichlet condition
//! is imposed weakly with Nitsche's method, so the viscous block is
//!
//! ```text
//! A_ij = (2ν ε(Φ_j), ε(Φ_i)) − Σ_F ∫_F 2ν ( (ε(Φ_i)n)·Φ_j + (ε(Φ_j)n)·Φ_i − C_pen/h_F Φ_j·Φ_i ) dS
//! ```
//!
//! with `B_kj = −(div Φ_j, φ_k)` and `Q_kl = (φ_l, φ_k)`. Element matrices
//! are computed independently (in parallel when enabled) and scattered in
//! element order into patterns built from support overlap, so the result is
//! independent of the execution policy.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{boundary_faces, BoundaryFace, GeometricMap};
use crate::par::Execution;
use crate::quadrature::GaussRule;
use crate::space::{DiscretePair, Side};
use crate::sparse::CsrMatrix;
use crate::{Error, Mat2, Point, Result};

/// Body force `f(x)`.
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Boundary velocity `g(x, side)`; only its tangential part enters.
pub type BoundaryData = Arc<dyn Fn(Point, Side) -> [f64; 2] + Send + Sync>;

/// Elements per parallel batch; bounds the memory held by element matrices.
const BATCH: usize = 512;

#[derive(Clone)]
pub struct ProblemConfig {
    pub nu: f64,
    pub c_pen: f64,
    /// Gauss points per direction per element; `None` selects
    /// [`default_quad_points`].
    pub quad_points: Option<usize>,
    pub body_force: VectorField,
    pub dirichlet: BoundaryData,
}

impl fmt::Debug for ProblemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemConfig")
            .field("nu", &self.nu)
            .field("c_pen", &self.c_pen)
            .field("quad_points", &self.quad_points)
            .finish_non_exhaustive()
    }
}

impl ProblemConfig {
    /// `ν = 1`, `C_pen = 5(k'+1)`, default quadrature, `f = 0`, `g = 0`.
    pub fn new(k_prime: usize) -> Self {
        Self {
            nu: 1.0,
            c_pen: default_penalty(k_prime),
            quad_points: None,
            body_force: Arc::new(|_| [0.0; 2]),
            dirichlet: Arc::new(|_, _| [0.0; 2]),
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_c_pen(mut self, c_pen: f64) -> Self {
        self.c_pen = c_pen;
        self
    }

    pub fn with_quad_points(mut self, n: usize) -> Self {
        self.quad_points = Some(n);
        self
    }

    pub fn with_body_force(mut self, f: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.body_force = Arc::new(f);
        self
    }

    pub fn with_dirichlet(mut self, g: impl Fn(Point, Side) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.dirichlet = Arc::new(g);
        self
    }

    /// Gauss points used for `pair` on `map`.
    pub fn quad_points_for(&self, pair: &DiscretePair, map: &GeometricMap) -> usize {
        self.quad_points.unwrap_or_else(|| default_quad_points(pair, map))
    }

    /// Checks `ν > 0`, `C_pen > 0` and at least one quadrature point.
    /// Returns a warning when the rule has fewer than `p + 1` points.
    pub fn validate(&self, pair: &DiscretePair) -> Result<Option<String>> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.c_pen > 0.0 && self.c_pen.is_finite()) {
            return Err(Error::Config(format!("penalty must be positive, got {}", self.c_pen)));
        }
        let Some(nq) = self.quad_points else {
            return Ok(None);
        };
        if nq == 0 {
            return Err(Error::Config("at least one quadrature point is required".into()));
        }
        let min = pair.degree() + 1;
        Ok((nq < min).then(|| format!("{nq} quadrature points is below p + 1 = {min}; integrals are inexact")))
    }
}

/// `p + 1` Gauss points on affine maps, where every integrand is a
/// polynomial integrated exactly; `p + 3` on curved maps, where the map
/// factors make the integrands non-polynomial.
pub fn default_quad_points(pair: &DiscretePair, map: &GeometricMap) -> usize {
    if map.is_affine() {
        pair.degree() + 1
    } else {
        pair.degree() + 3
    }
}

/// `C_pen = 5(k' + 1)`.
pub fn default_penalty(k_prime: usize) -> f64 {
    5.0 * (k_prime + 1) as f64
}

/// The assembled saddle-point system.
#[derive(Clone, Debug)]
pub struct StokesSystem {
    /// Viscous block including the Nitsche terms, `n_u x n_u`.
    pub a: CsrMatrix,
    /// Divergence block, `n_p x n_u`.
    pub b: CsrMatrix,
    /// `Bᵀ`, kept for fast products.
    pub bt: CsrMatrix,
    /// Velocity right-hand side.
    pub f: Vec<f64>,
    /// Pressure mass matrix.
    pub q: CsrMatrix,
    /// `Q / (2ν)`.
    pub q_nu: CsrMatrix,
    /// `∫_Ω φ_k` for every pressure basis function.
    pub pressure_integrals: Vec<f64>,
    pub pair: DiscretePair,
    pub map: GeometricMap,
    pub nu: f64,
    pub c_pen: f64,
    pub quad_points: usize,
    pub warnings: Vec<String>,
}

impl StokesSystem {
    pub fn n_u(&self) -> usize {
        self.pair.n_u()
    }

    pub fn n_p(&self) -> usize {
        self.pair.n_p()
    }

    pub fn dim(&self) -> usize {
        self.n_u() + self.n_p()
    }

    /// Right-hand side of the full system `[f; 0]`.
    pub fn full_rhs(&self) -> Vec<f64> {
        let mut r = self.f.clone();
        r.resize(self.dim(), 0.0);
        r
    }
}

/// Which blocks an assembly pass computes.
#[derive(Clone, Copy, Debug, Default)]
struct Blocks {
    viscous: bool,
    divergence: bool,
    mass: bool,
    rhs: bool,
}

#[derive(Default)]
struct Local {
    a: Vec<f64>,
    b: Vec<f64>,
    q: Vec<f64>,
    f: Vec<f64>,
    m: Vec<f64>,
}

struct Kernel<'a> {
    pair: &'a DiscretePair,
    map: &'a GeometricMap,
    cfg: &'a ProblemConfig,
    rule: GaussRule,
    faces: Vec<Vec<BoundaryFace>>,
    blocks: Blocks,
}

#[inline]
fn sym(g: &Mat2) -> Mat2 {
    let o = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], o], [o, g[1][1]]]
}

#[inline]
fn ddot(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

#[inline]
fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl<'a> Kernel<'a> {
    fn new(pair: &'a DiscretePair, map: &'a GeometricMap, cfg: &'a ProblemConfig, blocks: Blocks) -> Result<Self> {
        let mesh = pair.mesh();
        let nq = cfg.quad_points_for(pair, map);
        let mut faces: Vec<Vec<BoundaryFace>> = vec![Vec::new(); mesh.n_elements()];
        if blocks.viscous || blocks.rhs {
            for side in Side::ALL {
                for face in boundary_faces(map, mesh, side, nq)? {
                    faces[face.element].push(face);
                }
            }
        }
        Ok(Self {
            pair,
            map,
            cfg,
            rule: GaussRule::new(nq),
            faces,
            blocks,
        })
    }

    fn element(&self, e: usize) -> Result<Local> {
        let p = self.pair.degree();
        let nv = 2 * p * (p + 1);
        let np = p * p;
        let two_nu = 2.0 * self.cfg.nu;
        let bl = self.blocks;
        let mut out = Local {
            a: if bl.viscous { vec![0.0; nv * nv] } else { Vec::new() },
            b: if bl.divergence { vec![0.0; np * nv] } else { Vec::new() },
            q: if bl.mass { vec![0.0; np * np] } else { Vec::new() },
            f: if bl.rhs { vec![0.0; nv] } else { Vec::new() },
            m: if bl.mass { vec![0.0; np] } else { Vec::new() },
        };
        let el = self.pair.mesh().element(e);
        let mut phys: Vec<(Point, Mat2)> = Vec::with_capacity(nv);
        for (y, wy) in self.rule.mapped(el.y.0, el.y.1) {
            for (x, wx) in self.rule.mapped(el.x.0, el.x.1) {
                let xh = [x, y];
                let w = wx * wy;
                let m = self.map.eval(xh)?;
                let vb = self.pair.local_velocity_basis(e, xh);
                if bl.viscous || bl.rhs {
                    phys.clear();
                    phys.extend(vb.iter().map(|(v, g)| {
                        let (pv, pg) = m.piola(*v, *g);
                        (pv, sym(&pg))
                    }));
                }
                if bl.viscous {
                    let c = two_nu * w * m.det;
                    for i in 0..nv {
                        for j in i..nv {
                            out.a[i * nv + j] += c * ddot(&phys[i].1, &phys[j].1);
                        }
                    }
                }
                if bl.rhs {
                    let f = (self.cfg.body_force)(m.x);
                    for i in 0..nv {
                        out.f[i] += dot(&f, &phys[i].0) * w * m.det;
                    }
                }
                if bl.divergence || bl.mass {
                    let qb = self.pair.local_pressure_basis(e, xh);
                    let wj = w / m.det;
                    if bl.divergence {
                        for (k, &qk) in qb.iter().enumerate() {
                            for (i, (_, g)) in vb.iter().enumerate() {
                                out.b[k * nv + i] -= (g[0][0] + g[1][1]) * qk * wj;
                            }
                        }
                    }
                    if bl.mass {
                        for k in 0..np {
                            out.m[k] += qb[k] * w;
                            for l in k..np {
                                out.q[k * np + l] += qb[k] * qb[l] * wj;
                            }
                        }
                    }
                }
            }
        }
        if bl.viscous || bl.rhs {
            for face in &self.faces[e] {
                let pen = self.cfg.c_pen / face.h_f;
                for node in &face.nodes {
                    let m = &node.map;
                    let n = node.normal;
                    let vb = self.pair.local_velocity_basis(e, m.xh);
                    phys.clear();
                    phys.extend(vb.iter().map(|(v, g)| {
                        let (pv, pg) = m.piola(*v, *g);
                        (pv, sym(&pg))
                    }));
                    let traction: Vec<Point> = phys
                        .iter()
                        .map(|(_, s)| [s[0][0] * n[0] + s[0][1] * n[1], s[1][0] * n[0] + s[1][1] * n[1]])
                        .collect();
                    let c = two_nu * node.ds;
                    if bl.viscous {
                        for i in 0..nv {
                            for j in i..nv {
                                let eta = dot(&traction[i], &phys[j].0) + dot(&traction[j], &phys[i].0)
                                    - pen * dot(&phys[i].0, &phys[j].0);
                                out.a[i * nv + j] -= c * eta;
                            }
                        }
                    }
                    if bl.rhs {
                        let g = (self.cfg.dirichlet)(m.x, face.side);
                        for i in 0..nv {
                            out.f[i] += c * (-dot(&traction[i], &g) + pen * dot(&g, &phys[i].0));
                        }
                    }
                }
            }
        }
        if bl.viscous {
            for i in 0..nv {
                for j in 0..i {
                    out.a[i * nv + j] = out.a[j * nv + i];
                }
            }
        }
        if bl.mass {
            for k in 0..np {
                for l in 0..k {
                    out.q[k * np + l] = out.q[l * np + k];
                }
            }
        }
        Ok(out)
    }
}

struct Patterns {
    a: Option<CsrMatrix>,
    b: Option<CsrMatrix>,
    q: Option<CsrMatrix>,
}

fn patterns(pair: &DiscretePair, blocks: Blocks) -> Result<Patterns> {
    let ne = pair.mesh().n_elements();
    let mut ra: Vec<Vec<usize>> = if blocks.viscous { vec![Vec::new(); pair.n_u()] } else { Vec::new() };
    let mut rb: Vec<Vec<usize>> = if blocks.divergence { vec![Vec::new(); pair.n_p()] } else { Vec::new() };
    let mut rq: Vec<Vec<usize>> = if blocks.mass { vec![Vec::new(); pair.n_p()] } else { Vec::new() };
    for e in 0..ne {
        let dofs = pair.element_dofs(e)?;
        let kept: Vec<usize> = dofs.velocity().flatten().collect();
        if blocks.viscous {
            for &i in &kept {
                ra[i].extend_from_slice(&kept);
            }
        }
        for &k in &dofs.pressure {
            if blocks.divergence {
                rb[k].extend_from_slice(&kept);
            }
            if blocks.mass {
                rq[k].extend_from_slice(&dofs.pressure);
            }
        }
    }
    let (n_u, n_p) = (pair.n_u(), pair.n_p());
    Ok(Patterns {
        a: blocks.viscous.then(|| CsrMatrix::from_pattern(n_u, ra)).transpose()?,
        b: blocks.divergence.then(|| CsrMatrix::from_pattern(n_u, rb)).transpose()?,
        q: blocks.mass.then(|| CsrMatrix::from_pattern(n_p, rq)).transpose()?,
    })
}

#[inline]
fn add(m: &mut CsrMatrix, i: usize, j: usize, v: f64) {
    let k = m.entry_index(i, j).expect("entry outside the assembled pattern");
    m.values_mut()[k] += v;
}

struct Assembled {
    a: Option<CsrMatrix>,
    b: Option<CsrMatrix>,
    q: Option<CsrMatrix>,
    f: Vec<f64>,
    m: Vec<f64>,
}

fn assemble(
    pair: &DiscretePair,
    map: &GeometricMap,
    cfg: &ProblemConfig,
    blocks: Blocks,
    exec: Execution,
) -> Result<Assembled> {
    cfg.validate(pair)?;
    let kernel = Kernel::new(pair, map, cfg, blocks)?;
    let Patterns { mut a, mut b, mut q } = patterns(pair, blocks)?;
    let mut f = vec![0.0; if blocks.rhs { pair.n_u() } else { 0 }];
    let mut m = vec![0.0; if blocks.mass { pair.n_p() } else { 0 }];
    let p = pair.degree();
    let nv = 2 * p * (p + 1);
    let np = p * p;
    let ne = pair.mesh().n_elements();
    let mut start = 0;
    while start < ne {
        let end = (start + BATCH).min(ne);
        let locals = exec.map(start..end, |e| kernel.element(e));
        for (e, local) in (start..end).zip(locals) {
            let local = local?;
            let dofs = pair.element_dofs(e)?;
            let vel: Vec<Option<usize>> = dofs.velocity().collect();
            if let Some(a) = a.as_mut() {
                for (li, gi) in vel.iter().enumerate() {
                    let Some(gi) = *gi else { continue };
                    for (lj, gj) in vel.iter().enumerate() {
                        if let Some(gj) = *gj {
                            add(a, gi, gj, local.a[li * nv + lj]);
                        }
                    }
                }
            }
            if let Some(b) = b.as_mut() {
                for (k, &gk) in dofs.pressure.iter().enumerate() {
                    for (lj, gj) in vel.iter().enumerate() {
                        if let Some(gj) = *gj {
                            add(b, gk, gj, local.b[k * nv + lj]);
                        }
                    }
                }
            }
            if let Some(q) = q.as_mut() {
                for (k, &gk) in dofs.pressure.iter().enumerate() {
                    m[gk] += local.m[k];
                    for (l, &gl) in dofs.pressure.iter().enumerate() {
                        add(q, gk, gl, local.q[k * np + l]);
                    }
                }
            }
            if blocks.rhs {
                for (li, gi) in vel.iter().enumerate() {
                    if let Some(gi) = *gi {
                        f[gi] += local.f[li];
                    }
                }
            }
        }
        start = end;
    }
    Ok(Assembled { a, b, q, f, m })
}

pub fn assemble_viscous(pair: &DiscretePair, map: &GeometricMap, cfg: &ProblemConfig) -> Result<CsrMatrix> {
    assemble_viscous_with(pair, map, cfg, Execution::default())
}

pub fn assemble_viscous_with(
    pair: &DiscretePair,
    map: &GeometricMap,
    cfg: &ProblemConfig,
    exec: Execution,
) -> Result<CsrMatrix> {
    let blocks = Blocks { viscous: true, ..Default::default() };
    Ok(assemble(pair, map, cfg, blocks, exec)?.a.unwrap())
}

pub fn assemble_divergence(pair: &DiscretePair, map: &GeometricMap, quad_points: Option<usize>) -> Result<CsrMatrix> {
    let cfg = ProblemConfig { quad_points, ..ProblemConfig::new(pair.k_prime()) };
    let blocks = Blocks { divergence: true, ..Default::default() };
    Ok(assemble(pair, map, &cfg, blocks, Execution::default())?.b.unwrap())
}

/// Pressure mass matrix and the integrals `∫_Ω φ_k`.
pub fn assemble_pressure_mass(
    pair: &DiscretePair,
    map: &GeometricMap,
    quad_points: Option<usize>,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let cfg = ProblemConfig { quad_points, ..ProblemConfig::new(pair.k_prime()) };
    let blocks = Blocks { mass: true, ..Default::default() };
    let out = assemble(pair, map, &cfg, blocks, Execution::default())?;
    Ok((out.q.unwrap(), out.m))
}

pub fn assemble_rhs(pair: &DiscretePair, map: &GeometricMap, cfg: &ProblemConfig) -> Result<Vec<f64>> {
    let blocks = Blocks { rhs: true, ..Default::default() };
    Ok(assemble(pair, map, cfg, blocks, Execution::default())?.f)
}

/// Assembles every block in one pass over the elements.
pub fn assemble_stokes(pair: &DiscretePair, map: &GeometricMap, cfg: &ProblemConfig) -> Result<StokesSystem> {
    assemble_stokes_with(pair, map, cfg, Execution::default())
}

pub fn assemble_stokes_with(
    pair: &DiscretePair,
    map: &GeometricMap,
    cfg: &ProblemConfig,
    exec: Execution,
) -> Result<StokesSystem> {
    let warnings: Vec<String> = cfg.validate(pair)?.into_iter().collect();
    let blocks = Blocks {
        viscous: true,
        divergence: true,
        mass: true,
        rhs: true,
    };
    let out = assemble(pair, map, cfg, blocks, exec)?;
    let (a, b, q) = (out.a.unwrap(), out.b.unwrap(), out.q.unwrap());
    let q_nu = q.scaled(1.0 / (2.0 * cfg.nu));
    Ok(StokesSystem {
        bt: b.transpose(),
        a,
        b,
        f: out.f,
        q,
        q_nu,
        pressure_integrals: out.m,
        pair: pair.clone(),
        map: map.clone(),
        nu: cfg.nu,
        c_pen: cfg.c_pen,
        quad_points: cfg.quad_points_for(pair, map),
        warnings,
    })
}
