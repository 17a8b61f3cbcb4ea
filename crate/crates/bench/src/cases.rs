//! The benchmark problems: a manufactured solution on the unit square, a
//! manufactured solution on an eighth of an annulus, and the lid-driven cavity.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use divstokes::analysis::ExactSolution;
use divstokes::assembly::ProblemConfig;
use divstokes::geometry::GeometricMap;
use divstokes::space::Side;
use divstokes::{Mat2, Point};

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseKind {
    Square,
    AnnulusPolar,
    AnnulusNurbs,
    Cavity,
}

impl CaseKind {
    pub const ALL: [CaseKind; 4] = [CaseKind::Square, CaseKind::AnnulusPolar, CaseKind::AnnulusNurbs, CaseKind::Cavity];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Square => "square",
            CaseKind::AnnulusPolar => "annulus-polar",
            CaseKind::AnnulusNurbs => "annulus-nurbs",
            CaseKind::Cavity => "cavity",
        }
    }

    pub fn map(self) -> GeometricMap {
        match self {
            CaseKind::Square | CaseKind::Cavity => GeometricMap::square(),
            CaseKind::AnnulusPolar => GeometricMap::polar_annulus(),
            CaseKind::AnnulusNurbs => GeometricMap::nurbs_annulus(),
        }
    }

    /// Closed-form solution, if the case has one, for viscosity `nu`.
    pub fn exact(self, nu: f64) -> Option<Box<dyn Manufactured>> {
        match self {
            CaseKind::Square => Some(Box::new(SquareSolution { nu })),
            CaseKind::AnnulusPolar | CaseKind::AnnulusNurbs => Some(Box::new(AnnulusSolution::new(nu))),
            CaseKind::Cavity => None,
        }
    }

    /// Problem data for pressure degree `k_prime`: body force for the
    /// manufactured cases, lid velocity for the cavity.
    pub fn problem(self, k_prime: usize, nu: f64, c_pen: f64) -> ProblemConfig {
        let cfg = ProblemConfig::new(k_prime).with_nu(nu).with_c_pen(c_pen);
        match self {
            CaseKind::Cavity => cfg.with_dirichlet(cavity_lid),
            CaseKind::Square => {
                let s = SquareSolution { nu };
                cfg.with_body_force(move |x| s.body_force(x))
            }
            CaseKind::AnnulusPolar | CaseKind::AnnulusNurbs => {
                let s = AnnulusSolution::new(nu);
                cfg.with_body_force(move |x| s.body_force(x))
            }
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        let key = s.trim().to_ascii_lowercase();
        CaseKind::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| BenchError::Config(format!("unknown case `{s}`")))
    }
}

/// Unit tangential velocity on the top edge, no slip elsewhere.
pub fn cavity_lid(_x: Point, side: Side) -> [f64; 2] {
    if side == Side::Top {
        [1.0, 0.0]
    } else {
        [0.0, 0.0]
    }
}

/// An exact solution together with its body force
/// `f = −∇·(2ν ε(u)) + ∇p = −ν Δu + ∇p` (u is solenoidal).
pub trait Manufactured: ExactSolution + Send {
    fn body_force(&self, x: Point) -> [f64; 2];
}

/// `ψ = g(x) h(y)` with `g = eˣ x²(x−1)²`, `h = (y²−y)²`, `u = (ψ_y, −ψ_x)`.
#[derive(Clone, Copy, Debug)]
pub struct SquareSolution {
    pub nu: f64,
}

impl SquareSolution {
    /// `g, g', g'', g'''`.
    fn g(x: f64) -> [f64; 4] {
        let q = [
            x.powi(4) - 2.0 * x.powi(3) + x * x,
            4.0 * x.powi(3) - 6.0 * x * x + 2.0 * x,
            12.0 * x * x - 12.0 * x + 2.0,
            24.0 * x - 12.0,
        ];
        let ex = x.exp();
        [
            ex * q[0],
            ex * (q[0] + q[1]),
            ex * (q[0] + 2.0 * q[1] + q[2]),
            ex * (q[0] + 3.0 * q[1] + 3.0 * q[2] + q[3]),
        ]
    }

    /// `h, h', h'', h'''`.
    fn h(y: f64) -> [f64; 4] {
        [
            y.powi(4) - 2.0 * y.powi(3) + y * y,
            4.0 * y.powi(3) - 6.0 * y * y + 2.0 * y,
            12.0 * y * y - 12.0 * y + 2.0,
            24.0 * y - 12.0,
        ]
    }

    fn pressure_gradient(x: Point) -> [f64; 2] {
        let (x, y) = (x[0], x[1]);
        let s = y * y - y;
        let ex = x.exp();
        let poly = 456.0 + 228.0 * x * x - 5.0 * s * x * x - 456.0 * x + 2.0 * s * x - 72.0 * x.powi(3)
            + 2.0 * s * x.powi(3)
            + 12.0 * x.powi(4)
            + s * x.powi(4);
        let poly_x = 456.0 * x - 10.0 * s * x - 456.0 + 2.0 * s - 216.0 * x * x + 6.0 * s * x * x + 48.0 * x.powi(3)
            + 4.0 * s * x.powi(3);
        let poly_s = -5.0 * x * x + 2.0 * x + 2.0 * x.powi(3) + x.powi(4);
        let t = -456.0 + ex * poly;
        [s * ex * (poly + poly_x), (2.0 * y - 1.0) * (t + s * ex * poly_s)]
    }
}

impl ExactSolution for SquareSolution {
    fn velocity(&self, x: Point) -> [f64; 2] {
        let (g, h) = (Self::g(x[0]), Self::h(x[1]));
        [g[0] * h[1], -g[1] * h[0]]
    }

    fn gradient(&self, x: Point) -> Mat2 {
        let (g, h) = (Self::g(x[0]), Self::h(x[1]));
        [[g[1] * h[1], g[0] * h[2]], [-g[2] * h[0], -g[1] * h[1]]]
    }

    fn pressure(&self, x: Point) -> f64 {
        let (x, y) = (x[0], x[1]);
        let s = y * y - y;
        let inner = 456.0 + x * x * (228.0 - 5.0 * s) + 2.0 * x * (-228.0 + s) + 2.0 * x.powi(3) * (-36.0 + s)
            + x.powi(4) * (12.0 + s);
        -424.0 + 156.0 * E + s * (-456.0 + x.exp() * inner)
    }
}

impl Manufactured for SquareSolution {
    fn body_force(&self, x: Point) -> [f64; 2] {
        let (g, h) = (Self::g(x[0]), Self::h(x[1]));
        let lap = [g[2] * h[1] + g[0] * h[3], -g[3] * h[0] - g[1] * h[2]];
        let gp = Self::pressure_gradient(x);
        [-self.nu * lap[0] + gp[0], -self.nu * lap[1] + gp[1]]
    }
}

/// Bivariate polynomial with exact differentiation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly2 {
    /// `(i, j) -> c` for the monomial `c xⁱ yʲ`.
    terms: BTreeMap<(u32, u32), f64>,
}

impl Poly2 {
    pub fn monomial(c: f64, i: u32, j: u32) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert((i, j), c);
        }
        Self { terms }
    }

    pub fn from_terms(terms: &[(f64, u32, u32)]) -> Self {
        terms.iter().fold(Self::default(), |acc, &(c, i, j)| acc.add(&Self::monomial(c, i, j)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (&k, &c) in &other.terms {
            *terms.entry(k).or_insert(0.0) += c;
        }
        terms.retain(|_, c| *c != 0.0);
        Self { terms }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(&k, &c)| (k, c * s)).filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = BTreeMap::new();
        for (&(i, j), &a) in &self.terms {
            for (&(k, l), &b) in &other.terms {
                *terms.entry((i + k, j + l)).or_insert(0.0) += a * b;
            }
        }
        terms.retain(|_, c: &mut f64| *c != 0.0);
        Self { terms }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::monomial(1.0, 0, 0), |acc, _| acc.mul(self))
    }

    pub fn dx(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|((i, _), _)| *i > 0)
                .map(|(&(i, j), &c)| ((i - 1, j), c * i as f64))
                .collect(),
        }
    }

    pub fn dy(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|((_, j), _)| *j > 0)
                .map(|(&(i, j), &c)| ((i, j - 1), c * j as f64))
                .collect(),
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.terms
            .iter()
            .map(|(&(i, j), &c)| c * x[0].powi(i as i32) * x[1].powi(j as i32))
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }
}

/// Sum of products of powers of polynomial factors. Differentiating by the
/// product rule keeps the factors, so a field built from factors that vanish
/// on a curve evaluates to zero there without cancellation.
#[derive(Clone, Debug, Default)]
pub struct Factored {
    terms: Vec<(f64, Vec<(Poly2, u32)>)>,
}

impl Factored {
    pub fn product(factors: Vec<(Poly2, u32)>) -> Self {
        Self {
            terms: vec![(1.0, factors)],
        }
    }

    fn derive(&self, d: impl Fn(&Poly2) -> Poly2) -> Self {
        let mut terms = Vec::new();
        for (c, factors) in &self.terms {
            for (i, (f, k)) in factors.iter().enumerate() {
                let df = d(f);
                if *k == 0 || df == Poly2::default() {
                    continue;
                }
                let mut next = factors.clone();
                next[i].1 -= 1;
                next.push((df, 1));
                next.retain(|(_, k)| *k > 0);
                terms.push((c * *k as f64, next));
            }
        }
        Self { terms }
    }

    pub fn dx(&self) -> Self {
        self.derive(Poly2::dx)
    }

    pub fn dy(&self) -> Self {
        self.derive(Poly2::dy)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(c, f)| (c * s, f.clone())).collect(),
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.terms
            .iter()
            .map(|(c, factors)| c * factors.iter().map(|(f, k)| f.eval(x).powi(*k as i32)).product::<f64>())
            .sum()
    }
}

/// Solution on `{1 < r < 2, 0 < θ < π/4}` from the stream function
/// `ψ = (r²−1)²(r²−4)² y²(x−y)²`, which vanishes with its gradient on all four
/// boundary curves, and the zero-mean pressure `p = x²y − p̄`.
#[derive(Clone, Debug)]
pub struct AnnulusSolution {
    pub nu: f64,
    u: [Factored; 2],
    grad: [[Factored; 2]; 2],
    laplacian: [Factored; 2],
    mean_p: f64,
}

impl AnnulusSolution {
    pub fn new(nu: f64) -> Self {
        let psi = Factored::product(vec![
            (Poly2::from_terms(&[(1.0, 2, 0), (1.0, 0, 2), (-1.0, 0, 0)]), 2),
            (Poly2::from_terms(&[(1.0, 2, 0), (1.0, 0, 2), (-4.0, 0, 0)]), 2),
            (Poly2::monomial(1.0, 0, 1), 2),
            (Poly2::from_terms(&[(1.0, 1, 0), (-1.0, 0, 1)]), 2),
        ]);
        let u = [psi.dy(), psi.dx().scale(-1.0)];
        let grad = [[u[0].dx(), u[0].dy()], [u[1].dx(), u[1].dy()]];
        let laplacian = [grad[0][0].dx().add(&grad[0][1].dy()), grad[1][0].dx().add(&grad[1][1].dy())];
        // ∫ x²y over the sector / its area 3π/8
        let integral = 31.0 / 15.0 * (1.0 - 2f64.sqrt() / 4.0);
        Self {
            nu,
            u,
            grad,
            laplacian,
            mean_p: integral / (3.0 * PI / 8.0),
        }
    }
}

impl ExactSolution for AnnulusSolution {
    fn velocity(&self, x: Point) -> [f64; 2] {
        [self.u[0].eval(x), self.u[1].eval(x)]
    }

    fn gradient(&self, x: Point) -> Mat2 {
        [
            [self.grad[0][0].eval(x), self.grad[0][1].eval(x)],
            [self.grad[1][0].eval(x), self.grad[1][1].eval(x)],
        ]
    }

    fn pressure(&self, x: Point) -> f64 {
        x[0] * x[0] * x[1] - self.mean_p
    }
}

impl Manufactured for AnnulusSolution {
    fn body_force(&self, x: Point) -> [f64; 2] {
        let gp = [2.0 * x[0] * x[1], x[0] * x[0]];
        [
            -self.nu * self.laplacian[0].eval(x) + gp[0],
            -self.nu * self.laplacian[1].eval(x) + gp[1],
        ]
    }
}
