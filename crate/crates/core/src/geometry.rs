//! Parametric-to-physical maps on the unit square and the pushforwards that
//! carry the discrete spaces onto the physical domain.
//!
//! Three maps are provided: the identity, a polar parameterization of the
//! annular sector `1 < r < 2, 0 < θ < π/4`, and an exact rational
//! (NURBS) parameterization of the same sector. In both annulus maps `x̂₁`
//! is the radial and `x̂₂` the angular direction.

use std::f64::consts::FRAC_PI_4;

use crate::quadrature::GaussRule;
use crate::space::{ParametricMesh, Side};
use crate::spline::{KnotVector, UnivariateSpace};
use crate::{Error, Mat2, Point, Result};

/// `det DF` at or below this value is reported as a singular map.
pub const SINGULAR_TOL: f64 = 1e-14;

/// Map data at one parametric point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapEval {
    pub xh: Point,
    pub x: Point,
    /// `jac[r][c] = ∂x_r/∂x̂_c`.
    pub jac: Mat2,
    pub det: f64,
    /// `hess[k][r][c] = ∂²x_r/∂x̂_k∂x̂_c`.
    pub hess: [Mat2; 2],
}

impl MapEval {
    fn identity(xh: Point) -> Self {
        Self {
            xh,
            x: xh,
            jac: [[1.0, 0.0], [0.0, 1.0]],
            det: 1.0,
            hess: [[[0.0; 2]; 2]; 2],
        }
    }

    fn from_parts(xh: Point, x: Point, jac: Mat2, hess: [Mat2; 2]) -> Result<Self> {
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det <= SINGULAR_TOL {
            return Err(Error::SingularMap {
                x: xh[0],
                y: xh[1],
                det,
            });
        }
        Ok(Self {
            xh,
            x,
            jac,
            det,
            hess,
        })
    }

    /// `DF⁻¹`.
    pub fn inverse(&self) -> Mat2 {
        let j = &self.jac;
        let d = self.det;
        [[j[1][1] / d, -j[0][1] / d], [-j[1][0] / d, j[0][0] / d]]
    }

    /// `DF⁻ᵀ`.
    pub fn inverse_transpose(&self) -> Mat2 {
        let i = self.inverse();
        [[i[0][0], i[1][0]], [i[0][1], i[1][1]]]
    }

    /// `∂_k det DF` for `k = 0, 1`.
    pub fn det_gradient(&self) -> [f64; 2] {
        let j = &self.jac;
        let mut g = [0.0; 2];
        for (k, gk) in g.iter_mut().enumerate() {
            let h = &self.hess[k];
            *gk = h[0][0] * j[1][1] + j[0][0] * h[1][1] - h[0][1] * j[1][0] - j[0][1] * h[1][0];
        }
        g
    }

    /// Contravariant Piola transform of a parametric vector and its
    /// parametric gradient (`dvh[r][c] = ∂v̂_r/∂x̂_c`). Returns the physical
    /// vector and its physical gradient `∂v_r/∂x_c`.
    pub fn piola(&self, vh: [f64; 2], dvh: Mat2) -> (Point, Mat2) {
        let j = &self.jac;
        let det = self.det;
        let dj = self.det_gradient();
        let w = [
            j[0][0] * vh[0] + j[0][1] * vh[1],
            j[1][0] * vh[0] + j[1][1] * vh[1],
        ];
        let v = [w[0] / det, w[1] / det];
        // g[r][k] = ∂v_r/∂x̂_k
        let mut g = [[0.0; 2]; 2];
        for r in 0..2 {
            for k in 0..2 {
                let h = &self.hess[k];
                let dw = h[r][0] * vh[0]
                    + h[r][1] * vh[1]
                    + j[r][0] * dvh[0][k]
                    + j[r][1] * dvh[1][k];
                g[r][k] = dw / det - w[r] * dj[k] / (det * det);
            }
        }
        let inv = self.inverse();
        let mut dv = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                dv[r][c] = g[r][0] * inv[0][c] + g[r][1] * inv[1][c];
            }
        }
        (v, dv)
    }

    /// Integral-preserving transform of a parametric scalar.
    pub fn integral(&self, qh: f64) -> f64 {
        qh / self.det
    }

    /// Unit outward physical normal from a parametric outward normal.
    pub fn normal(&self, nh: [f64; 2]) -> Point {
        let it = self.inverse_transpose();
        let n = [
            it[0][0] * nh[0] + it[0][1] * nh[1],
            it[1][0] * nh[0] + it[1][1] * nh[1],
        ];
        let len = n[0].hypot(n[1]);
        [n[0] / len, n[1] / len]
    }
}

/// Which of the built-in maps this is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    Identity,
    PolarAnnulus,
    NurbsAnnulus,
}

/// Single-patch tensor-product NURBS surface.
#[derive(Clone, Debug)]
pub struct NurbsSurface {
    pub u: UnivariateSpace,
    pub v: UnivariateSpace,
    /// Control points, flat index `j * u.dim() + i`.
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl NurbsSurface {
    pub fn new(
        u: UnivariateSpace,
        v: UnivariateSpace,
        points: Vec<Point>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = u.dim() * v.dim();
        if points.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: points.len(),
            });
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        Ok(Self {
            u,
            v,
            points,
            weights,
        })
    }

    /// Point, first and second derivatives of the rational surface.
    pub fn eval(&self, xh: Point) -> Result<MapEval> {
        let bu = self.u.eval(xh[0], 2)?;
        let bv = self.v.eval(xh[1], 2)?;
        // Homogeneous sums: a[d] = Σ w P N, wsum[d] = Σ w N, for the
        // derivative multi-indices d in order (0,0),(1,0),(0,1),(2,0),(1,1),(0,2).
        const ORDERS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
        let mut a = [[0.0; 2]; 6];
        let mut w = [0.0; 6];
        let nu = self.u.dim();
        for b in 0..bv.width() {
            for c in 0..bu.width() {
                let k = (bv.first() + b) * nu + bu.first() + c;
                let (pt, wt) = (self.points[k], self.weights[k]);
                for (o, &(du, dv)) in ORDERS.iter().enumerate() {
                    let n = bu.get(du, c) * bv.get(dv, b) * wt;
                    w[o] += n;
                    a[o][0] += n * pt[0];
                    a[o][1] += n * pt[1];
                }
            }
        }
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        let mut hess = [[[0.0; 2]; 2]; 2];
        for r in 0..2 {
            x[r] = a[0][r] / w[0];
            for k in 0..2 {
                jac[r][k] = (a[1 + k][r] - x[r] * w[1 + k]) / w[0];
            }
        }
        let second = |k: usize, l: usize| if k + l == 0 { 3 } else if k + l == 1 { 4 } else { 5 };
        for r in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let o = second(k, l);
                    hess[k][r][l] = (a[o][r]
                        - jac[r][k] * w[1 + l]
                        - jac[r][l] * w[1 + k]
                        - x[r] * w[o])
                        / w[0];
                }
            }
        }
        MapEval::from_parts(xh, x, jac, hess)
    }
}

/// Map from `(0,1)²` onto the physical domain.
#[derive(Clone, Debug)]
pub struct GeometricMap {
    kind: MapKind,
    nurbs: Option<NurbsSurface>,
}

impl GeometricMap {
    /// Identity map of the unit square.
    pub fn square() -> Self {
        Self {
            kind: MapKind::Identity,
            nurbs: None,
        }
    }

    /// `F(x̂) = (1 + x̂₁)(cos(πx̂₂/4), sin(πx̂₂/4))`.
    pub fn polar_annulus() -> Self {
        Self {
            kind: MapKind::PolarAnnulus,
            nurbs: None,
        }
    }

    /// Rational parameterization of the same sector: linear in the radial
    /// direction, a quadratic circular arc in the angular direction.
    pub fn nurbs_annulus() -> Self {
        let radial = UnivariateSpace::new(KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap());
        let angular =
            UnivariateSpace::new(KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap());
        let half = FRAC_PI_4 / 2.0;
        let arc = [[1.0, 0.0], [1.0, half.tan()], [FRAC_PI_4.cos(), FRAC_PI_4.sin()]];
        let arc_w = [1.0, half.cos(), 1.0];
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (p, &w) in arc.iter().zip(&arc_w) {
            for r in [1.0, 2.0] {
                points.push([r * p[0], r * p[1]]);
                weights.push(w);
            }
        }
        let surface = NurbsSurface::new(radial, angular, points, weights).unwrap();
        Self {
            kind: MapKind::NurbsAnnulus,
            nurbs: Some(surface),
        }
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// Short identifier: `square`, `polar` or `nurbs`.
    pub fn name(&self) -> &'static str {
        match self.kind {
            MapKind::Identity => "square",
            MapKind::PolarAnnulus => "polar",
            MapKind::NurbsAnnulus => "nurbs",
        }
    }

    /// True when the map is affine, so that polynomial integrands stay
    /// polynomial under pullback.
    pub fn is_affine(&self) -> bool {
        self.kind == MapKind::Identity
    }

    pub fn eval(&self, xh: Point) -> Result<MapEval> {
        match self.kind {
            MapKind::Identity => Ok(MapEval::identity(xh)),
            MapKind::PolarAnnulus => {
                let r = 1.0 + xh[0];
                let t = FRAC_PI_4 * xh[1];
                let (s, c) = t.sin_cos();
                let a = FRAC_PI_4;
                let x = [r * c, r * s];
                let jac = [[c, -r * a * s], [s, r * a * c]];
                let hess = [
                    [[0.0, -a * s], [0.0, a * c]],
                    [[-a * s, -r * a * a * c], [a * c, -r * a * a * s]],
                ];
                MapEval::from_parts(xh, x, jac, hess)
            }
            MapKind::NurbsAnnulus => self.nurbs.as_ref().unwrap().eval(xh),
        }
    }

    pub fn piola_push(&self, xh: Point, vh: [f64; 2], dvh: Mat2) -> Result<(Point, Mat2)> {
        Ok(self.eval(xh)?.piola(vh, dvh))
    }

    pub fn integral_push(&self, xh: Point, qh: f64) -> Result<f64> {
        Ok(self.eval(xh)?.integral(qh))
    }
}

/// Quadrature node on a boundary face.
#[derive(Clone, Copy, Debug)]
pub struct FaceNode {
    pub map: MapEval,
    /// Unit outward physical normal.
    pub normal: Point,
    /// Quadrature weight times the surface Jacobian.
    pub ds: f64,
}

/// One element face lying on a side of the parametric square.
#[derive(Clone, Debug)]
pub struct BoundaryFace {
    pub side: Side,
    pub element: usize,
    /// Parametric extent along the side.
    pub extent: (f64, f64),
    /// Physical arc length.
    pub h_f: f64,
    pub nodes: Vec<FaceNode>,
}

/// Boundary faces of `mesh` on `side` with `nq` Gauss points each.
pub fn boundary_faces(
    map: &GeometricMap,
    mesh: &ParametricMesh,
    side: Side,
    nq: usize,
) -> Result<Vec<BoundaryFace>> {
    let rule = GaussRule::new(nq);
    let nh = side.normal();
    mesh.boundary_elements(side)
        .into_iter()
        .map(|e| {
            let el = mesh.element(e);
            let (extent, tangent_dir) = match side {
                Side::Left | Side::Right => (el.y, 1),
                Side::Bottom | Side::Top => (el.x, 0),
            };
            let nodes = rule
                .mapped(extent.0, extent.1)
                .map(|(t, w)| {
                    let xh = match side {
                        Side::Left => [0.0, t],
                        Side::Right => [1.0, t],
                        Side::Bottom => [t, 0.0],
                        Side::Top => [t, 1.0],
                    };
                    let m = map.eval(xh)?;
                    let speed = m.jac[0][tangent_dir].hypot(m.jac[1][tangent_dir]);
                    Ok(FaceNode {
                        map: m,
                        normal: m.normal(nh),
                        ds: w * speed,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let h_f = nodes.iter().map(|n| n.ds).sum();
            Ok(BoundaryFace {
                side,
                element: e,
                extent,
                h_f,
                nodes,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::DiscretePair;
    use rand::{Rng, SeedableRng};
    use rand::rngs::StdRng;

    fn maps() -> [GeometricMap; 3] {
        [
            GeometricMap::square(),
            GeometricMap::polar_annulus(),
            GeometricMap::nurbs_annulus(),
        ]
    }

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
    }

    #[test]
    fn identity_map() {
        let m = GeometricMap::square().eval([0.3, 0.7]).unwrap();
        assert_eq!(m.x, [0.3, 0.7]);
        assert_eq!(m.det, 1.0);
        let (v, dv) = m.piola([1.5, -2.0], [[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(v, [1.5, -2.0]);
        assert_eq!(dv, [[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(m.integral(0.25), 0.25);
    }

    #[test]
    fn annulus_corners() {
        for map in [GeometricMap::polar_annulus(), GeometricMap::nurbs_annulus()] {
            let cases = [
                ([0.0, 0.0], [1.0, 0.0]),
                ([1.0, 0.0], [2.0, 0.0]),
                ([0.0, 1.0], [FRAC_PI_4.cos(), FRAC_PI_4.sin()]),
                ([1.0, 1.0], [2.0 * FRAC_PI_4.cos(), 2.0 * FRAC_PI_4.sin()]),
            ];
            for (xh, x) in cases {
                let m = map.eval(xh).unwrap();
                assert!((m.x[0] - x[0]).abs() < 1e-14 && (m.x[1] - x[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn nurbs_and_polar_share_radii() {
        let polar = GeometricMap::polar_annulus();
        let nurbs = GeometricMap::nurbs_annulus();
        for xh in random_points(100, 1) {
            let a = polar.eval(xh).unwrap().x;
            let b = nurbs.eval(xh).unwrap().x;
            let (ra, rb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
            assert!((ra - rb).abs() < 1e-10);
            assert!((rb - (1.0 + xh[0])).abs() < 1e-10);
            let theta = b[1].atan2(b[0]);
            assert!((-1e-14..=FRAC_PI_4 + 1e-14).contains(&theta));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for map in maps() {
            for xh in random_points(50, 2) {
                let xh = [0.01 + 0.98 * xh[0], 0.01 + 0.98 * xh[1]];
                let m = map.eval(xh).unwrap();
                for k in 0..2 {
                    let mut p = xh;
                    let mut q = xh;
                    p[k] += h;
                    q[k] -= h;
                    let (mp, mq) = (map.eval(p).unwrap(), map.eval(q).unwrap());
                    for r in 0..2 {
                        let fd = (mp.x[r] - mq.x[r]) / (2.0 * h);
                        assert!((fd - m.jac[r][k]).abs() <= 1e-6 * (1.0 + m.jac[r][k].abs()));
                        for c in 0..2 {
                            let fd = (mp.jac[r][c] - mq.jac[r][c]) / (2.0 * h);
                            let ex = m.hess[k][r][c];
                            assert!((fd - ex).abs() <= 1e-6 * (1.0 + ex.abs()), "{:?}", map.kind());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn determinant_is_positive() {
        for map in maps() {
            for xh in random_points(200, 3) {
                assert!(map.eval(xh).unwrap().det > 0.0);
            }
        }
    }

    #[test]
    fn piola_preserves_divergence() {
        let mut rng = StdRng::seed_from_u64(4);
        for map in maps() {
            for xh in random_points(1000, 5) {
                let vh = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let dvh = [
                    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                ];
                let m = map.eval(xh).unwrap();
                let (_, dv) = m.piola(vh, dvh);
                let lhs = (dv[0][0] + dv[1][1]) * m.det;
                let rhs = dvh[0][0] + dvh[1][1];
                assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn solenoidal_field_stays_solenoidal() {
        // v̂ = curl ψ̂ with ψ̂ = sin(2x̂₁) x̂₂³.
        let map = GeometricMap::polar_annulus();
        for xh in random_points(200, 6) {
            let (x, y) = (xh[0], xh[1]);
            let vh = [3.0 * (2.0 * x).sin() * y * y, -2.0 * (2.0 * x).cos() * y.powi(3)];
            let dvh = [
                [6.0 * (2.0 * x).cos() * y * y, 6.0 * (2.0 * x).sin() * y],
                [4.0 * (2.0 * x).sin() * y.powi(3), -6.0 * (2.0 * x).cos() * y * y],
            ];
            let (_, dv) = map.piola_push(xh, vh, dvh).unwrap();
            assert!((dv[0][0] + dv[1][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn piola_gradient_matches_finite_differences() {
        // Field v̂ = (x̂₁² x̂₂, sin x̂₁ + x̂₂); compare Dv with FD of v ∘ F⁻¹
        // through the chain rule Dv = (∂v/∂x̂) DF⁻¹.
        let field = |xh: Point| -> ([f64; 2], Mat2) {
            let (x, y) = (xh[0], xh[1]);
            ([x * x * y, x.sin() + y], [[2.0 * x * y, x * x], [x.cos(), 1.0]])
        };
        let h = 1e-6;
        for map in maps() {
            for xh in random_points(30, 7) {
                let xh = [0.01 + 0.98 * xh[0], 0.01 + 0.98 * xh[1]];
                let m = map.eval(xh).unwrap();
                let (vh, dvh) = field(xh);
                let (_, dv) = m.piola(vh, dvh);
                let mut g = [[0.0; 2]; 2];
                for k in 0..2 {
                    let (mut p, mut q) = (xh, xh);
                    p[k] += h;
                    q[k] -= h;
                    let vp = map.eval(p).unwrap().piola(field(p).0, field(p).1).0;
                    let vq = map.eval(q).unwrap().piola(field(q).0, field(q).1).0;
                    for r in 0..2 {
                        g[r][k] = (vp[r] - vq[r]) / (2.0 * h);
                    }
                }
                let inv = m.inverse();
                for r in 0..2 {
                    for c in 0..2 {
                        let fd = g[r][0] * inv[0][c] + g[r][1] * inv[1][c];
                        assert!((fd - dv[r][c]).abs() < 1e-6 * (1.0 + fd.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn piola_preserves_zero_normal_trace() {
        let mut rng = StdRng::seed_from_u64(8);
        let mesh = DiscretePair::build(2, 4).unwrap().mesh().clone();
        for map in maps() {
            for side in Side::ALL {
                for face in boundary_faces(&map, &mesh, side, 4).unwrap() {
                    for node in &face.nodes {
                        let t = rng.gen_range(-1.0..1.0);
                        let vh = match side {
                            Side::Left | Side::Right => [0.0, t],
                            Side::Bottom | Side::Top => [t, 0.0],
                        };
                        let (v, _) = node.map.piola(vh, [[0.0; 2]; 2]);
                        let vn = v[0] * node.normal[0] + v[1] * node.normal[1];
                        assert!(vn.abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn integral_pullback_preserves_integrals() {
        let pair = DiscretePair::build(2, 4).unwrap();
        let rule = GaussRule::new(6);
        for map in maps() {
            let mesh = pair.mesh();
            let mut coeffs = vec![0.0; pair.n_p()];
            let mut one = 0.0;
            for e in 0..mesh.n_elements() {
                let el = mesh.element(e);
                for (y, wy) in rule.mapped(el.y.0, el.y.1) {
                    for (x, wx) in rule.mapped(el.x.0, el.x.1) {
                        let m = map.eval([x, y]).unwrap();
                        one += m.integral(1.0) * m.det * wx * wy;
                    }
                }
            }
            assert!((one - 1.0).abs() < 1e-12);
            for k in 0..pair.n_p() {
                coeffs[k] = 1.0;
                let (mut phys, mut param) = (0.0, 0.0);
                for e in 0..mesh.n_elements() {
                    let el = mesh.element(e);
                    for (y, wy) in rule.mapped(el.y.0, el.y.1) {
                        for (x, wx) in rule.mapped(el.x.0, el.x.1) {
                            let qh = pair.eval_parametric_pressure(&coeffs, e, [x, y]).unwrap();
                            let m = map.eval([x, y]).unwrap();
                            phys += m.integral(qh) * m.det * wx * wy;
                            param += qh * wx * wy;
                        }
                    }
                }
                coeffs[k] = 0.0;
                assert!((phys - param).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn faces_of_the_square() {
        let mesh = DiscretePair::build(2, 8).unwrap().mesh().clone();
        let faces = boundary_faces(&GeometricMap::square(), &mesh, Side::Bottom, 3).unwrap();
        assert_eq!(faces.len(), 8);
        for f in &faces {
            assert!((f.h_f - 0.125).abs() < 1e-15);
            for n in &f.nodes {
                assert_eq!(n.normal, [0.0, -1.0]);
            }
        }
    }

    #[test]
    fn inner_arc_normals_point_to_origin() {
        let mesh = DiscretePair::build(2, 8).unwrap().mesh().clone();
        for map in [GeometricMap::polar_annulus(), GeometricMap::nurbs_annulus()] {
            for f in boundary_faces(&map, &mesh, Side::Left, 4).unwrap() {
                for n in &f.nodes {
                    assert!((n.normal[0].hypot(n.normal[1]) - 1.0).abs() < 1e-14);
                    let r = n.map.x[0].hypot(n.map.x[1]);
                    assert!((n.normal[0] + n.map.x[0] / r).abs() < 1e-13);
                    assert!((n.normal[1] + n.map.x[1] / r).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn outer_arc_length() {
        let mesh = DiscretePair::build(2, 8).unwrap().mesh().clone();
        let polar: f64 = boundary_faces(&GeometricMap::polar_annulus(), &mesh, Side::Right, 3)
            .unwrap()
            .iter()
            .map(|f| f.h_f)
            .sum();
        assert!((polar - 2.0 * FRAC_PI_4).abs() < 1e-10);
        let nurbs: f64 = boundary_faces(&GeometricMap::nurbs_annulus(), &mesh, Side::Right, 8)
            .unwrap()
            .iter()
            .map(|f| f.h_f)
            .sum();
        assert!((nurbs - 2.0 * FRAC_PI_4).abs() < 1e-10);
    }

    #[test]
    fn radial_faces_have_unit_length() {
        let mesh = DiscretePair::build(2, 4).unwrap().mesh().clone();
        for map in [GeometricMap::polar_annulus(), GeometricMap::nurbs_annulus()] {
            let total: f64 = boundary_faces(&map, &mesh, Side::Bottom, 3)
                .unwrap()
                .iter()
                .map(|f| f.h_f)
                .sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_map_is_reported() {
        let err = MapEval::from_parts([0.5, 0.5], [0.0; 2], [[1.0, 1.0], [1.0, 1.0]], [[[0.0; 2]; 2]; 2]);
        assert!(matches!(err, Err(Error::SingularMap { .. })));
    }
}
