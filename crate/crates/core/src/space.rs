//! Tensor-product spline spaces and the divergence-conforming
//! velocity/pressure pair on the parametric square.
//!
//! With `p = k' + 1` and maximal interior regularity the pair is
//!
//! ```text
//! velocity:  S^{p,p-1}_{a,a-1} x S^{p-1,p}_{a-1,a}
//! pressure:  S^{p-1,p-1}_{a-1,a-1}
//! ```
//!
//! No-penetration is imposed strongly by dropping the velocity functions with
//! a nonzero normal trace (first/last column of the x component, first/last
//! row of the y component). Global numbering: kept x-velocity functions, then
//! kept y-velocity functions, then pressure, each lexicographic with the
//! x index running fastest.

use nalgebra::{DMatrix, DVector};

use crate::quadrature::GaussRule;
use crate::spline::UnivariateSpace;
use crate::{Error, Result};

/// Sides of the parametric square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `x̂₁ = 0`
    Left,
    /// `x̂₁ = 1`
    Right,
    /// `x̂₂ = 0`
    Bottom,
    /// `x̂₂ = 1`
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Outward unit normal on the parametric square.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

/// Bivariate tensor-product space; basis `(i, j)` has flat index `j * nx + i`.
#[derive(Clone, Debug)]
pub struct TensorSpace {
    pub x: UnivariateSpace,
    pub y: UnivariateSpace,
}

impl TensorSpace {
    pub fn new(x: UnivariateSpace, y: UnivariateSpace) -> Self {
        Self { x, y }
    }

    pub fn nx(&self) -> usize {
        self.x.dim()
    }

    pub fn ny(&self) -> usize {
        self.y.dim()
    }

    pub fn dim(&self) -> usize {
        self.nx() * self.ny()
    }

    #[inline]
    pub fn flatten(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    #[inline]
    pub fn unflatten(&self, k: usize) -> (usize, usize) {
        (k % self.nx(), k / self.nx())
    }

    /// Degrees `(p_x, p_y)`.
    pub fn degrees(&self) -> (usize, usize) {
        (self.x.degree(), self.y.degree())
    }
}

/// A mesh cell of the parametric mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    pub ex: usize,
    pub ey: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Element {
    pub fn diameter(&self) -> f64 {
        (self.x.1 - self.x.0).hypot(self.y.1 - self.y.0)
    }

    pub fn min_edge(&self) -> f64 {
        (self.x.1 - self.x.0).min(self.y.1 - self.y.0)
    }
}

/// Cartesian mesh of `(0,1)^2` induced by two sets of breakpoints.
#[derive(Clone, Debug)]
pub struct ParametricMesh {
    bx: Vec<f64>,
    by: Vec<f64>,
}

impl ParametricMesh {
    pub fn new(bx: Vec<f64>, by: Vec<f64>) -> Self {
        Self { bx, by }
    }

    pub fn n_x(&self) -> usize {
        self.bx.len() - 1
    }

    pub fn n_y(&self) -> usize {
        self.by.len() - 1
    }

    pub fn n_elements(&self) -> usize {
        self.n_x() * self.n_y()
    }

    pub fn element_index(&self, ex: usize, ey: usize) -> usize {
        ey * self.n_x() + ex
    }

    pub fn element(&self, e: usize) -> Element {
        let (ex, ey) = (e % self.n_x(), e / self.n_x());
        Element {
            ex,
            ey,
            x: (self.bx[ex], self.bx[ex + 1]),
            y: (self.by[ey], self.by[ey + 1]),
        }
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element(e).diameter())
            .fold(0.0, f64::max)
    }

    /// Range of the shape-regularity ratio `h_min,Q / h_Q` over all elements.
    pub fn shape_ratio(&self) -> (f64, f64) {
        (0..self.n_elements())
            .map(|e| {
                let el = self.element(e);
                el.min_edge() / el.diameter()
            })
            .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    /// Elements adjacent to a side, ordered along the side.
    pub fn boundary_elements(&self, side: Side) -> Vec<usize> {
        match side {
            Side::Left => (0..self.n_y()).map(|ey| self.element_index(0, ey)).collect(),
            Side::Right => (0..self.n_y())
                .map(|ey| self.element_index(self.n_x() - 1, ey))
                .collect(),
            Side::Bottom => (0..self.n_x()).map(|ex| self.element_index(ex, 0)).collect(),
            Side::Top => (0..self.n_x())
                .map(|ex| self.element_index(ex, self.n_y() - 1))
                .collect(),
        }
    }

    /// Sides of `(0,1)^2` touched by element `e`.
    pub fn element_sides(&self, e: usize) -> Vec<Side> {
        let el = self.element(e);
        let mut sides = Vec::new();
        if el.ex == 0 {
            sides.push(Side::Left);
        }
        if el.ex + 1 == self.n_x() {
            sides.push(Side::Right);
        }
        if el.ey == 0 {
            sides.push(Side::Bottom);
        }
        if el.ey + 1 == self.n_y() {
            sides.push(Side::Top);
        }
        sides
    }
}

/// Velocity component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
}

/// Global indices of the functions supported on one element. Velocity
/// functions removed by the no-penetration constraint are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementDofs {
    /// Local ordering `b * (p + 1) + a` over `(p+1) x p` functions.
    pub vel_x: Vec<Option<usize>>,
    /// Local ordering `b * p + a` over `p x (p+1)` functions.
    pub vel_y: Vec<Option<usize>>,
    /// Local ordering `b * p + a` over `p x p` functions.
    pub pressure: Vec<usize>,
}

impl ElementDofs {
    /// x-velocity then y-velocity entries.
    pub fn velocity(&self) -> impl Iterator<Item = Option<usize>> + '_ {
        self.vel_x.iter().chain(&self.vel_y).copied()
    }
}

/// The divergence-conforming velocity/pressure pair.
#[derive(Clone, Debug)]
pub struct DiscretePair {
    k_prime: usize,
    n_elem: usize,
    mesh: ParametricMesh,
    pub vel_x: TensorSpace,
    pub vel_y: TensorSpace,
    pub pressure: TensorSpace,
    vx_global: Vec<Option<usize>>,
    vy_global: Vec<Option<usize>>,
    /// Inverse of the velocity numbering: component and flat tensor index.
    vel_owner: Vec<(Component, usize)>,
    n_ux: usize,
}

impl DiscretePair {
    /// Builds the pair of pressure degree `k_prime` on a uniform
    /// `n_elem x n_elem` mesh with maximal regularity.
    pub fn build(k_prime: usize, n_elem: usize) -> Result<Self> {
        if k_prime < 1 {
            return Err(Error::InvalidDegree(k_prime));
        }
        if n_elem < 2 {
            return Err(Error::TooFewElements { min: 2, got: n_elem });
        }
        let p = k_prime + 1;
        let high = UnivariateSpace::uniform(p, n_elem, p as i32 - 1)?;
        let low = high.lower_degree()?;
        let vel_x = TensorSpace::new(high.clone(), low.clone());
        let vel_y = TensorSpace::new(low.clone(), high.clone());
        let pressure = TensorSpace::new(low.clone(), low);
        let mesh = ParametricMesh::new(
            high.knot_vector().breakpoints().to_vec(),
            high.knot_vector().breakpoints().to_vec(),
        );

        let mut vel_owner = Vec::new();
        let mut vx_global = vec![None; vel_x.dim()];
        for j in 0..vel_x.ny() {
            for i in 1..vel_x.nx() - 1 {
                let k = vel_x.flatten(i, j);
                vx_global[k] = Some(vel_owner.len());
                vel_owner.push((Component::X, k));
            }
        }
        let n_ux = vel_owner.len();
        let mut vy_global = vec![None; vel_y.dim()];
        for j in 1..vel_y.ny() - 1 {
            for i in 0..vel_y.nx() {
                let k = vel_y.flatten(i, j);
                vy_global[k] = Some(vel_owner.len());
                vel_owner.push((Component::Y, k));
            }
        }
        Ok(Self {
            k_prime,
            n_elem,
            mesh,
            vel_x,
            vel_y,
            pressure,
            vx_global,
            vy_global,
            vel_owner,
            n_ux,
        })
    }

    pub fn k_prime(&self) -> usize {
        self.k_prime
    }

    /// Spline degree `p = k' + 1` of the velocity in its normal direction.
    pub fn degree(&self) -> usize {
        self.k_prime + 1
    }

    pub fn n_elem(&self) -> usize {
        self.n_elem
    }

    pub fn mesh(&self) -> &ParametricMesh {
        &self.mesh
    }

    /// Velocity DOFs after the no-penetration constraint.
    pub fn n_u(&self) -> usize {
        self.vel_owner.len()
    }

    /// Kept x-velocity DOFs; y-velocity numbering starts here.
    pub fn n_ux(&self) -> usize {
        self.n_ux
    }

    pub fn n_p(&self) -> usize {
        self.pressure.dim()
    }

    /// Global velocity index of a tensor basis function, `None` if removed.
    pub fn velocity_dof(&self, comp: Component, flat: usize) -> Option<usize> {
        match comp {
            Component::X => self.vx_global[flat],
            Component::Y => self.vy_global[flat],
        }
    }

    /// Component and flat tensor index of a global velocity DOF.
    pub fn velocity_owner(&self, dof: usize) -> (Component, usize) {
        self.vel_owner[dof]
    }

    /// Tensor basis functions removed by the no-penetration constraint.
    pub fn constrained_dofs(&self) -> Vec<(Component, usize)> {
        let x = (0..self.vel_x.dim())
            .filter(|&k| self.vx_global[k].is_none())
            .map(|k| (Component::X, k));
        let y = (0..self.vel_y.dim())
            .filter(|&k| self.vy_global[k].is_none())
            .map(|k| (Component::Y, k));
        x.chain(y).collect()
    }

    /// Local-to-global maps of element `e`.
    pub fn element_dofs(&self, e: usize) -> Result<ElementDofs> {
        let ne = self.mesh.n_elements();
        if e >= ne {
            return Err(Error::Index { index: e, len: ne });
        }
        let el = self.mesh.element(e);
        let p = self.degree();
        let hx = self.vel_x.x.element_first(el.ex);
        let hy = self.vel_y.y.element_first(el.ey);
        let lx = self.vel_y.x.element_first(el.ex);
        let ly = self.vel_x.y.element_first(el.ey);

        let mut vel_x = Vec::with_capacity((p + 1) * p);
        for b in 0..p {
            for a in 0..=p {
                vel_x.push(self.vx_global[self.vel_x.flatten(hx + a, ly + b)]);
            }
        }
        let mut vel_y = Vec::with_capacity(p * (p + 1));
        for b in 0..=p {
            for a in 0..p {
                vel_y.push(self.vy_global[self.vel_y.flatten(lx + a, hy + b)]);
            }
        }
        let mut pressure = Vec::with_capacity(p * p);
        for b in 0..p {
            for a in 0..p {
                pressure.push(self.pressure.flatten(lx + a, ly + b));
            }
        }
        Ok(ElementDofs {
            vel_x,
            vel_y,
            pressure,
        })
    }

    /// Elements in the support of a global velocity DOF.
    pub fn velocity_support(&self, dof: usize) -> Vec<usize> {
        let (comp, flat) = self.vel_owner[dof];
        let space = match comp {
            Component::X => &self.vel_x,
            Component::Y => &self.vel_y,
        };
        let (i, j) = space.unflatten(flat);
        let mut out = Vec::new();
        for ey in space.y.basis_elements(j) {
            for ex in space.x.basis_elements(i) {
                out.push(self.mesh.element_index(ex, ey));
            }
        }
        out
    }

    /// Parametric velocity basis functions supported on element `e`, in
    /// local order (x-velocity functions, then y-velocity functions), as
    /// values and parametric gradients `g[r][c] = ∂v̂_r/∂x̂_c`.
    pub fn local_velocity_basis(&self, e: usize, xh: [f64; 2]) -> Vec<([f64; 2], [[f64; 2]; 2])> {
        let el = self.mesh.element(e);
        let hx = self.vel_x.x.eval_on_element(el.ex, xh[0], 1);
        let ly = self.vel_x.y.eval_on_element(el.ey, xh[1], 1);
        let lx = self.vel_y.x.eval_on_element(el.ex, xh[0], 1);
        let hy = self.vel_y.y.eval_on_element(el.ey, xh[1], 1);
        let p = self.degree();
        let mut out = Vec::with_capacity(2 * p * (p + 1));
        for b in 0..p {
            for a in 0..=p {
                let g = [[hx.get(1, a) * ly.get(0, b), hx.get(0, a) * ly.get(1, b)], [0.0; 2]];
                out.push(([hx.get(0, a) * ly.get(0, b), 0.0], g));
            }
        }
        for b in 0..=p {
            for a in 0..p {
                let g = [[0.0; 2], [lx.get(1, a) * hy.get(0, b), lx.get(0, a) * hy.get(1, b)]];
                out.push(([0.0, lx.get(0, a) * hy.get(0, b)], g));
            }
        }
        out
    }

    /// Parametric pressure basis functions supported on element `e`, in
    /// local order.
    pub fn local_pressure_basis(&self, e: usize, xh: [f64; 2]) -> Vec<f64> {
        let el = self.mesh.element(e);
        let bx = self.pressure.x.eval_on_element(el.ex, xh[0], 0);
        let by = self.pressure.y.eval_on_element(el.ey, xh[1], 0);
        let p = self.degree();
        let mut out = Vec::with_capacity(p * p);
        for b in 0..p {
            for a in 0..p {
                out.push(bx.get(0, a) * by.get(0, b));
            }
        }
        out
    }

    /// Parametric velocity `v̂` and its parametric gradient of a coefficient
    /// vector at `xh` on element `e`.
    pub fn eval_parametric_velocity(
        &self,
        coeffs: &[f64],
        e: usize,
        xh: [f64; 2],
    ) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let dofs = self.element_dofs(e)?;
        let mut v = [0.0; 2];
        let mut g = [[0.0; 2]; 2];
        for (d, (bv, bg)) in dofs.velocity().zip(self.local_velocity_basis(e, xh)) {
            if let Some(d) = d {
                let c = coeffs[d];
                for r in 0..2 {
                    v[r] += c * bv[r];
                    g[r][0] += c * bg[r][0];
                    g[r][1] += c * bg[r][1];
                }
            }
        }
        Ok((v, g))
    }

    /// Parametric pressure `q̂` of a coefficient vector at `xh` on element `e`.
    pub fn eval_parametric_pressure(&self, coeffs: &[f64], e: usize, xh: [f64; 2]) -> Result<f64> {
        let dofs = self.element_dofs(e)?;
        Ok(dofs
            .pressure
            .iter()
            .zip(self.local_pressure_basis(e, xh))
            .map(|(&k, q)| coeffs[k] * q)
            .sum())
    }

    /// Least-squares residual of expanding the parametric divergence of a
    /// velocity field in the pressure functions supported on `elements`.
    /// The fit is sampled at Gauss points of those elements; the returned
    /// value is the largest pointwise misfit relative to the largest sampled
    /// divergence.
    pub fn divergence_fit_residual(&self, coeffs: &[f64], elements: &[usize]) -> Result<f64> {
        if coeffs.len() != self.n_u() {
            return Err(Error::DimensionMismatch {
                expected: self.n_u(),
                got: coeffs.len(),
            });
        }
        let p = self.degree();
        let rule = GaussRule::new(p + 2);
        let mut cols: Vec<usize> = Vec::new();
        for &e in elements {
            cols.extend(self.element_dofs(e)?.pressure);
        }
        cols.sort_unstable();
        cols.dedup();

        let mut rows: Vec<(usize, [f64; 2], f64)> = Vec::new();
        for &e in elements {
            let el = self.mesh.element(e);
            for (y, _) in rule.mapped(el.y.0, el.y.1) {
                for (x, _) in rule.mapped(el.x.0, el.x.1) {
                    let (_, g) = self.eval_parametric_velocity(coeffs, e, [x, y])?;
                    rows.push((e, [x, y], g[0][0] + g[1][1]));
                }
            }
        }
        let mut m = DMatrix::zeros(rows.len(), cols.len());
        let mut rhs = DVector::zeros(rows.len());
        for (r, &(e, xh, div)) in rows.iter().enumerate() {
            rhs[r] = div;
            let dofs = self.element_dofs(e)?;
            for (&k, q) in dofs.pressure.iter().zip(self.local_pressure_basis(e, xh)) {
                m[(r, cols.binary_search(&k).unwrap())] = q;
            }
        }
        if rhs.amax() == 0.0 {
            return Ok(0.0);
        }
        let qr = m.clone().qr();
        let qtb = qr.q().transpose() * &rhs;
        let fit = qr
            .r()
            .solve_upper_triangular(&qtb)
            .ok_or_else(|| Error::Unsupported("rank-deficient divergence fit".into()))?;
        Ok((&m * fit - &rhs).amax() / rhs.amax())
    }

    /// Largest residual of expanding `div̂` of each kept velocity basis
    /// function in the pressure space. Zero up to rounding when the pair
    /// forms a cochain complex.
    pub fn divergence_image_check(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        let mut unit = vec![0.0; self.n_u()];
        for dof in 0..self.n_u() {
            unit[dof] = 1.0;
            let r = self.divergence_fit_residual(&unit, &self.velocity_support(dof))?;
            unit[dof] = 0.0;
            worst = worst.max(r);
        }
        Ok(worst)
    }
}
