//! Univariate B-spline spaces over open knot vectors.
//!
//! Evaluation returns only the `p + 1` functions supported at a point (the
//! "bandwidth form") together with the index of the first one. At interior
//! knots the right limit is taken, except at the right end of the domain
//! where the left limit is used.

use crate::{Error, Result};

/// A nondecreasing open knot vector in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
    breakpoints: Vec<f64>,
    multiplicities: Vec<usize>,
}

impl KnotVector {
    /// Builds a knot vector from an explicit knot sequence.
    ///
    /// The sequence must be nondecreasing, lie in `[0, 1]`, be open (first and
    /// last knot repeated exactly `degree + 1` times) and have interior
    /// multiplicities at most `degree + 1`.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "{} knots is too few for degree {degree}",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite() || *k < 0.0 || *k > 1.0) {
            return Err(Error::InvalidKnots("knots must lie in [0, 1]".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<usize> = Vec::new();
        for &k in &knots {
            match breakpoints.last() {
                Some(&b) if b == k => *multiplicities.last_mut().unwrap() += 1,
                _ => {
                    breakpoints.push(k);
                    multiplicities.push(1);
                }
            }
        }
        let m = breakpoints.len();
        if m < 2 {
            return Err(Error::InvalidKnots("degenerate knot vector".into()));
        }
        if multiplicities[0] != degree + 1 || multiplicities[m - 1] != degree + 1 {
            return Err(Error::InvalidKnots(
                "end knots must have multiplicity degree + 1".into(),
            ));
        }
        if multiplicities[1..m - 1].iter().any(|&r| r > degree + 1) {
            return Err(Error::InvalidKnots(
                "interior multiplicity exceeds degree + 1".into(),
            ));
        }
        Ok(Self {
            degree,
            knots,
            breakpoints,
            multiplicities,
        })
    }

    /// Uniform open knot vector on `n_elem` elements with interior regularity
    /// `reg` (so interior multiplicity `degree - reg`).
    pub fn uniform_open(degree: usize, n_elem: usize, reg: i32) -> Result<Self> {
        if reg < -1 || reg > degree as i32 - 1 {
            return Err(Error::InvalidRegularity { degree, reg });
        }
        if n_elem == 0 {
            return Err(Error::InvalidKnots("at least one element required".into()));
        }
        let interior = (degree as i32 - reg) as usize;
        let mut knots = Vec::with_capacity(2 * (degree + 1) + (n_elem - 1) * interior);
        knots.extend(std::iter::repeat(0.0).take(degree + 1));
        for e in 1..n_elem {
            let z = e as f64 / n_elem as f64;
            knots.extend(std::iter::repeat(z).take(interior));
        }
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Regularity `degree - multiplicity` at every breakpoint; `-1` at the ends.
    pub fn regularities(&self) -> Vec<i32> {
        self.multiplicities
            .iter()
            .map(|&r| self.degree as i32 - r as i32)
            .collect()
    }

    /// Number of basis functions `n = len(knots) - degree - 1`.
    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn n_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }
}

/// Values and derivatives of the `p + 1` basis functions supported at a point.
#[derive(Clone, Debug)]
pub struct BasisEval {
    first: usize,
    width: usize,
    ders: Vec<f64>,
}

impl BasisEval {
    /// Global index of the first supported basis function.
    pub fn first(&self) -> usize {
        self.first
    }

    /// Number of supported functions, `p + 1`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Highest derivative order stored.
    pub fn max_deriv(&self) -> usize {
        self.ders.len() / self.width - 1
    }

    /// `d`-th derivative of the `k`-th supported function.
    #[inline]
    pub fn get(&self, d: usize, k: usize) -> f64 {
        self.ders[d * self.width + k]
    }

    /// All `d`-th derivatives of the supported functions.
    pub fn row(&self, d: usize) -> &[f64] {
        &self.ders[d * self.width..(d + 1) * self.width]
    }
}

/// The span of the B-spline basis of a knot vector.
#[derive(Clone, Debug)]
pub struct UnivariateSpace {
    kv: KnotVector,
    n: usize,
    /// Knot index `s` with `knots[s] < knots[s + 1]` for each element.
    spans: Vec<usize>,
}

impl UnivariateSpace {
    pub fn new(kv: KnotVector) -> Self {
        let n = kv.basis_count();
        let k = kv.knots();
        let spans = (kv.degree..n).filter(|&s| k[s] < k[s + 1]).collect();
        Self { kv, n, spans }
    }

    /// Uniform open space with interior regularity `reg`.
    pub fn uniform(degree: usize, n_elem: usize, reg: i32) -> Result<Self> {
        Ok(Self::new(KnotVector::uniform_open(degree, n_elem, reg)?))
    }

    pub fn degree(&self) -> usize {
        self.kv.degree
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn knot_vector(&self) -> &KnotVector {
        &self.kv
    }

    pub fn n_elements(&self) -> usize {
        self.spans.len()
    }

    /// Parametric extent `(left, right)` of element `e`.
    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let s = self.spans[e];
        (self.kv.knots[s], self.kv.knots[s + 1])
    }

    /// Index of the first basis function supported on element `e`.
    pub fn element_first(&self, e: usize) -> usize {
        self.spans[e] - self.kv.degree
    }

    /// Elements on which basis function `i` does not vanish identically.
    pub fn basis_elements(&self, i: usize) -> std::ops::Range<usize> {
        let p = self.kv.degree;
        let lo = self.spans.partition_point(|&s| s < i);
        let hi = self.spans.partition_point(|&s| s <= i + p);
        lo..hi
    }

    /// Element containing `x` under the right-limit convention (left limit at
    /// the right end of the domain).
    pub fn element_of(&self, x: f64) -> Result<usize> {
        let k = &self.kv.knots;
        let (lo, hi) = (k[0], k[k.len() - 1]);
        if !(lo..=hi).contains(&x) {
            return Err(Error::Domain { x, lo, hi });
        }
        let e = self.spans.partition_point(|&s| k[s] <= x);
        Ok(e.saturating_sub(1).min(self.spans.len() - 1))
    }

    /// Supported basis functions at `x` and their derivatives up to
    /// `max_deriv` (orders above the degree are identically zero).
    pub fn eval(&self, x: f64, max_deriv: usize) -> Result<BasisEval> {
        let e = self.element_of(x)?;
        Ok(self.eval_on_element(e, x, max_deriv))
    }

    /// Evaluates the polynomial piece of element `e` at `x`. `x` is not
    /// checked against the element extent, so one-sided limits at element
    /// ends can be taken.
    pub fn eval_on_element(&self, e: usize, x: f64, max_deriv: usize) -> BasisEval {
        let span = self.spans[e];
        let p = self.kv.degree;
        BasisEval {
            first: span - p,
            width: p + 1,
            ders: ders_basis_funs(span, x, p, max_deriv, &self.kv.knots),
        }
    }

    /// The space `S^{p-1}_{alpha-1}` on the same breakpoints: it contains
    /// exactly the derivatives of the functions of this space.
    pub fn lower_degree(&self) -> Result<UnivariateSpace> {
        let p = self.kv.degree;
        if p == 0 {
            return Err(Error::Unsupported(
                "cannot lower the degree of piecewise constants".into(),
            ));
        }
        let m = self.kv.multiplicities.len();
        if self.kv.multiplicities[1..m - 1].iter().any(|&r| r > p) {
            return Err(Error::Unsupported(
                "derivative space requires interior regularity >= 0".into(),
            ));
        }
        let k = &self.kv.knots;
        let kv = KnotVector::new(p - 1, k[1..k.len() - 1].to_vec())?;
        Ok(UnivariateSpace::new(kv))
    }
}

/// Cox-de Boor recursion for the nonzero basis functions on `span` and their
/// derivatives (row-major, `(max_deriv + 1) x (p + 1)`).
fn ders_basis_funs(span: usize, x: f64, p: usize, max_deriv: usize, knots: &[f64]) -> Vec<f64> {
    let w = p + 1;
    let mut ders = vec![0.0; (max_deriv + 1) * w];
    let mut ndu = vec![0.0; w * w];
    let mut left = vec![0.0; w];
    let mut right = vec![0.0; w];
    let at = |r: usize, c: usize| r * w + c;

    ndu[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[at(j, r)] = right[r + 1] + left[j - r];
            let temp = ndu[at(r, j - 1)] / ndu[at(j, r)];
            ndu[at(r, j)] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[at(j, j)] = saved;
    }
    for j in 0..=p {
        ders[j] = ndu[at(j, p)];
    }

    let n = max_deriv.min(p);
    let mut a = [vec![0.0; w], vec![0.0; w]];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if rk >= 0 {
                a[s2][0] = a[s1][0] / ndu[at(pk + 1, rk as usize)];
                d = a[s2][0] * ndu[at(rk as usize, pk)];
            }
            let j1: usize = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2: usize = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            let mut j = j1;
            while j <= j2 {
                let c = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[at(pk + 1, c)];
                d += a[s2][j] * ndu[at(c, pk)];
                j += 1;
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[at(pk + 1, r)];
                d += a[s2][k] * ndu[at(r, pk)];
            }
            ders[k * w + r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n {
        for j in 0..=p {
            ders[k * w + j] *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn full_values(space: &UnivariateSpace, x: f64, d: usize) -> Vec<f64> {
        let ev = space.eval(x, d).unwrap();
        let mut v = vec![0.0; space.dim()];
        for k in 0..ev.width() {
            v[ev.first() + k] = ev.get(d, k);
        }
        v
    }

    #[test]
    fn smallest_open_uniform_case() {
        let kv = KnotVector::uniform_open(2, 2, 1).unwrap();
        assert_eq!(kv.knots(), &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]);
        assert_eq!(kv.basis_count(), 4);
        assert_eq!(kv.regularities(), vec![-1, 1, -1]);
    }

    #[test]
    fn basis_counts_follow_dimension_formula() {
        for (p, ne, reg) in [(2, 8, 1), (3, 8, 2), (1, 4, 0), (3, 5, 1), (4, 3, 0)] {
            let n = KnotVector::uniform_open(p, ne, reg).unwrap().basis_count();
            assert_eq!(n, (p + 1) + (ne - 1) * (p - reg as usize));
        }
        assert_eq!(KnotVector::uniform_open(2, 8, 1).unwrap().basis_count(), 10);
        assert_eq!(KnotVector::uniform_open(3, 8, 2).unwrap().basis_count(), 11);
        assert_eq!(KnotVector::uniform_open(1, 4, 0).unwrap().basis_count(), 5);
    }

    #[test]
    fn rejects_bad_regularity() {
        assert!(matches!(
            KnotVector::uniform_open(2, 4, 2),
            Err(Error::InvalidRegularity { .. })
        ));
        assert!(matches!(
            KnotVector::uniform_open(2, 4, -2),
            Err(Error::InvalidRegularity { .. })
        ));
        assert!(KnotVector::uniform_open(2, 4, -1).is_ok());
    }

    #[test]
    fn rejects_malformed_knots() {
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.6, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.5]).is_err());
    }

    #[test]
    fn hat_functions() {
        let s = UnivariateSpace::new(KnotVector::new(1, vec![0.0, 0.0, 0.5, 1.0, 1.0]).unwrap());
        let v = full_values(&s, 0.25, 0);
        assert!((v[0] - 0.5).abs() < 1e-15);
        assert!((v[1] - 0.5).abs() < 1e-15);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn domain_error_outside_unit_interval() {
        let s = UnivariateSpace::uniform(2, 4, 1).unwrap();
        assert!(matches!(s.eval(-0.1, 0), Err(Error::Domain { .. })));
        assert!(matches!(s.eval(1.0 + 1e-12, 0), Err(Error::Domain { .. })));
    }

    #[test]
    fn end_point_conventions() {
        let s = UnivariateSpace::uniform(2, 4, 1).unwrap();
        let right = s.eval(1.0, 0).unwrap();
        assert_eq!(right.first(), s.dim() - 3);
        assert!((right.get(0, 2) - 1.0).abs() < 1e-15);
        let interior = s.eval(0.25, 0).unwrap();
        assert_eq!(s.element_of(0.25).unwrap(), 1);
        assert_eq!(interior.first(), 1);
    }

    #[test]
    fn partition_unity_and_nonnegativity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for (p, ne, reg) in [(1, 4, 0), (2, 8, 1), (3, 8, 2), (4, 5, 1), (3, 7, 0)] {
            let s = UnivariateSpace::uniform(p, ne, reg).unwrap();
            for _ in 0..1000 {
                let x: f64 = rng.gen();
                let ev = s.eval(x, 0).unwrap();
                let sum: f64 = ev.row(0).iter().sum();
                assert!((sum - 1.0).abs() < 1e-13);
                assert!(ev.row(0).iter().all(|&v| v >= -1e-14));
                // derivatives of a partition of unity vanish
                if p >= 1 {
                    let ev1 = s.eval(x, 1).unwrap();
                    assert!(ev1.row(1).iter().sum::<f64>().abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn local_support_is_exact() {
        let s = UnivariateSpace::uniform(3, 6, 1).unwrap();
        let k = s.knot_vector().knots().to_vec();
        for t in 0..=600 {
            let x = t as f64 / 600.0;
            let v = full_values(&s, x, 0);
            for i in 0..s.dim() {
                if x < k[i] || x > k[i + 4] {
                    assert_eq!(v[i], 0.0, "basis {i} nonzero at {x}");
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let step = 1e-6;
        for (p, ne, reg) in [(2, 8, 1), (3, 8, 2), (3, 5, 1)] {
            let s = UnivariateSpace::uniform(p, ne, reg).unwrap();
            for t in 1..50 {
                // stay away from breakpoints
                let x = (t as f64 + 0.37) / 51.0;
                let e = s.element_of(x).unwrap();
                let ev = s.eval_on_element(e, x, 1);
                let lo = s.eval_on_element(e, x - step, 0);
                let hi = s.eval_on_element(e, x + step, 0);
                for k in 0..=p {
                    let fd = (hi.get(0, k) - lo.get(0, k)) / (2.0 * step);
                    let d = ev.get(1, k);
                    assert!(
                        (fd - d).abs() <= 1e-6 * d.abs().max(1.0),
                        "p={p} x={x} k={k}: {d} vs {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn regularity_at_interior_breakpoints() {
        // alpha = k: k-th derivative continuous, (k+1)-th jumps
        for (p, ne, reg) in [(2, 4, 1), (3, 4, 2), (3, 4, 1), (4, 3, 2)] {
            let s = UnivariateSpace::uniform(p, ne, reg).unwrap();
            let k = reg as usize;
            for e in 1..ne {
                let z = s.element_bounds(e).0;
                let left = s.eval_on_element(e - 1, z, k + 1);
                let right = s.eval_on_element(e, z, k + 1);
                let jump = |d: usize| {
                    let mut lv = vec![0.0; s.dim()];
                    let mut rv = vec![0.0; s.dim()];
                    for j in 0..=p {
                        lv[left.first() + j] = left.get(d, j);
                        rv[right.first() + j] = right.get(d, j);
                    }
                    let scale = lv.iter().chain(&rv).fold(0.0f64, |m, v| m.max(v.abs()));
                    let jmp = lv.iter().zip(&rv).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    jmp / scale
                };
                assert!(jump(k) < 1e-8, "p={p} reg={reg}: C^{k} violated");
                assert!(jump(k + 1) > 1e-3, "p={p} reg={reg}: unexpected C^{}", k + 1);
            }
        }
    }

    #[test]
    fn lower_degree_dimensions() {
        let s = UnivariateSpace::uniform(3, 8, 2).unwrap();
        let l = s.lower_degree().unwrap();
        assert_eq!((l.degree(), l.dim()), (2, 10));
        assert_eq!(s.dim(), 11);
        assert_eq!(l.knot_vector().regularities(), vec![-1, 1, 1, 1, 1, 1, 1, 1, -1]);

        let hat = UnivariateSpace::uniform(1, 4, 0).unwrap();
        let pc = hat.lower_degree().unwrap();
        assert_eq!((pc.degree(), pc.dim()), (0, 4));
        assert!(pc.lower_degree().is_err());

        let disc = UnivariateSpace::uniform(2, 3, -1).unwrap();
        assert!(matches!(disc.lower_degree(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn piecewise_constant_evaluation() {
        let s = UnivariateSpace::uniform(0, 4, -1).unwrap();
        for (x, idx) in [(0.0, 0), (0.3, 1), (0.5, 2), (0.99, 3), (1.0, 3)] {
            let ev = s.eval(x, 0).unwrap();
            assert_eq!(ev.first(), idx);
            assert_eq!(ev.get(0, 0), 1.0);
        }
    }

    #[test]
    fn derivative_lies_in_lower_degree_space() {
        use nalgebra::{DMatrix, DVector};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for (p, ne) in [(2, 5), (3, 8), (4, 4)] {
            let s = UnivariateSpace::uniform(p, ne, p as i32 - 1).unwrap();
            let l = s.lower_degree().unwrap();
            let coeffs: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let samples: Vec<f64> = (0..ne)
                .flat_map(|e| (0..2 * p + 2).map(move |j| (e as f64 + (j as f64 + 0.5) / (2 * p + 2) as f64) / ne as f64))
                .collect();
            let mut m = DMatrix::zeros(samples.len(), l.dim());
            let mut rhs = DVector::zeros(samples.len());
            for (r, &x) in samples.iter().enumerate() {
                let ev = s.eval(x, 1).unwrap();
                rhs[r] = (0..=p).map(|k| coeffs[ev.first() + k] * ev.get(1, k)).sum();
                let lv = l.eval(x, 0).unwrap();
                for k in 0..p {
                    m[(r, lv.first() + k)] = lv.get(0, k);
                }
            }
            let fit = m.clone().svd(true, true).solve(&rhs, 1e-14).unwrap();
            let resid = (&m * fit - &rhs).amax();
            assert!(resid < 1e-12, "p={p}: projection residual {resid}");
        }
    }

    #[test]
    fn basis_element_ranges() {
        let s = UnivariateSpace::uniform(2, 5, 1).unwrap();
        for i in 0..s.dim() {
            let r = s.basis_elements(i);
            for e in 0..s.n_elements() {
                let f = s.element_first(e);
                assert_eq!(r.contains(&e), f <= i && i <= f + 2);
            }
        }
    }
}
