use super::{rcm_permutation, CsrMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    /// `L Lᵀ = A` up to rounding.
    Complete,
    /// Zero fill-in: `L` keeps the lower pattern of `A`.
    Ic0,
}

/// Symmetric ordering applied before factorizing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ordering {
    Natural,
    Rcm,
}

#[derive(Clone, Debug)]
enum Storage {
    /// Row `i` holds columns `first[i]..=i` in `vals[ptr[i]..ptr[i + 1]]`.
    Envelope {
        first: Vec<usize>,
        ptr: Vec<usize>,
        vals: Vec<f64>,
    },
    /// Lower triangle with the diagonal stored last in every row.
    Sparse(CsrMatrix),
}

/// Lower-triangular Cholesky factor of `P A Pᵀ`, with `perm[new] = old`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    kind: FactorKind,
    n: usize,
    perm: Option<Vec<usize>>,
    storage: Storage,
}

fn prepare(a: &CsrMatrix, ordering: Ordering) -> Result<(Option<Vec<usize>>, CsrMatrix)> {
    if !a.is_square() {
        return Err(Error::InvalidMatrix("Cholesky of a rectangular matrix".into()));
    }
    if !a.has_symmetric_pattern() {
        return Err(Error::NonSymmetricPattern);
    }
    match ordering {
        Ordering::Natural => Ok((None, a.lower_triangle())),
        Ordering::Rcm => {
            let perm = rcm_permutation(a)?;
            let pa = a.permute_symmetric(&perm)?;
            Ok((Some(perm), pa.lower_triangle()))
        }
    }
}

fn breakdown(perm: &Option<Vec<usize>>, row: usize, pivot: f64) -> Error {
    let row = perm.as_ref().map_or(row, |p| p[row]);
    Error::Breakdown { row, pivot }
}

/// Complete Cholesky factorization stored in envelope (skyline) form.
pub fn complete_cholesky(a: &CsrMatrix, ordering: Ordering) -> Result<CholeskyFactor> {
    let (perm, lower) = prepare(a, ordering)?;
    let n = lower.n_rows();
    let first: Vec<usize> = (0..n)
        .map(|i| lower.row(i).0.first().copied().unwrap_or(i).min(i))
        .collect();
    let mut ptr = Vec::with_capacity(n + 1);
    ptr.push(0);
    for i in 0..n {
        ptr.push(ptr[i] + i + 1 - first[i]);
    }
    let mut vals = vec![0.0; ptr[n]];
    for i in 0..n {
        let (c, v) = lower.row(i);
        for (&j, &x) in c.iter().zip(v) {
            vals[ptr[i] + j - first[i]] = x;
        }
    }
    for i in 0..n {
        let (done, rest) = vals.split_at_mut(ptr[i]);
        let row = &mut rest[..ptr[i + 1] - ptr[i]];
        let fi = first[i];
        for j in fi..i {
            let fj = first[j];
            let k0 = fi.max(fj);
            let lj = &done[ptr[j]..ptr[j + 1]];
            let s: f64 = row[k0 - fi..j - fi]
                .iter()
                .zip(&lj[k0 - fj..j - fj])
                .map(|(x, y)| x * y)
                .sum();
            row[j - fi] = (row[j - fi] - s) / lj[j - fj];
        }
        let (off, diag) = row.split_at_mut(i - fi);
        let d = diag[0] - off.iter().map(|x| x * x).sum::<f64>();
        if d <= 0.0 || !d.is_finite() {
            return Err(breakdown(&perm, i, d));
        }
        diag[0] = d.sqrt();
    }
    Ok(CholeskyFactor {
        kind: FactorKind::Complete,
        n,
        perm,
        storage: Storage::Envelope { first, ptr, vals },
    })
}

/// Incomplete Cholesky with zero fill-in. No diagonal shift is applied; a
/// nonpositive pivot is reported as a breakdown.
pub fn ic0(a: &CsrMatrix, ordering: Ordering) -> Result<CholeskyFactor> {
    let (perm, mut l) = prepare(a, ordering)?;
    let n = l.n_rows();
    for i in 0..n {
        if l.row(i).0.last() != Some(&i) {
            return Err(Error::InvalidMatrix(format!("missing diagonal entry in row {i}")));
        }
    }
    let offsets = l.offsets().to_vec();
    let indices = l.indices().to_vec();
    let vals = l.values_mut();
    for i in 0..n {
        let (s_i, e_i) = (offsets[i], offsets[i + 1]);
        for p in s_i..e_i - 1 {
            let j = indices[p];
            let (s_j, e_j) = (offsets[j], offsets[j + 1] - 1);
            // Sparse dot of row i (columns < j) with row j (off-diagonal).
            let (mut a, mut b, mut s) = (s_i, s_j, 0.0);
            while a < p && b < e_j {
                match indices[a].cmp(&indices[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        s += vals[a] * vals[b];
                        a += 1;
                        b += 1;
                    }
                }
            }
            vals[p] = (vals[p] - s) / vals[e_j];
        }
        let d = vals[e_i - 1] - vals[s_i..e_i - 1].iter().map(|x| x * x).sum::<f64>();
        if d <= 0.0 || !d.is_finite() {
            return Err(breakdown(&perm, i, d));
        }
        vals[e_i - 1] = d.sqrt();
    }
    Ok(CholeskyFactor {
        kind: FactorKind::Ic0,
        n,
        perm,
        storage: Storage::Sparse(l),
    })
}

impl CholeskyFactor {
    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.perm.as_deref()
    }

    /// Stored entries of `L` (the full envelope for complete factors).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Envelope { vals, .. } => vals.len(),
            Storage::Sparse(l) => l.nnz(),
        }
    }

    /// `L` in the permuted ordering as a CSR matrix.
    pub fn lower(&self) -> CsrMatrix {
        match &self.storage {
            Storage::Sparse(l) => l.clone(),
            Storage::Envelope { first, ptr, vals } => {
                let mut indices = Vec::with_capacity(vals.len());
                for i in 0..self.n {
                    indices.extend(first[i]..=i);
                }
                CsrMatrix::new(self.n, self.n, ptr.clone(), indices, vals.clone()).unwrap()
            }
        }
    }

    /// Solves `(L Lᵀ) y = b` in the permuted ordering, in place.
    fn solve_permuted(&self, y: &mut [f64]) {
        match &self.storage {
            Storage::Envelope { first, ptr, vals } => {
                for i in 0..self.n {
                    let row = &vals[ptr[i]..ptr[i + 1]];
                    let fi = first[i];
                    let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
                    y[i] = (y[i] - s) / row[i - fi];
                }
                for i in (0..self.n).rev() {
                    let row = &vals[ptr[i]..ptr[i + 1]];
                    let fi = first[i];
                    y[i] /= row[i - fi];
                    let yi = y[i];
                    for (t, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                        *t -= l * yi;
                    }
                }
            }
            Storage::Sparse(l) => {
                for i in 0..self.n {
                    let (c, v) = l.row(i);
                    let k = c.len() - 1;
                    let s: f64 = c[..k].iter().zip(&v[..k]).map(|(&j, &x)| x * y[j]).sum();
                    y[i] = (y[i] - s) / v[k];
                }
                for i in (0..self.n).rev() {
                    let (c, v) = l.row(i);
                    let k = c.len() - 1;
                    y[i] /= v[k];
                    let yi = y[i];
                    for (&j, &x) in c[..k].iter().zip(&v[..k]) {
                        y[j] -= x * yi;
                    }
                }
            }
        }
    }

    /// Applies `A⁻¹` (complete) or `(L Lᵀ)⁻¹` mapped back to the original
    /// ordering (incomplete).
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) -> Result<()> {
        for len in [b.len(), x.len()] {
            if len != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: len,
                });
            }
        }
        match &self.perm {
            None => {
                x.copy_from_slice(b);
                self.solve_permuted(x);
            }
            Some(p) => {
                let mut y: Vec<f64> = p.iter().map(|&old| b[old]).collect();
                self.solve_permuted(&mut y);
                for (new, &old) in p.iter().enumerate() {
                    x[old] = y[new];
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x)?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rel_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.spmv(x).unwrap();
        let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sparse SPD matrix: random symmetric pattern, diagonally dominant.
    fn random_spd(n: usize, density: f64, seed: u64) -> CsrMatrix {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut d = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                if rng.gen_bool(density) {
                    let v = rng.gen_range(-1.0..1.0);
                    d[(i, j)] = v;
                    d[(j, i)] = v;
                }
            }
        }
        for i in 0..n {
            let s: f64 = (0..n).map(|j| d[(i, j)].abs()).sum();
            d[(i, i)] = s + 0.5 + rng.gen::<f64>();
        }
        CsrMatrix::from_dense(&d, 0.0)
    }

    #[test]
    fn identity_solve() {
        let f = complete_cholesky(&CsrMatrix::identity(4), Ordering::Natural).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]), 0.0);
        for ordering in [Ordering::Natural, Ordering::Rcm] {
            let x = complete_cholesky(&a, ordering).unwrap().solve(&[1.0, 2.0]).unwrap();
            assert!((x[0] - 1.0 / 11.0).abs() < 1e-15);
            assert!((x[1] - 7.0 / 11.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_spd_matches_dense_solver() {
        let a = random_spd(100, 0.08, 1);
        let dense = a.to_dense().cholesky().unwrap();
        let b: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let xd = dense.solve(&DVector::from_vec(b.clone()));
        for ordering in [Ordering::Natural, Ordering::Rcm] {
            let x = complete_cholesky(&a, ordering).unwrap().solve(&b).unwrap();
            let err = (DVector::from_vec(x.clone()) - &xd).norm() / xd.norm();
            assert!(err < 1e-10);
            assert!(rel_residual(&a, &x, &b) < 1e-12);
        }
    }

    #[test]
    fn complete_factor_reproduces_the_matrix() {
        let a = random_spd(40, 0.1, 2);
        let f = complete_cholesky(&a, Ordering::Rcm).unwrap();
        let l = f.lower().to_dense();
        let pa = a.permute_symmetric(f.permutation().unwrap()).unwrap().to_dense();
        assert!((&l * l.transpose() - pa).amax() < 1e-12);
    }

    #[test]
    fn ic0_of_a_diagonal_is_its_square_root() {
        let a = CsrMatrix::from_diagonal(&[4.0, 9.0, 2.0]);
        let l = ic0(&a, Ordering::Natural).unwrap().lower();
        assert_eq!(l.values(), &[2.0, 3.0, 2f64.sqrt()]);
    }

    #[test]
    fn ic0_equals_complete_without_zeros() {
        let d = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let a = CsrMatrix::from_dense(&d, 0.0);
        let inc = ic0(&a, Ordering::Natural).unwrap().lower().to_dense();
        let com = complete_cholesky(&a, Ordering::Natural).unwrap().lower().to_dense();
        assert!((inc - com).amax() < 1e-15);
    }

    #[test]
    fn breakdown_reports_the_row() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let a = CsrMatrix::from_dense(&d, 0.0);
        assert!(matches!(
            complete_cholesky(&a, Ordering::Natural),
            Err(Error::Breakdown { row: 1, .. })
        ));
        assert!(matches!(ic0(&a, Ordering::Natural), Err(Error::Breakdown { row: 1, .. })));
    }

    #[test]
    fn rejects_nonsymmetric_pattern() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0), (1, 0, 0.1)]).unwrap();
        assert!(matches!(ic0(&a, Ordering::Natural), Err(Error::NonSymmetricPattern)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ic0_matches_the_matrix_on_its_pattern(n in 2usize..40, density in 0.02f64..0.3, seed in any::<u64>(), rcm in any::<bool>()) {
            let a = random_spd(n, density, seed);
            let ordering = if rcm { Ordering::Rcm } else { Ordering::Natural };
            let f = ic0(&a, ordering).unwrap();
            let pa = match f.permutation() {
                Some(p) => a.permute_symmetric(p).unwrap(),
                None => a.clone(),
            };
            let l = f.lower();
            let pl = pa.lower_triangle();
            prop_assert_eq!(l.indices(), pl.indices());
            let ld = l.to_dense();
            let llt = &ld * ld.transpose();
            for i in 0..n {
                let (c, v) = pa.row(i);
                for (&j, &x) in c.iter().zip(v) {
                    prop_assert!((llt[(i, j)] - x).abs() < 1e-12 * (1.0 + x.abs()));
                }
            }
        }

        #[test]
        fn complete_solve_has_small_residual(n in 1usize..60, density in 0.0f64..0.3, seed in any::<u64>()) {
            let a = random_spd(n, density, seed);
            let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
            let x = complete_cholesky(&a, Ordering::Rcm).unwrap().solve(&b).unwrap();
            prop_assert!(rel_residual(&a, &x, &b) < 1e-12);
        }
    }
}
