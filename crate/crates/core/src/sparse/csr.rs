use nalgebra::DMatrix;

use crate::par::Execution;
use crate::{Error, Result};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row. Stored entries may be numerically zero; they are part of
/// the structural pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != n_rows + 1 || offsets[0] != 0 {
            return Err(Error::InvalidMatrix("row offsets have the wrong shape".into()));
        }
        if *offsets.last().unwrap() != indices.len() || indices.len() != values.len() {
            return Err(Error::InvalidMatrix("offsets, indices and values disagree".into()));
        }
        for i in 0..n_rows {
            let (s, e) = (offsets[i], offsets[i + 1]);
            if s > e {
                return Err(Error::InvalidMatrix(format!("row offsets decrease at row {i}")));
            }
            let row = &indices[s..e];
            if row.iter().any(|&c| c >= n_cols) {
                return Err(Error::InvalidMatrix(format!("column index out of range in row {i}")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n_rows: n,
            n_cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            if i >= n_rows {
                return Err(Error::Index { index: i, len: n_rows });
            }
            if j >= n_cols {
                return Err(Error::Index { index: j, len: n_cols });
            }
            rows[i].push((j, v));
        }
        let mut offsets = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if indices.len() > *offsets.last().unwrap() && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            offsets,
            indices,
            values,
        })
    }

    /// Zero-valued matrix with the given per-row column sets.
    pub fn from_pattern(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let n_rows = rows.len();
        let mut offsets = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            indices.extend(row);
            offsets.push(indices.len());
        }
        let values = vec![0.0; indices.len()];
        Self::new(n_rows, n_cols, offsets, indices, values)
    }

    /// Keeps the entries of a dense matrix whose magnitude exceeds `drop`.
    pub fn from_dense(a: &DMatrix<f64>, drop: f64) -> Self {
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)].abs() > drop {
                    indices.push(j);
                    values.push(a[(i, j)]);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            n_rows: a.nrows(),
            n_cols: a.ncols(),
            offsets,
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                d[(i, j)] = x;
            }
        }
        d
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    /// Position of entry `(i, j)` in the value array, if structurally present.
    #[inline]
    pub fn entry_index(&self, i: usize, j: usize) -> Option<usize> {
        let s = self.offsets[i];
        self.indices[s..self.offsets[i + 1]]
            .binary_search(&j)
            .ok()
            .map(|k| s + k)
    }

    /// Stored value of `(i, j)`, zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entry_index(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y, Execution::default())?;
        Ok(y)
    }

    /// `y = A x` under the given execution policy. Each row is an
    /// independent sequential dot product, so the result does not depend on
    /// the policy.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64], exec: Execution) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: y.len(),
            });
        }
        exec.fill(y, |i, yi| {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        });
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                indices[next[j]] = i;
                values[next[j]] = a;
                next[j] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            offsets,
            indices,
            values,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// True when `(i, j)` is stored exactly when `(j, i)` is.
    pub fn has_symmetric_pattern(&self) -> bool {
        self.is_square()
            && (0..self.n_rows).all(|i| self.row(i).0.iter().all(|&j| self.entry_index(j, i).is_some()))
    }

    /// `max |a_ij − a_ji|` over the stored entries; infinite for a
    /// nonsymmetric pattern.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.has_symmetric_pattern() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `max |i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n_rows)
            .flat_map(|i| self.row(i).0.iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Symmetric permutation `P A Pᵀ` where `perm[new] = old`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::InvalidMatrix("symmetric permutation of a rectangular matrix".into()));
        }
        check_permutation(perm, self.n_rows)?;
        let inv = invert_permutation(perm);
        let mut offsets = Vec::with_capacity(self.n_rows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        offsets.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for &old in perm {
            let (c, v) = self.row(old);
            row.clear();
            row.extend(c.iter().zip(v).map(|(&j, &a)| (inv[j], a)));
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, a) in &row {
                indices.push(j);
                values.push(a);
            }
            offsets.push(indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            offsets,
            indices,
            values,
        })
    }

    /// Entries with `j <= i`.
    pub fn lower_triangle(&self) -> Self {
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                if j <= i {
                    indices.push(j);
                    values.push(a);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            offsets,
            indices,
            values,
        }
    }
}

/// Errors unless `perm` is a bijection of `0..n`.
pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidMatrix("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// `inv[old] = new` for `perm[new] = old`.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_triplets() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
        (1usize..20, 1usize..20).prop_flat_map(|(m, n)| {
            let t = prop::collection::vec((0..m, 0..n, -10.0f64..10.0), 0..80);
            (Just(m), Just(n), t)
        })
    }

    fn dense_of(m: usize, n: usize, t: &[(usize, usize, f64)]) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(m, n);
        for &(i, j, v) in t {
            d[(i, j)] += v;
        }
        d
    }

    #[test]
    fn identity_spmv() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(CsrMatrix::identity(3).spmv(&x).unwrap(), x);
    }

    #[test]
    fn diagonal_spmv() {
        let a = CsrMatrix::from_diagonal(&[2.0, 3.0]);
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(a.spmv(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn random_spmv_matches_dense_product() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let d = DMatrix::from_fn(50, 50, |_, _| {
            if rng.gen_bool(0.3) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let a = CsrMatrix::from_dense(&d, 0.0);
        let x: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = a.spmv(&x).unwrap();
        let yd = &d * nalgebra::DVector::from_vec(x);
        let err = (nalgebra::DVector::from_vec(y) - &yd).norm() / yd.norm();
        assert!(err < 1e-14);
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(CsrMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn permutation_checks() {
        assert!(check_permutation(&[2, 0, 1], 3).is_ok());
        assert!(check_permutation(&[0, 0, 1], 3).is_err());
        assert!(check_permutation(&[0, 1], 3).is_err());
        assert_eq!(invert_permutation(&[2, 0, 1]), vec![1, 2, 0]);
    }

    #[test]
    fn bandwidth_and_lower_triangle() {
        let t = [(0, 0, 1.0), (0, 3, 2.0), (3, 0, 2.0), (2, 1, 5.0), (1, 2, 5.0)];
        let a = CsrMatrix::from_triplets(4, 4, &t).unwrap();
        assert_eq!(a.bandwidth(), 3);
        let l = a.lower_triangle();
        assert_eq!(l.nnz(), 3);
        assert_eq!(l.get(3, 0), 2.0);
        assert_eq!(l.get(0, 3), 0.0);
        assert_eq!(a.max_asymmetry(), 0.0);
    }

    proptest! {
        #[test]
        fn triplets_sum_like_dense((m, n, t) in random_triplets()) {
            let a = CsrMatrix::from_triplets(m, n, &t).unwrap();
            let d = dense_of(m, n, &t);
            prop_assert_eq!(a.to_dense(), d);
            // Re-validation of the produced arrays.
            prop_assert!(CsrMatrix::new(m, n, a.offsets().to_vec(), a.indices().to_vec(), a.values().to_vec()).is_ok());
        }

        #[test]
        fn spmv_matches_dense((m, n, t) in random_triplets(), seed in 0u64..1000) {
            let a = CsrMatrix::from_triplets(m, n, &t).unwrap();
            let x: Vec<f64> = (0..n).map(|k| ((k as u64 * 7919 + seed) % 17) as f64 - 8.0).collect();
            let y = a.spmv(&x).unwrap();
            let yd = dense_of(m, n, &t) * nalgebra::DVector::from_vec(x.clone());
            for i in 0..m {
                prop_assert!((y[i] - yd[i]).abs() <= 1e-12 * (1.0 + yd[i].abs()));
            }
            let mut ys = vec![0.0; m];
            a.spmv_into(&x, &mut ys, Execution::Sequential).unwrap();
            prop_assert_eq!(ys, y);
        }

        #[test]
        fn transpose_is_an_involution((m, n, t) in random_triplets()) {
            let a = CsrMatrix::from_triplets(m, n, &t).unwrap();
            prop_assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
            prop_assert_eq!(a.transpose().transpose(), a);
        }

        #[test]
        fn symmetric_permutation_matches_dense(
            (n, t) in (1usize..15).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n, -1.0f64..1.0), 0..60))),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
            let b = a.permute_symmetric(&perm).unwrap();
            let (da, db) = (a.to_dense(), b.to_dense());
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(db[(i, j)], da[(perm[i], perm[j])]);
                }
            }
        }
    }
}
