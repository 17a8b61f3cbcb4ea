use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Largest dimension accepted by the dense eigensolvers by default.
pub const DEFAULT_EIG_CAP: usize = 4000;

fn check(a: &DMatrix<f64>, cap: usize) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidMatrix("eigenvalues of a rectangular matrix".into()));
    }
    if a.nrows() > cap {
        return Err(Error::AnalysisCap { n: a.nrows(), cap });
    }
    Ok(())
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenvalues of a symmetric matrix in ascending order. Only the lower
/// triangle is read.
pub fn dense_sym_eig(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    dense_sym_eig_capped(a, DEFAULT_EIG_CAP)
}

pub fn dense_sym_eig_capped(a: &DMatrix<f64>, cap: usize) -> Result<Vec<f64>> {
    check(a, cap)?;
    Ok(sorted(a.clone().symmetric_eigenvalues().iter().copied()))
}

/// Ascending eigenpairs of a symmetric matrix; column `k` of the returned
/// matrix belongs to eigenvalue `k`.
pub fn dense_sym_eigh(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check(a, DEFAULT_EIG_CAP)?;
    let eig = SymmetricEigen::new(a.clone());
    let mut idx: Vec<usize> = (0..a.nrows()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), a.nrows(), |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((values, vectors))
}

/// `L⁻¹ A L⁻ᵀ` for `M = L Lᵀ`, symmetrized.
fn reduce(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if m.shape() != a.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: m.nrows(),
        });
    }
    let l = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidMatrix("mass matrix is not positive definite".into()))?
        .l();
    let la = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::InvalidMatrix("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&la.transpose())
        .ok_or_else(|| Error::InvalidMatrix("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    Ok((c, l))
}

/// Eigenvalues of `M⁻¹ A` for symmetric `A` and SPD `M`, ascending.
pub fn dense_gen_eig(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    dense_gen_eig_capped(a, m, DEFAULT_EIG_CAP)
}

pub fn dense_gen_eig_capped(a: &DMatrix<f64>, m: &DMatrix<f64>, cap: usize) -> Result<Vec<f64>> {
    check(a, cap)?;
    let (c, _) = reduce(a, m)?;
    Ok(sorted(c.symmetric_eigenvalues().iter().copied()))
}

/// Eigenpairs of `A v = λ M v`, with `M`-orthonormal eigenvectors.
pub fn dense_gen_eigh(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check(a, DEFAULT_EIG_CAP)?;
    let (c, l) = reduce(a, m)?;
    let (values, w) = dense_sym_eigh(&c)?;
    let v = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or_else(|| Error::InvalidMatrix("singular Cholesky factor".into()))?;
    Ok((values, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &b + b.transpose()
    }

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(n, n) * (n as f64)
    }

    /// Eigenvalue nearest to `shift` by inverse iteration with LU solves.
    fn inverse_iteration(a: &DMatrix<f64>, shift: f64) -> f64 {
        let n = a.nrows();
        let lu = (a - DMatrix::identity(n, n) * shift).lu();
        let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64).sin());
        for _ in 0..50 {
            v = lu.solve(&v).unwrap();
            v /= v.norm();
        }
        (v.transpose() * a * &v)[(0, 0)]
    }

    #[test]
    fn diagonal_spectrum() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(dense_sym_eig(&a).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn scaled_mass_halves_the_spectrum() {
        let a = random_symmetric(8, 1);
        let plain = dense_sym_eig(&a).unwrap();
        let half = dense_gen_eig(&a, &(DMatrix::identity(8, 8) * 2.0)).unwrap();
        for (p, h) in plain.iter().zip(&half) {
            assert!((p / 2.0 - h).abs() < 1e-13);
        }
    }

    #[test]
    fn identity_mass_reduces_to_standard_problem() {
        let a = random_symmetric(30, 2);
        let plain = dense_sym_eig(&a).unwrap();
        let gen = dense_gen_eig(&a, &DMatrix::identity(30, 30)).unwrap();
        for (p, g) in plain.iter().zip(&gen) {
            assert!((p - g).abs() < 1e-13);
        }
    }

    #[test]
    fn agrees_with_inverse_iteration() {
        let a = random_symmetric(20, 3);
        let values = dense_sym_eig(&a).unwrap();
        let gap = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        for &l in &values {
            let oracle = inverse_iteration(&a, l + 1e-3 * gap);
            assert!((oracle - l).abs() < 1e-9, "{oracle} vs {l}");
        }
    }

    #[test]
    fn generalized_residuals() {
        let a = random_symmetric(25, 4);
        let m = random_spd(25, 5);
        let (values, v) = dense_gen_eigh(&a, &m).unwrap();
        let norm_a = a.norm();
        for k in [0, 7, 24] {
            let x = v.column(k);
            let r = &a * x - (&m * x) * values[k];
            assert!(r.norm() <= 1e-8 * norm_a);
        }
        let only = dense_gen_eig(&a, &m).unwrap();
        for (p, q) in values.iter().zip(&only) {
            assert_eq!(p, q);
        }
    }

    #[test]
    fn sym_eigenvectors_are_ordered() {
        let a = random_symmetric(12, 6);
        let (values, v) = dense_sym_eigh(&a).unwrap();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..12 {
            let x = v.column(k);
            assert!((&a * x - x * values[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let a = DMatrix::<f64>::identity(5, 5);
        assert!(matches!(dense_sym_eig_capped(&a, 4), Err(Error::AnalysisCap { n: 5, cap: 4 })));
        assert!(matches!(
            dense_gen_eig_capped(&a, &a, 4),
            Err(Error::AnalysisCap { .. })
        ));
    }

    #[test]
    fn indefinite_mass_is_rejected() {
        let a = DMatrix::<f64>::identity(2, 2);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(dense_gen_eig(&a, &m), Err(Error::InvalidMatrix(_))));
    }
}
