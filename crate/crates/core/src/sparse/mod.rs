//! Sparse storage and kernels: CSR matrices, reverse Cuthill–McKee,
//! complete (envelope) and zero fill-in Cholesky, dense eigensolvers for
//! analysis-scale problems, and Matrix Market exchange.

mod cholesky;
mod csr;
mod dense;
mod mtx;
mod rcm;

pub use cholesky::{complete_cholesky, ic0, CholeskyFactor, FactorKind, Ordering};
pub use csr::{check_permutation, invert_permutation, CsrMatrix};
pub use dense::{
    dense_gen_eig, dense_gen_eig_capped, dense_gen_eigh, dense_sym_eig, dense_sym_eig_capped,
    dense_sym_eigh, DEFAULT_EIG_CAP,
};
pub use mtx::{load_matrix_market, read_matrix_market, save_matrix_market, write_matrix_market};
pub use rcm::rcm_permutation;
