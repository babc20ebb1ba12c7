//! Dense and sparse matrices and the symmetric eigensolver.

mod dense;
mod eigen;
mod sparse;

pub use dense::{
    center_columns, center_columns_with_means, frobenius, matmul, symmetrize, transpose,
    DenseMatrix,
};
pub use eigen::{
    apply_sign_rule, sym_eig, sym_eig_topk, sym_eig_topk_with, sym_eig_with, EigenMethod,
    EigenPairs, JACOBI_MAX_DIM,
};
pub use sparse::CsrMatrix;
