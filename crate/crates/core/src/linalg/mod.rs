//! Sparse matrix primitives at scalar granularity.

mod qr;
mod solve;
mod sparse;

pub use qr::{
    partial_refactor, partial_refactor_with, permute_and_refactor, qr_factorize,
    qr_factorize_with, reorder_and_refactor_tail, Factorization,
};
pub use solve::{back_substitute, log_abs_det};
pub use sparse::{
    DenseVector, FlopCounter, Permutation, SparseRow, SparseRowMatrix, SparseUpperTriangular,
};

#[cfg(test)]
mod tests;
