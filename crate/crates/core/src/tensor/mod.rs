//! Dense complex linear algebra and multi-subsystem index machinery.

mod layout;
pub mod linalg;
mod matrix;
mod ops;

pub use layout::{Permutation, SubsystemLayout};
pub use linalg::{
    column_space_basis, hermitian_eig, matrix_sqrt_psd, svd_singular_values, HermitianEigen,
};
pub use matrix::{ComplexMatrix, StateVector};
pub use ops::{
    apply_local_operator, cycle_trace_identity_check, dense_cap, kron, kron_all,
    partial_transpose, permutation_matrix, permute_subsystems, permuted_product_trace, realign,
    set_dense_cap, DEFAULT_DENSE_CAP,
};
pub(crate) use ops::{apply_local_at, check_cap};
