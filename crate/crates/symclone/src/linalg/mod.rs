//! Dense complex linear algebra: the matrix type, tensor-factor operations,
//! Hermitian eigendecomposition, and seeded random sampling.

pub mod eigh;
pub mod matrix;
pub mod random;
pub mod tensor;

pub use eigh::{Eigh, clip_to_psd, eigh, max_eigenvalue, min_eigenvalue, psd_inverse_sqrt};
pub use matrix::{
    C64, ComplexMatrix, HERMITIAN_REL_TOL, basis_vector, inner, outer, vec_kron, vec_norm,
    vec_normalize,
};
pub use random::{
    Seed, gaussian_matrix, haar_unitary, haar_unitary_from, random_density_from,
    random_pure_state, random_pure_state_from, standard_complex,
};
pub use tensor::{partial_trace, partial_transpose};
