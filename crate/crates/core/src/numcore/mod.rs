//! Dense matrices, symmetric eigensolves, SPD factorizations and seeded
//! random streams.

mod linalg;
mod matrix;
mod rng;

pub use linalg::{
    backward_sub_t, chol_solve_vec, chol_spd, forward_sub, hollow, log_det_spd, mahalanobis_sq,
    spd_inverse, spd_solve, symmetric_eigen, top_k_eigs, SymmetricSpectrum, SYMMETRY_TOL,
};
pub use matrix::{dot, norm2, Matrix};
pub use rng::{splitmix_mix, stream_id, SeededRng};
