//! Dense complex linear algebra: Hermitian eigensolver, SVD, pseudoinverse,
//! PSD square roots, projectors and the meter partial trace.

mod eigen;
mod matrix;
mod ops;
mod svd;
mod types;

pub use eigen::{common_eigenbasis, eigh};
pub use matrix::{complexify, inner, vec_norm, CMatrix};
pub use ops::{partial_trace_meter, partial_trace_meter_matrix, projector, psd_sqrt};
pub use svd::{default_rank_rtol, pinv, svd, Pinv, SvdTriple};
pub use types::{DensityMatrix, Hermitian, StateVector};
