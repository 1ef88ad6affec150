use num_traits::Zero;

use super::eigen::eigh_raw;
use super::matrix::CMatrix;
use super::types::{DensityMatrix, Hermitian, StateVector};
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Positive square root of a PSD operator.
///
/// Eigenvalues down to `-1e-10·‖E‖` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt<T: Real>(e: &Hermitian<T>) -> Result<Hermitian<T>> {
    let (vals, vecs) = eigh_raw(e)?;
    let bound = T::tol(1e-10) * e.norm();
    if let Some(&min) = vals.last() {
        if min < -bound {
            return Err(Error::NotPositive { min_eigenvalue: min.as_f64() });
        }
    }
    let roots: Vec<T> = vals.iter().map(|&v| v.max(T::zero()).sqrt()).collect();
    let m = vecs.matmul(&CMatrix::diag_real(&roots)).matmul(&vecs.adjoint());
    Ok(Hermitian::from_matrix_unchecked(m))
}

/// Rank-one projector `|v⟩⟨v|`.
pub fn projector<T: Real>(v: &StateVector<T>) -> DensityMatrix<T> {
    let a = v.amplitudes();
    let m = CMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj());
    DensityMatrix::new_unchecked(m)
}

/// Traces out the meter factor of a system⊗meter operator.
///
/// Composite index convention: `system_index · meter_dim + meter_index`.
pub fn partial_trace_meter<T: Real>(
    t: &DensityMatrix<T>,
    system_dim: usize,
    meter_dim: usize,
) -> Result<DensityMatrix<T>> {
    partial_trace_meter_matrix(t.matrix(), system_dim, meter_dim).map(DensityMatrix::new_unchecked)
}

pub fn partial_trace_meter_matrix<T: Real>(t: &CMatrix<T>, system_dim: usize, meter_dim: usize) -> Result<CMatrix<T>> {
    if t.rows() != system_dim * meter_dim || !t.is_square() {
        return Err(Error::DimensionError(format!(
            "{}x{} operator is not on a {system_dim}x{meter_dim} composite space",
            t.rows(),
            t.cols()
        )));
    }
    Ok(CMatrix::from_fn(system_dim, system_dim, |a, b| {
        (0..meter_dim).fold(C::zero(), |acc, m| acc + t[(a * meter_dim + m, b * meter_dim + m)])
    }))
}
