use num_traits::Zero;

use super::matrix::{inner, vec_norm, CMatrix};
use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};

/// Square matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian<T>(CMatrix<T>);

impl<T: Real> Hermitian<T> {
    /// Validates the Hermitian property relative to the largest entry.
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidMatrix(format!("{}x{} is not square", m.rows(), m.cols())));
        }
        if !m.is_finite() {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let scale = m.max_abs().max(T::one());
        let defect = m.hermitian_defect();
        if defect > T::tol(1e-12) * scale {
            return Err(Error::InvalidMatrix(format!("not Hermitian (defect {:e})", defect.as_f64())));
        }
        Ok(Self(m))
    }

    /// Symmetrizes `(M + Mᴴ)/2` without checking the defect.
    pub fn from_matrix_unchecked(m: CMatrix<T>) -> Self {
        let half = T::lit(0.5);
        let sym = (&m + &m.adjoint()).scale(half);
        Self(sym)
    }

    pub fn from_real_diag(values: &[T]) -> Self {
        Self(CMatrix::diag_real(values))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.0
    }

    /// `⟨v|H v⟩`, real for Hermitian `H`.
    pub fn expectation(&self, v: &[C<T>]) -> T {
        inner(v, &self.0.mat_vec(v)).re
    }

    /// Spectral norm bound used for relative tolerances (Frobenius norm).
    pub fn norm(&self) -> T {
        self.0.norm_fro()
    }
}

/// Unit-norm state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T>(Vec<C<T>>);

impl<T: Real> StateVector<T> {
    /// Accepts amplitudes whose norm is already 1 within 1e-12.
    pub fn new(amplitudes: Vec<C<T>>) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if amplitudes.is_empty() || !(n - T::one()).abs().le(&T::tol(1e-12)) {
            return Err(Error::InvalidState(format!("norm {} != 1", n.as_f64())));
        }
        Ok(Self(amplitudes))
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<C<T>>) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if amplitudes.is_empty() || n <= T::tol(1e-300) || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Ok(Self(amplitudes.into_iter().map(|z| z / n).collect()))
    }

    pub fn from_real(values: &[T]) -> Result<Self> {
        Self::normalized(values.iter().map(|&x| re(x)).collect())
    }

    /// Standard basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![C::zero(); dim];
        v[k] = re(T::one());
        Self(v)
    }

    /// Real qubit-plane state `cos θ e_0 + sin θ e_1` embedded in `dim` dimensions.
    pub fn from_angle(dim: usize, theta: T) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidState("angle states need dim >= 2".into()));
        }
        let mut v = vec![C::zero(); dim];
        v[0] = re(theta.cos());
        v[1] = re(theta.sin());
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.0
    }

    pub fn scaled_phase(&self, phase: T) -> Self {
        let p = C::from_polar(T::one(), phase);
        Self(self.0.iter().map(|z| z * p).collect())
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T>(CMatrix<T>);

impl<T: Real> DensityMatrix<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        let h = Hermitian::new(m)?;
        let tr = h.matrix().trace();
        if (tr.re - T::one()).abs() > T::tol(1e-12) || tr.im.abs() > T::tol(1e-12) {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re.as_f64())));
        }
        let (vals, _) = super::eigen::eigh(&h)?;
        let min = vals.last().copied().unwrap_or(T::zero());
        if min < -T::tol(1e-10) {
            return Err(Error::NotPositive { min_eigenvalue: min.as_f64() });
        }
        Ok(Self(h.into_matrix()))
    }

    pub(crate) fn new_unchecked(m: CMatrix<T>) -> Self {
        Self(m)
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale(T::one() / T::from_usize(dim).unwrap()))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }

    pub fn as_hermitian(&self) -> Hermitian<T> {
        Hermitian(self.0.clone())
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        let diff = Hermitian::from_matrix_unchecked(&self.0 - &other.0);
        let (vals, _) = super::eigen::eigh(&diff)?;
        Ok(vals.iter().map(|v| v.abs()).sum::<T>() * T::lit(0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(Hermitian::new(m), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn state_requires_unit_norm() {
        assert!(StateVector::<f64>::new(vec![re(1.0), re(1.0)]).is_err());
        assert!(StateVector::<f64>::normalized(vec![re(0.0), re(0.0)]).is_err());
        let s = StateVector::<f64>::from_real(&[3.0, 4.0]).unwrap();
        assert!((s.amplitudes()[0].re - 0.6).abs() < 1e-15);
    }

    #[test]
    fn density_rejects_negative_spectrum() {
        let m = CMatrix::<f64>::diag_real(&[1.5, -0.5]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPositive { .. })));
    }
}
