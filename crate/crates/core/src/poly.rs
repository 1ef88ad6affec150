//! Matrix-valued polynomials in the weakness parameter `g`.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// Coefficients below this (largest entry modulus) count as zero when
/// reading off orders.
pub const COEFF_ZERO: f64 = 1e-12;

/// `Σ_k C_k g^k` with `C_k` complex `rows × cols` matrices.
///
/// Trailing all-zero coefficients are trimmed; the zero polynomial keeps a
/// single zero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix<T> {
    rows: usize,
    cols: usize,
    coeffs: Vec<CMatrix<T>>,
}

impl<T: Real> PolyMatrix<T> {
    pub fn new(coeffs: Vec<CMatrix<T>>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::InvalidArgument("matrix polynomial needs a coefficient".into()));
        };
        let shape = first.shape();
        if let Some(bad) = coeffs.iter().find(|c| c.shape() != shape) {
            return Err(Error::DimensionError(format!(
                "coefficient of shape {:?} in a {:?} polynomial",
                bad.shape(),
                shape
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite coefficient".into()));
        }
        let mut p = Self { rows: shape.0, cols: shape.1, coeffs };
        p.trim();
        Ok(p)
    }

    pub fn constant(m: CMatrix<T>) -> Self {
        Self { rows: m.rows(), cols: m.cols(), coeffs: vec![m] }
    }

    /// `c0 + g·c1`.
    pub fn linear(c0: CMatrix<T>, c1: CMatrix<T>) -> Result<Self> {
        Self::new(vec![c0, c1])
    }

    /// Builds from `(order, coefficient)` pairs; repeated orders add up.
    pub fn from_terms(rows: usize, cols: usize, terms: &[(usize, CMatrix<T>)]) -> Result<Self> {
        let degree = terms.iter().map(|(k, _)| *k).max().unwrap_or(0);
        let mut coeffs = vec![CMatrix::zeros(rows, cols); degree + 1];
        for (k, c) in terms {
            if c.shape() != (rows, cols) {
                return Err(Error::DimensionError(format!(
                    "order-{k} term has shape {:?}, expected {:?}",
                    c.shape(),
                    (rows, cols)
                )));
            }
            coeffs[*k] = &coeffs[*k] + c;
        }
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.max_abs() == T::zero()) {
            self.coeffs.pop();
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMatrix<T>] {
        &self.coeffs
    }

    /// Coefficient of `g^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> CMatrix<T> {
        self.coeffs.get(k).cloned().unwrap_or_else(|| CMatrix::zeros(self.rows, self.cols))
    }

    /// Horner evaluation.
    pub fn eval(&self, g: T) -> CMatrix<T> {
        let mut acc = self.coeffs.last().cloned().expect("non-empty");
        for c in self.coeffs.iter().rev().skip(1) {
            acc = &acc.scale(g) + c;
        }
        acc
    }

    /// Orders `k` whose coefficient exceeds the zero threshold.
    pub fn nonzero_orders(&self) -> Vec<usize> {
        let z = T::tol(COEFF_ZERO);
        (0..self.coeffs.len()).filter(|&k| self.coeffs[k].max_abs() > z).collect()
    }

    /// Smallest `k ≥ 1` with a nonzero coefficient.
    pub fn min_nonzero_order(&self) -> Option<usize> {
        self.nonzero_orders().into_iter().find(|&k| k >= 1)
    }

    /// Keeps only the listed orders.
    pub fn keep_orders(&self, keep: impl Fn(usize) -> bool) -> Self {
        let coeffs = (0..self.coeffs.len())
            .map(|k| if keep(k) { self.coeffs[k].clone() } else { CMatrix::zeros(self.rows, self.cols) })
            .collect();
        let mut p = Self { rows: self.rows, cols: self.cols, coeffs };
        p.trim();
        p
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&CMatrix<T>) -> CMatrix<T>) -> Result<Self> {
        Self::new(self.coeffs.iter().map(f).collect())
    }
}
