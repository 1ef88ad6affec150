//! POVMs whose elements are matrix polynomials in the weakness parameter.

use crate::error::{Error, Result};
use crate::grid::validation_grid;
use crate::linalg::{eigh, psd_sqrt, CMatrix, Hermitian};
use crate::poly::{PolyMatrix, COEFF_ZERO};
use crate::scalar::Real;

/// Completeness residual allowed per coefficient order.
pub const COMPLETENESS_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as positive on the validation grid.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Ordered POVM `{E_j(g)}` on a `dim`-dimensional system, valid for `|g| ≤ g_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPovm<T> {
    dim: usize,
    elements: Vec<PolyMatrix<T>>,
    g_max: T,
}

/// Which orders a truncation keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TruncateMode {
    /// `E_j^{(0)} + g^n E_j^{(n)}`.
    #[default]
    Gap,
    /// All orders `0..=n`.
    Prefix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<T> {
    pub grid: Vec<T>,
    /// `min_eigenvalues[i][j]`: smallest eigenvalue of `E_j(grid[i])`.
    pub min_eigenvalues: Vec<Vec<T>>,
    /// Largest entry of `Σ_j C_k(E_j) − δ_{k0} I` for each order `k`.
    pub completeness_residuals: Vec<T>,
    pub passed: bool,
}

impl<T: Real> ValidationReport<T> {
    pub fn max_completeness_residual(&self) -> T {
        self.completeness_residuals.iter().fold(T::zero(), |m, &r| m.max(r))
    }

    pub fn min_eigenvalue(&self) -> T {
        self.min_eigenvalues.iter().flatten().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn completeness_ok(&self) -> bool {
        self.max_completeness_residual() <= T::tol(COMPLETENESS_TOL)
    }

    pub fn positivity_ok(&self) -> bool {
        self.min_eigenvalue() >= -T::tol(POSITIVITY_TOL)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinOrderResult {
    pub n: usize,
    pub per_outcome_orders: Vec<usize>,
}

impl<T: Real> ParamPovm<T> {
    /// Checks shapes and Hermiticity of every coefficient. Completeness and
    /// positivity are reported by [`ParamPovm::validate`].
    pub fn new(elements: Vec<PolyMatrix<T>>, g_max: T) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidArgument("POVM needs at least one outcome".into()));
        };
        let dim = first.rows();
        for (j, e) in elements.iter().enumerate() {
            if e.rows() != dim || e.cols() != dim {
                return Err(Error::DimensionError(format!(
                    "outcome {j} is {}x{}, expected {dim}x{dim}",
                    e.rows(),
                    e.cols()
                )));
            }
            for (k, c) in e.coeffs().iter().enumerate() {
                let defect = c.hermitian_defect();
                if defect > T::tol(1e-12) * c.max_abs().max(T::one()) {
                    return Err(Error::InvalidMatrix(format!(
                        "outcome {j} order {k} coefficient not Hermitian (defect {:e})",
                        defect.as_f64()
                    )));
                }
            }
        }
        if !(g_max > T::zero()) || !g_max.is_finite() {
            return Err(Error::InvalidArgument(format!("g_max must be positive, got {}", g_max.as_f64())));
        }
        Ok(Self { dim, elements, g_max })
    }

    /// [`ParamPovm::new`] followed by validation on the default grid.
    pub fn validated(elements: Vec<PolyMatrix<T>>, g_max: T) -> Result<Self> {
        let p = Self::new(elements, g_max)?;
        let report = p.validate(&validation_grid(g_max))?;
        if !report.completeness_ok() {
            return Err(Error::InvalidMatrix(format!(
                "completeness residual {:e}",
                report.max_completeness_residual().as_f64()
            )));
        }
        if !report.positivity_ok() {
            return Err(Error::NotPositive { min_eigenvalue: report.min_eigenvalue().as_f64() });
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn g_max(&self) -> T {
        self.g_max
    }

    pub fn elements(&self) -> &[PolyMatrix<T>] {
        &self.elements
    }

    pub fn max_degree(&self) -> usize {
        self.elements.iter().map(|e| e.max_degree()).max().unwrap_or(0)
    }

    /// Every coefficient matrix of every outcome, as Hermitian operators.
    pub fn coefficient_operators(&self) -> Vec<Hermitian<T>> {
        self.elements.iter().flat_map(|e| e.coeffs().iter().cloned()).map(Hermitian::from_matrix_unchecked).collect()
    }

    pub fn check_range(&self, g: T) -> Result<()> {
        let slack = self.g_max * T::tol(1e-12);
        if !(g.abs() <= self.g_max + slack) {
            return Err(Error::OutOfValidityRange { g: g.as_f64(), g_max: self.g_max.as_f64() });
        }
        Ok(())
    }

    /// `E_j(g)` for every outcome.
    pub fn evaluate(&self, g: T) -> Result<Vec<Hermitian<T>>> {
        self.check_range(g)?;
        Ok(self.elements.iter().map(|e| Hermitian::from_matrix_unchecked(e.eval(g))).collect())
    }

    /// Coefficient-wise completeness and grid-sampled positivity.
    pub fn validate(&self, grid: &[T]) -> Result<ValidationReport<T>> {
        let degree = self.max_degree();
        let identity = CMatrix::<T>::identity(self.dim);
        let completeness_residuals = (0..=degree)
            .map(|k| {
                let mut sum = CMatrix::zeros(self.dim, self.dim);
                for e in &self.elements {
                    sum = &sum + &e.coeff(k);
                }
                if k == 0 {
                    sum = &sum - &identity;
                }
                sum.max_abs()
            })
            .collect();
        let mut min_eigenvalues = Vec::with_capacity(grid.len());
        for &g in grid {
            if !(g > T::zero()) {
                return Err(Error::OutOfValidityRange { g: g.as_f64(), g_max: self.g_max.as_f64() });
            }
            let mins = self
                .evaluate(g)?
                .iter()
                .map(|e| eigh(e).map(|(v, _)| *v.last().unwrap()))
                .collect::<Result<Vec<T>>>()?;
            min_eigenvalues.push(mins);
        }
        let mut report =
            ValidationReport { grid: grid.to_vec(), min_eigenvalues, completeness_residuals, passed: false };
        report.passed = report.completeness_ok() && report.positivity_ok();
        Ok(report)
    }

    /// Per-outcome smallest order `k ≥ 1` with a nonzero coefficient, which
    /// must agree across outcomes.
    pub fn minimum_nonzero_order(&self) -> Result<MinOrderResult> {
        let per_outcome_orders = self
            .elements
            .iter()
            .enumerate()
            .map(|(j, e)| e.min_nonzero_order().ok_or(Error::ConstantOutcome(j)))
            .collect::<Result<Vec<_>>>()?;
        let n = per_outcome_orders[0];
        if per_outcome_orders.iter().any(|&k| k != n) {
            return Err(Error::NonUniformOrder(per_outcome_orders));
        }
        Ok(MinOrderResult { n, per_outcome_orders })
    }

    /// Truncates every outcome at order `n`, then re-validates positivity on
    /// the default grid, shrinking `g_max` to the largest radius over which
    /// the truncation stays positive.
    pub fn truncate(&self, n: usize, mode: TruncateMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("truncation order must be >= 1".into()));
        }
        let keep = |k: usize| match mode {
            TruncateMode::Gap => k == 0 || k == n,
            TruncateMode::Prefix => k <= n,
        };
        let elements = self.elements.iter().map(|e| e.keep_orders(keep)).collect();
        let mut out = Self { dim: self.dim, elements, g_max: self.g_max };
        let grid = validation_grid(self.g_max);
        let report = out.validate(&grid)?;
        if !report.completeness_ok() {
            return Err(Error::InvalidMatrix("truncation broke completeness".into()));
        }
        let floor = -T::tol(POSITIVITY_TOL);
        let mut radius = None;
        for (i, &g) in grid.iter().enumerate() {
            if report.min_eigenvalues[i].iter().all(|&v| v >= floor) {
                radius = Some(g);
            } else {
                break;
            }
        }
        match radius {
            None => Err(Error::TruncationNotPositive),
            Some(r) => {
                out.g_max = r;
                Ok(out)
            }
        }
    }

    /// Rewrites a POVM with only orders `0` and `n` as linear in `h = g^n`.
    pub fn reparameterize_linear(&self) -> Result<Self> {
        let n = self.minimum_nonzero_order()?.n;
        let z = T::tol(COEFF_ZERO);
        let mut stray = Vec::new();
        for e in &self.elements {
            for (k, c) in e.coeffs().iter().enumerate() {
                if k != 0 && k != n && c.max_abs() > z && !stray.contains(&k) {
                    stray.push(k);
                }
            }
        }
        if !stray.is_empty() {
            stray.sort_unstable();
            return Err(Error::NotMonomialGap { n, orders: stray });
        }
        let elements =
            self.elements.iter().map(|e| PolyMatrix::linear(e.coeff(0), e.coeff(n))).collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: self.dim, elements, g_max: self.g_max.powi(n as i32) })
    }

    /// Positive measurement operators `M_j(g) = E_j(g)^{1/2}`.
    pub fn measurement_operators(&self, g: T) -> Result<Vec<Hermitian<T>>> {
        self.evaluate(g)?.iter().map(psd_sqrt).collect()
    }
}

/// `E_± = (I ± g σ_z)/2`, valid up to `g_max`.
pub fn qubit_linear<T: Real>(g_max: T) -> ParamPovm<T> {
    let half = T::lit(0.5);
    let id = CMatrix::<T>::identity(2).scale(half);
    let z = CMatrix::diag_real(&[half, -half]);
    let plus = PolyMatrix::linear(id.clone(), z.clone()).expect("2x2");
    let minus = PolyMatrix::linear(id, z.scale(-T::one())).expect("2x2");
    ParamPovm::new(vec![plus, minus], g_max).expect("valid")
}
