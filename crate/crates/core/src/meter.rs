//! System⊗meter picture: a g-dependent isometry `U(g): S → S⊗M` whose meter
//! blocks are the measurement operators, `U(g)s = Σ_j M_j(g)s ⊗ f_j`.
//!
//! The meter basis `f_j` is the standard basis of `M` and does not depend on
//! `g`. Composite vectors are indexed system-major: `a·meter_dim + j`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::validation_grid;
use crate::linalg::{partial_trace_meter_matrix, svd, CMatrix, DensityMatrix, StateVector};
use crate::poly::PolyMatrix;
use crate::povm::ParamPovm;
use crate::scalar::Real;

/// Largest `‖U(g)ᴴU(g) − I‖_max` accepted as an isometry.
pub const ISOMETRY_TOL: f64 = 1e-10;
/// Minimum gap between meter eigenvalues.
pub const EIGENVALUE_GAP: f64 = 1e-9;
/// Second Schmidt coefficient at or below this counts as a product state.
pub const PRODUCT_TOL: f64 = 1e-10;

/// Measurement operators a meter model can be built from.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementOps<T> {
    /// Polynomial operators `M_j(g)`, valid for `|g| ≤ g_max`.
    Polynomial { ops: Vec<PolyMatrix<T>>, g_max: T },
    /// `M_j(g) = E_j(g)^{1/2}` for a POVM; not polynomial in general.
    SquareRoot(ParamPovm<T>),
}

impl<T: Real> MeasurementOps<T> {
    pub fn g_max(&self) -> T {
        match self {
            Self::Polynomial { g_max, .. } => *g_max,
            Self::SquareRoot(p) => p.g_max(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Polynomial { ops, .. } => ops.len(),
            Self::SquareRoot(p) => p.outcomes(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, g: T) -> Result<Vec<CMatrix<T>>> {
        check_range(g, self.g_max())?;
        match self {
            Self::Polynomial { ops, .. } => Ok(ops.iter().map(|m| m.eval(g)).collect()),
            Self::SquareRoot(p) => Ok(p.measurement_operators(g)?.into_iter().map(|h| h.into_matrix()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Isometry<T> {
    Polynomial(PolyMatrix<T>),
    SquareRoot(ParamPovm<T>),
}

type EigenvalueFn<T> = Arc<dyn Fn(T) -> Vec<T> + Send + Sync>;

#[derive(Clone)]
pub struct MeterModel<T> {
    system_dim: usize,
    meter_dim: usize,
    g_max: T,
    isometry: Isometry<T>,
    meter_eigenvalues: EigenvalueFn<T>,
}

impl<T: Real> fmt::Debug for MeterModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeterModel")
            .field("system_dim", &self.system_dim)
            .field("meter_dim", &self.meter_dim)
            .field("g_max", &self.g_max.as_f64())
            .finish_non_exhaustive()
    }
}

fn check_range<T: Real>(g: T, g_max: T) -> Result<()> {
    if g.abs() <= g_max + g_max * T::tol(1e-12) {
        Ok(())
    } else {
        Err(Error::OutOfValidityRange { g: g.as_f64(), g_max: g_max.as_f64() })
    }
}

/// Stacks meter blocks into `U` with `U[a·m + j, b] = M_j[a, b]`.
fn stack<T: Real>(blocks: &[CMatrix<T>]) -> CMatrix<T> {
    let d = blocks[0].rows();
    let m = blocks.len();
    CMatrix::from_fn(d * m, d, |r, b| blocks[r % m][(r / m, b)])
}

/// Meter blocks of an isometry matrix; inverse of the stacking convention.
pub fn isometry_blocks<T: Real>(u: &CMatrix<T>, meter_dim: usize) -> Vec<CMatrix<T>> {
    let d = u.cols();
    (0..meter_dim).map(|j| CMatrix::from_fn(d, d, |a, b| u[(a * meter_dim + j, b)])).collect()
}

fn isometry_defect<T: Real>(u: &CMatrix<T>) -> T {
    (&u.adjoint().matmul(u) - &CMatrix::identity(u.cols())).max_abs()
}

/// Builds `U(g)` from measurement operators; the meter eigenvalues default to
/// the outcome labels `0, 1, …, meter_dim − 1`.
pub fn compose_isometry<T: Real>(ops: MeasurementOps<T>) -> Result<MeterModel<T>> {
    if ops.is_empty() {
        return Err(Error::InvalidArgument("no measurement operators".into()));
    }
    let g_max = ops.g_max();
    let (system_dim, isometry) = match ops {
        MeasurementOps::Polynomial { ops, .. } => {
            let d = ops[0].rows();
            if ops.iter().any(|m| m.rows() != d || m.cols() != d) {
                return Err(Error::DimensionError("measurement operators must share one square shape".into()));
            }
            let degree = ops.iter().map(|m| m.max_degree()).max().unwrap_or(0);
            let coeffs = (0..=degree).map(|k| stack(&ops.iter().map(|m| m.coeff(k)).collect::<Vec<_>>())).collect();
            (d, Isometry::Polynomial(PolyMatrix::new(coeffs)?))
        }
        MeasurementOps::SquareRoot(p) => (p.dim(), Isometry::SquareRoot(p)),
    };
    let meter_dim = match &isometry {
        Isometry::Polynomial(u) => u.rows() / system_dim,
        Isometry::SquareRoot(p) => p.outcomes(),
    };
    let labels = move |_g: T| (0..meter_dim).map(|j| T::from_usize(j).unwrap()).collect();
    let model = MeterModel { system_dim, meter_dim, g_max, isometry, meter_eigenvalues: Arc::new(labels) };

    let mut worst = T::zero();
    for g in validation_grid(g_max).into_iter().chain([T::zero()]) {
        worst = worst.max(isometry_defect(&model.isometry(g)?));
    }
    if !(worst <= T::tol(ISOMETRY_TOL)) {
        return Err(Error::NotIsometry { deviation: worst.as_f64() });
    }
    Ok(model)
}

/// Measurement operators recovered from the model's meter blocks.
pub fn decompose_isometry<T: Real>(model: &MeterModel<T>) -> MeasurementOps<T> {
    match &model.isometry {
        Isometry::Polynomial(u) => {
            let ops = (0..model.meter_dim)
                .map(|j| {
                    let coeffs =
                        u.coeffs().iter().map(|c| isometry_blocks(c, model.meter_dim).swap_remove(j)).collect();
                    PolyMatrix::new(coeffs).expect("blocks share a shape")
                })
                .collect();
            MeasurementOps::Polynomial { ops, g_max: model.g_max }
        }
        Isometry::SquareRoot(p) => MeasurementOps::SquareRoot(p.clone()),
    }
}

impl<T: Real> MeterModel<T> {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn meter_dim(&self) -> usize {
        self.meter_dim
    }

    pub fn g_max(&self) -> T {
        self.g_max
    }

    /// Replaces the meter eigenvalues `α_j(g)`; they must be pairwise
    /// distinct (gap ≥ 1e-9) on the validation grid.
    pub fn with_meter_eigenvalues(mut self, f: impl Fn(T) -> Vec<T> + Send + Sync + 'static) -> Result<Self> {
        for g in validation_grid(self.g_max) {
            let mut vals = f(g);
            if vals.len() != self.meter_dim {
                return Err(Error::DimensionError(format!(
                    "{} meter eigenvalues for a {}-dimensional meter",
                    vals.len(),
                    self.meter_dim
                )));
            }
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            if vals.windows(2).any(|w| !(w[1] - w[0] >= T::tol(EIGENVALUE_GAP))) {
                return Err(Error::InvalidArgument(format!("meter eigenvalues not distinct at g = {}", g.as_f64())));
            }
        }
        self.meter_eigenvalues = Arc::new(f);
        Ok(self)
    }

    pub fn meter_eigenvalues(&self, g: T) -> Vec<T> {
        (self.meter_eigenvalues)(g)
    }

    pub fn isometry(&self, g: T) -> Result<CMatrix<T>> {
        check_range(g, self.g_max)?;
        match &self.isometry {
            Isometry::Polynomial(u) => Ok(u.eval(g)),
            Isometry::SquareRoot(p) => {
                let ops: Vec<_> = p.measurement_operators(g)?.into_iter().map(|h| h.into_matrix()).collect();
                Ok(stack(&ops))
            }
        }
    }

    pub fn measurement_operators(&self, g: T) -> Result<Vec<CMatrix<T>>> {
        Ok(isometry_blocks(&self.isometry(g)?, self.meter_dim))
    }

    fn check_state(&self, s: &StateVector<T>) -> Result<()> {
        if s.dim() != self.system_dim {
            return Err(Error::DimensionError(format!("state dim {} vs system dim {}", s.dim(), self.system_dim)));
        }
        Ok(())
    }

    /// `U(g)s` on the composite space.
    pub fn apply(&self, s: &StateVector<T>, g: T) -> Result<Vec<crate::C<T>>> {
        self.check_state(s)?;
        Ok(self.isometry(g)?.mat_vec(s.amplitudes()))
    }

    /// `P(j) = ‖M_j(g)s‖²`.
    pub fn outcome_probabilities(&self, s: &StateVector<T>, g: T) -> Result<Vec<T>> {
        let us = self.apply(s, g)?;
        let m = self.meter_dim;
        Ok((0..m).map(|j| (0..self.system_dim).map(|a| us[a * m + j].norm_sqr()).sum()).collect())
    }

    /// `Σ_j α_j(g) P(j)`, the expectation of the meter observable.
    pub fn meter_expectation(&self, s: &StateVector<T>, g: T) -> Result<T> {
        let p = self.outcome_probabilities(s, g)?;
        Ok(self.meter_eigenvalues(g).iter().zip(&p).map(|(&a, &pj)| a * pj).sum())
    }

    /// System state after the interaction, `tr_M P_{U(g)s}`.
    pub fn reduced_state(&self, s: &StateVector<T>, g: T) -> Result<DensityMatrix<T>> {
        let us = self.apply(s, g)?;
        let n = us.len();
        let joint = CMatrix::from_fn(n, n, |i, j| us[i] * us[j].conj());
        let red = partial_trace_meter_matrix(&joint, self.system_dim, self.meter_dim)?;
        DensityMatrix::new(red)
    }

    /// Schmidt decomposition of `U(0)s`; returns whether it is a product state
    /// and the second Schmidt coefficient.
    pub fn weak_coupling_check(&self, s: &StateVector<T>) -> Result<(bool, T)> {
        let us = self.apply(s, T::zero())?;
        let m = self.meter_dim;
        let reshaped = CMatrix::from_fn(self.system_dim, m, |a, j| us[a * m + j]);
        let schmidt = svd(&reshaped)?.singulars;
        let second = schmidt.get(1).copied().unwrap_or_else(T::zero);
        Ok((second <= T::tol(PRODUCT_TOL), second))
    }
}
