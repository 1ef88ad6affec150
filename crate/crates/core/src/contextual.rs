//! Contextual values: the eigenvalue matrix `F(g)` of a commuting POVM, the
//! pseudoinverse prescription `α = F⁺ a`, exact solvability, truncated-POVM
//! comparisons, variance-minimizing values and pole orders.

use crate::asymptotics::{leading_order_fit, OrderEstimate};
use crate::error::{Error, Result};
use crate::linalg::{common_eigenbasis, complexify, default_rank_rtol, pinv, vec_norm, CMatrix, Hermitian};
use crate::poly::PolyMatrix;
use crate::povm::{ParamPovm, TruncateMode};
use crate::scalar::{re, Real};

/// Residual below which contextual values count as exact.
pub const EXACT_CV_TOL: f64 = 1e-9;
/// Relative tolerance for equality of full and truncated solutions.
pub const ALPHA_MATCH_RTOL: f64 = 1e-8;

/// Outcome-eigenvalue matrix: column `j` lists the eigenvalues of `E_j(g)` in
/// a common eigenbasis; `a_vec` lists the observable's eigenvalues in the same
/// basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct FMatrix<T> {
    poly: PolyMatrix<T>,
    a_vec: Vec<T>,
    basis: Option<CMatrix<T>>,
    g_max: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvSolution<T> {
    pub g: T,
    pub alpha: Vec<T>,
    /// `‖F(g)α − a‖₂`, equal to `‖Σ_j α_j E_j(g) − A‖_F` for a commuting family.
    pub residual: T,
    pub rank_used: usize,
    /// Rounding floor `64ε‖F(g)‖_F‖α‖₂`: no double-precision `α` does better.
    pub rounding_floor: T,
}

impl<T: Real> CvSolution<T> {
    /// Residual within `tol` of the rounding floor.
    pub fn is_exact(&self, tol: T) -> bool {
        self.residual <= tol + self.rounding_floor
    }
}

fn rounding_floor<T: Real>(m: &CMatrix<T>, alpha: &[T]) -> T {
    T::epsilon() * T::lit(64.0) * m.norm_fro() * vec_norm(&complexify(alpha))
}

impl<T: Real> FMatrix<T> {
    /// Wraps a raw matrix polynomial (no POVM structure implied).
    pub fn from_poly(poly: PolyMatrix<T>, a_vec: Vec<T>, g_max: T) -> Result<Self> {
        if a_vec.len() != poly.rows() {
            return Err(Error::DimensionError(format!("a has {} entries, F has {} rows", a_vec.len(), poly.rows())));
        }
        Ok(Self { poly, a_vec, basis: None, g_max })
    }

    pub fn rows(&self) -> usize {
        self.poly.rows()
    }

    pub fn outcomes(&self) -> usize {
        self.poly.cols()
    }

    pub fn poly(&self) -> &PolyMatrix<T> {
        &self.poly
    }

    pub fn a_vec(&self) -> &[T] {
        &self.a_vec
    }

    pub fn basis(&self) -> Option<&CMatrix<T>> {
        self.basis.as_ref()
    }

    pub fn g_max(&self) -> T {
        self.g_max
    }

    pub fn with_a(&self, a_vec: Vec<T>) -> Result<Self> {
        let mut f = Self::from_poly(self.poly.clone(), a_vec, self.g_max)?;
        f.basis = self.basis.clone();
        Ok(f)
    }

    pub fn eval(&self, g: T) -> Result<CMatrix<T>> {
        let slack = self.g_max * T::tol(1e-12);
        if !(g.abs() <= self.g_max + slack) {
            return Err(Error::OutOfValidityRange { g: g.as_f64(), g_max: self.g_max.as_f64() });
        }
        Ok(self.poly.eval(g))
    }

    /// Real-valued `F(g)` rows.
    pub fn eval_real(&self, g: T) -> Result<Vec<Vec<T>>> {
        let m = self.eval(g)?;
        Ok((0..m.rows()).map(|i| m.row(i).iter().map(|z| z.re).collect()).collect())
    }

    /// Largest deviation of a row sum from `1` (order 0) or `0` (orders ≥ 1).
    pub fn row_sum_defect(&self) -> T {
        let mut worst = T::zero();
        for (k, c) in self.poly.coeffs().iter().enumerate() {
            let target = if k == 0 { T::one() } else { T::zero() };
            for i in 0..c.rows() {
                let s = c.row(i).iter().map(|z| z.re).sum::<T>();
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// Whether every entry lies in `[−1e-10, 1 + 1e-10]` on the grid.
    pub fn entries_in_unit_interval(&self, grid: &[T]) -> Result<bool> {
        let slack = T::tol(1e-10);
        for &g in grid {
            for row in self.eval_real(g)? {
                if row.iter().any(|&v| v < -slack || v > T::one() + slack) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Reads `F` and `a` off a commuting POVM and observable.
pub fn build_f<T: Real>(povm: &ParamPovm<T>, a: &Hermitian<T>) -> Result<FMatrix<T>> {
    if a.dim() != povm.dim() {
        return Err(Error::DimensionError(format!("observable dim {} vs POVM dim {}", a.dim(), povm.dim())));
    }
    let mut ops = vec![a.clone()];
    ops.extend(povm.coefficient_operators());
    let basis = common_eigenbasis(&ops)?;
    let d = povm.dim();
    let vectors: Vec<_> = (0..d).map(|i| basis.col(i)).collect();
    let degree = povm.max_degree();
    let coeffs = (0..=degree)
        .map(|k| {
            CMatrix::from_fn(d, povm.outcomes(), |i, j| {
                let c = Hermitian::from_matrix_unchecked(povm.elements()[j].coeff(k));
                re(c.expectation(&vectors[i]))
            })
        })
        .collect();
    let a_vec = vectors.iter().map(|v| a.expectation(v)).collect();
    Ok(FMatrix { poly: PolyMatrix::new(coeffs)?, a_vec, basis: Some(basis), g_max: povm.g_max() })
}

/// `α = F(g)⁺ a` with the rank cutoff used and the residual.
pub fn pseudoinverse_cv<T: Real>(f: &FMatrix<T>, g: T, rank_rtol: Option<T>) -> Result<CvSolution<T>> {
    let m = f.eval(g)?;
    let rtol = rank_rtol.unwrap_or_else(|| default_rank_rtol(&m));
    let p = pinv(&m, rtol)?;
    let a = complexify(&f.a_vec);
    let alpha: Vec<T> = p.matrix.mat_vec(&a).iter().map(|z| z.re).collect();
    let residual = residual(&m, &alpha, &f.a_vec);
    let rounding_floor = rounding_floor(&m, &alpha);
    Ok(CvSolution { g, alpha, residual, rank_used: p.rank, rounding_floor })
}

fn residual<T: Real>(m: &CMatrix<T>, alpha: &[T], a: &[T]) -> T {
    let fa = m.mat_vec(&complexify(alpha));
    let diff: Vec<_> = fa.iter().zip(a).map(|(x, &y)| x - re(y)).collect();
    vec_norm(&diff)
}

/// Whether the pseudoinverse solution is exact (residual ≤ `tol` above the
/// rounding floor) at every grid point.
pub fn exact_cv_exists<T: Real>(f: &FMatrix<T>, grid: &[T], tol: T) -> Result<bool> {
    for &g in grid {
        if !pseudoinverse_cv(f, g, None)?.is_exact(tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Full-versus-truncated pseudoinverse comparison on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationReport<T> {
    pub n: usize,
    pub mode: TruncateMode,
    pub grid: Vec<T>,
    pub full_residual: Vec<T>,
    pub truncated_residual: Vec<T>,
    pub alpha_full: Vec<Vec<T>>,
    pub alpha_truncated: Vec<Vec<T>>,
    pub full_solvable: bool,
    pub truncated_solvable: bool,
    pub alphas_match: bool,
    /// Largest `‖α_full − α_trunc‖ / ‖α_full‖` over the grid.
    pub max_relative_gap: T,
}

pub fn truncated_cv_check<T: Real>(
    povm: &ParamPovm<T>,
    a: &Hermitian<T>,
    n: usize,
    grid: &[T],
    mode: TruncateMode,
) -> Result<TruncationReport<T>> {
    let truncated = povm.truncate(n, mode)?;
    let f_full = build_f(povm, a)?;
    let f_trunc = build_f(&truncated, a)?;
    let tol = T::tol(EXACT_CV_TOL);
    let mut rep = TruncationReport {
        n,
        mode,
        grid: grid.to_vec(),
        full_residual: Vec::new(),
        truncated_residual: Vec::new(),
        alpha_full: Vec::new(),
        alpha_truncated: Vec::new(),
        full_solvable: true,
        truncated_solvable: true,
        alphas_match: true,
        max_relative_gap: T::zero(),
    };
    for &g in grid {
        let full = pseudoinverse_cv(&f_full, g, None)?;
        let trunc = pseudoinverse_cv(&f_trunc, g, None)?;
        rep.full_solvable &= full.is_exact(tol);
        rep.truncated_solvable &= trunc.is_exact(tol);
        let diff: Vec<_> = full.alpha.iter().zip(&trunc.alpha).map(|(x, y)| re(*x - *y)).collect();
        let scale = vec_norm(&complexify(&full.alpha));
        let gap = vec_norm(&diff);
        let rel = if scale > T::zero() {
            gap / scale
        } else if gap > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        rep.max_relative_gap = rep.max_relative_gap.max(rel);
        rep.full_residual.push(full.residual);
        rep.truncated_residual.push(trunc.residual);
        rep.alpha_full.push(full.alpha);
        rep.alpha_truncated.push(trunc.alpha);
    }
    rep.alphas_match = rep.max_relative_gap <= T::tol(ALPHA_MATCH_RTOL);
    Ok(rep)
}

/// Minimizes the outcome-weighted second moment `Σ_j p_j α_j²` over exact
/// solutions of `F(g) α = a`.
///
/// With `W = diag(p)` this is the weighted least-norm solution
/// `α = W^{-1/2} (F W^{-1/2})⁺ a`.
pub fn variance_min_cv<T: Real>(f: &FMatrix<T>, g: T, probs: &[T]) -> Result<CvSolution<T>> {
    if probs.len() != f.outcomes() {
        return Err(Error::DimensionError(format!("{} weights for {} outcomes", probs.len(), f.outcomes())));
    }
    if probs.iter().any(|&p| !(p > T::zero())) {
        return Err(Error::InvalidArgument("weights must be strictly positive".into()));
    }
    let total = probs.iter().copied().sum::<T>();
    if (total - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::InvalidArgument(format!("weights sum to {}", total.as_f64())));
    }
    let m = f.eval(g)?;
    let inv_sqrt: Vec<T> = probs.iter().map(|p| T::one() / p.sqrt()).collect();
    let scaled = CMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * inv_sqrt[j]);
    let p = pinv(&scaled, default_rank_rtol(&scaled))?;
    let beta = p.matrix.mat_vec(&complexify(&f.a_vec));
    let alpha: Vec<T> = beta.iter().zip(&inv_sqrt).map(|(b, s)| b.re * *s).collect();
    let res = residual(&m, &alpha, &f.a_vec);
    let sol = CvSolution { g, residual: res, rank_used: p.rank, rounding_floor: rounding_floor(&m, &alpha), alpha };
    if !sol.is_exact(T::tol(EXACT_CV_TOL)) {
        return Err(Error::NoExactCv { g: g.as_f64(), residual: res.as_f64() });
    }
    Ok(sol)
}

/// Pole order of the pseudoinverse solution: the negated log-log slope of
/// `‖α(g)‖_∞` over the six smallest grid points.
pub fn pole_order<T: Real>(f: &FMatrix<T>, grid: &[T]) -> Result<OrderEstimate<T>> {
    let samples = grid
        .iter()
        .map(|&g| {
            let s = pseudoinverse_cv(f, g, None)?;
            Ok((g, s.alpha.iter().fold(T::zero(), |m, a| m.max(a.abs()))))
        })
        .collect::<Result<Vec<_>>>()?;
    if samples.iter().all(|&(_, v)| v == T::zero()) {
        return Err(Error::NoPole);
    }
    let est = leading_order_fit(&samples)?;
    Ok(OrderEstimate { exponent: -est.exponent, ..est })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::qubit_linear;

    fn eq70() -> FMatrix<f64> {
        let p0 = CMatrix::from_real_rows(&[&[1.0, 1.0], &[-1.0, -1.0]]);
        let p1 = CMatrix::identity(2);
        FMatrix::from_poly(PolyMatrix::linear(p0, p1).unwrap(), vec![1.0, 1.0], 1.0).unwrap()
    }

    fn sigma_z() -> Hermitian<f64> {
        Hermitian::from_real_diag(&[1.0, -1.0])
    }

    fn flat() -> ParamPovm<f64> {
        let half = PolyMatrix::constant(CMatrix::identity(2).scale(0.5));
        ParamPovm::new(vec![half.clone(), half], 0.1).unwrap()
    }

    #[test]
    fn qubit_linear_f() {
        let f = build_f(&qubit_linear(0.5), &sigma_z()).unwrap();
        assert_eq!(f.a_vec(), &[1.0, -1.0]);
        let g = 0.1;
        let m = f.eval_real(g).unwrap();
        assert!((m[0][0] - 0.55).abs() < 1e-15 && (m[0][1] - 0.45).abs() < 1e-15);
        assert!((m[1][0] - 0.45).abs() < 1e-15 && (m[1][1] - 0.55).abs() < 1e-15);
        assert!(f.row_sum_defect() < 1e-15);
        assert!(f.entries_in_unit_interval(&[0.01, 0.1, 0.5]).unwrap());
    }

    #[test]
    fn identical_outcomes_have_rank_one_f() {
        let third = PolyMatrix::constant(CMatrix::<f64>::identity(3).scale(1.0 / 3.0));
        let p = ParamPovm::new(vec![third.clone(), third.clone(), third], 0.1).unwrap();
        let f = build_f(&p, &Hermitian::from_real_diag(&[1.0, 0.0, -1.0])).unwrap();
        let s = pseudoinverse_cv(&f, 0.05, None).unwrap();
        assert_eq!(s.rank_used, 1);
    }

    #[test]
    fn non_commuting_observable() {
        let x = Hermitian::new(CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!(matches!(build_f(&qubit_linear(0.5), &x), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn pip_examples() {
        let f = build_f(&qubit_linear(0.5), &sigma_z()).unwrap();
        let s = pseudoinverse_cv(&f, 0.1, None).unwrap();
        assert!((s.alpha[0] - 10.0).abs() < 1e-12 && (s.alpha[1] + 10.0).abs() < 1e-12);
        assert!(s.residual <= 1e-10);

        let f = build_f(&flat(), &sigma_z()).unwrap();
        let s = pseudoinverse_cv(&f, 0.05, None).unwrap();
        assert!(s.alpha.iter().all(|a| a.abs() < 1e-15));
        assert!((s.residual - 2f64.sqrt()).abs() < 1e-15);

        // Cramer: α = ((g − 2)/g², (2 + g)/g²) = (−190, 210) at g = 0.1
        let s = pseudoinverse_cv(&eq70(), 0.1, None).unwrap();
        assert!((s.alpha[0] + 190.0).abs() < 1e-9 && (s.alpha[1] - 210.0).abs() < 1e-9);
    }

    #[test]
    fn exactness() {
        let grid = crate::grid::default_grid();
        assert!(exact_cv_exists(&build_f(&qubit_linear(0.5), &sigma_z()).unwrap(), &grid, 1e-9).unwrap());
        assert!(!exact_cv_exists(&build_f(&flat(), &sigma_z()).unwrap(), &grid, 1e-9).unwrap());
        let f = build_f(&qubit_linear(0.5), &Hermitian::identity(2)).unwrap();
        assert!(exact_cv_exists(&f, &grid, 1e-9).unwrap());
        let s = pseudoinverse_cv(&f, 0.1, None).unwrap();
        assert!(s.alpha.iter().all(|a| (a - 1.0).abs() < 1e-12));
    }

    #[test]
    fn linear_povm_is_its_own_truncation() {
        let grid = crate::grid::default_grid();
        let r = truncated_cv_check(&qubit_linear(0.5), &sigma_z(), 1, &grid, TruncateMode::Gap).unwrap();
        assert!(r.alphas_match && r.truncated_solvable && r.full_solvable);
    }

    #[test]
    fn variance_min_hand_example() {
        // Lagrange: α = Fᵀ(FFᵀ)⁻¹a = (1, −1, 0)
        let fm = CMatrix::<f64>::from_real_rows(&[&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.5]]);
        let f = FMatrix::from_poly(PolyMatrix::constant(fm), vec![1.0, -1.0], 1.0).unwrap();
        let s = variance_min_cv(&f, 0.5, &[1.0 / 3.0; 3]).unwrap();
        assert!((s.alpha[0] - 1.0).abs() < 1e-12);
        assert!((s.alpha[1] + 1.0).abs() < 1e-12);
        assert!(s.alpha[2].abs() < 1e-12);
    }

    #[test]
    fn variance_min_square_matches_pip() {
        let f = build_f(&qubit_linear(0.5), &sigma_z()).unwrap();
        let v = variance_min_cv(&f, 0.1, &[0.3, 0.7]).unwrap();
        let p = pseudoinverse_cv(&f, 0.1, None).unwrap();
        assert!(v.alpha.iter().zip(&p.alpha).all(|(a, b)| (a - b).abs() < 1e-10));
        let flat_f = build_f(&flat(), &sigma_z()).unwrap();
        assert!(matches!(variance_min_cv(&flat_f, 0.1, &[0.5, 0.5]), Err(Error::NoExactCv { .. })));
    }

    #[test]
    fn pole_orders() {
        let grid = crate::grid::default_grid();
        let two = pole_order(&eq70(), &grid).unwrap();
        assert!((two.exponent - 2.0).abs() <= 0.05, "{two:?}");
        let one = pole_order(&eq70().with_a(vec![1.0, -1.0]).unwrap(), &grid).unwrap();
        assert!((one.exponent - 1.0).abs() <= 0.05, "{one:?}");
        let c = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let constant = FMatrix::from_poly(PolyMatrix::constant(c), vec![1.0, 0.0], 1.0).unwrap();
        assert!(pole_order(&constant, &grid).unwrap().exponent.abs() <= 0.05);
        let zero = FMatrix::from_poly(PolyMatrix::constant(CMatrix::identity(2)), vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(pole_order(&zero, &grid), Err(Error::NoPole));
    }
}
