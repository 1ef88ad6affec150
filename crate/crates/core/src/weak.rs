//! Weak values and postselected conditioned averages.
//!
//! The conditioned average is the Bayes-normalized two-step process: measure
//! `{M_j(g)}` with `M_j = E_j^{1/2}`, then postselect projectively on `ψ_f`,
//! so `P(f ∧ j) = |⟨ψ_f|M_j(g)ψ_i⟩|²`.

use crate::contextual::{build_f, pseudoinverse_cv, EXACT_CV_TOL};
use crate::error::{Error, Result};
use crate::fit::poly_fit;
use crate::linalg::{eigh, inner, projector, DensityMatrix, Hermitian, StateVector};
use crate::povm::ParamPovm;
use crate::scalar::{Real, C};

/// Overlaps and probabilities at or below this count as zero.
pub const ORTHOGONAL_TOL: f64 = 1e-12;

/// Postselection effect `0 ≤ E_f ≤ I`.
#[derive(Clone, Debug, PartialEq)]
pub struct PostselectionEffect<T>(Hermitian<T>);

impl<T: Real> PostselectionEffect<T> {
    pub fn new(effect: Hermitian<T>) -> Result<Self> {
        let (vals, _) = eigh(&effect)?;
        let slack = T::tol(1e-10);
        let (hi, lo) = (vals[0], vals[vals.len() - 1]);
        if lo < -slack {
            return Err(Error::NotPositive { min_eigenvalue: lo.as_f64() });
        }
        if hi > T::one() + slack {
            return Err(Error::InvalidMatrix(format!("effect eigenvalue {} exceeds 1", hi.as_f64())));
        }
        Ok(Self(effect))
    }

    /// Projective postselection on a pure state.
    pub fn from_state(psi: &StateVector<T>) -> Self {
        Self(projector(psi).as_hermitian())
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn effect(&self) -> &Hermitian<T> {
        &self.0
    }
}

fn same_dim(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionError(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

/// `⟨ψ_f|Aψ_i⟩ / ⟨ψ_f|ψ_i⟩` and its real part.
pub fn traditional_weak_value<T: Real>(
    a: &Hermitian<T>,
    psi_i: &StateVector<T>,
    psi_f: &StateVector<T>,
) -> Result<(C<T>, T)> {
    same_dim(a.dim(), psi_i.dim(), "observable vs initial state")?;
    same_dim(a.dim(), psi_f.dim(), "observable vs final state")?;
    let overlap = inner(psi_f.amplitudes(), psi_i.amplitudes());
    if overlap.norm() <= T::tol(ORTHOGONAL_TOL) {
        return Err(Error::OrthogonalPostselection { probability: overlap.norm_sqr().as_f64() });
    }
    let w = inner(psi_f.amplitudes(), &a.matrix().mat_vec(psi_i.amplitudes())) / overlap;
    Ok((w, w.re))
}

/// `tr(E(Aρ + ρA)) / (2 tr(Eρ))`.
pub fn mixed_weak_value<T: Real>(
    a: &Hermitian<T>,
    rho: &DensityMatrix<T>,
    effect: &PostselectionEffect<T>,
) -> Result<T> {
    same_dim(a.dim(), rho.dim(), "observable vs state")?;
    same_dim(a.dim(), effect.dim(), "observable vs effect")?;
    let e = effect.effect().matrix();
    let r = rho.matrix();
    let am = a.matrix();
    let denom = e.matmul(r).trace().re;
    if denom <= T::tol(ORTHOGONAL_TOL) {
        return Err(Error::OrthogonalPostselection { probability: denom.as_f64() });
    }
    let anti = &am.matmul(r) + &r.matmul(am);
    Ok(e.matmul(&anti).trace().re / (T::lit(2.0) * denom))
}

/// Postselected average of `α_j` and the postselection success probability.
pub fn conditioned_average<T: Real>(
    povm: &ParamPovm<T>,
    alpha: &[T],
    psi_i: &StateVector<T>,
    psi_f: &StateVector<T>,
    g: T,
) -> Result<(T, T)> {
    same_dim(alpha.len(), povm.outcomes(), "contextual values vs outcomes")?;
    let w = joint_weights(povm, psi_i, psi_f, g)?;
    let success: T = w.iter().copied().sum();
    if success <= T::tol(ORTHOGONAL_TOL) {
        return Err(Error::OrthogonalPostselection { probability: success.as_f64() });
    }
    let value = alpha.iter().zip(&w).map(|(&a, &wj)| a * wj).sum::<T>() / success;
    Ok((value, success))
}

/// `|⟨ψ_f|M_j(g)ψ_i⟩|²` for each outcome.
pub fn joint_weights<T: Real>(
    povm: &ParamPovm<T>,
    psi_i: &StateVector<T>,
    psi_f: &StateVector<T>,
    g: T,
) -> Result<Vec<T>> {
    same_dim(povm.dim(), psi_i.dim(), "POVM vs initial state")?;
    same_dim(povm.dim(), psi_f.dim(), "POVM vs final state")?;
    Ok(povm
        .measurement_operators(g)?
        .iter()
        .map(|m| inner(psi_f.amplitudes(), &m.matrix().mat_vec(psi_i.amplitudes())).norm_sqr())
        .collect())
}

/// Extrapolation settings for [`weak_limit_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeakLimitFit {
    pub degree: usize,
    pub points: usize,
}

impl Default for WeakLimitFit {
    fn default() -> Self {
        Self { degree: 2, points: 5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakLimitReport<T> {
    pub g_grid: Vec<T>,
    pub conditioned_avgs: Vec<T>,
    pub success_probs: Vec<T>,
    pub extrapolated_limit: T,
    pub traditional_value: T,
    pub discrepancy: T,
    /// Fit coefficients `c_m` of `g^m`; `c_0` is the extrapolated limit.
    pub fit_coefficients: Vec<T>,
}

pub fn weak_limit<T: Real>(
    povm: &ParamPovm<T>,
    a: &Hermitian<T>,
    psi_i: &StateVector<T>,
    psi_f: &StateVector<T>,
    grid: &[T],
) -> Result<WeakLimitReport<T>> {
    weak_limit_with(povm, a, psi_i, psi_f, grid, WeakLimitFit::default())
}

/// Conditioned averages with per-g pseudoinverse contextual values,
/// extrapolated to `g → 0` by a polynomial fit over the smallest `g`.
pub fn weak_limit_with<T: Real>(
    povm: &ParamPovm<T>,
    a: &Hermitian<T>,
    psi_i: &StateVector<T>,
    psi_f: &StateVector<T>,
    grid: &[T],
    fit: WeakLimitFit,
) -> Result<WeakLimitReport<T>> {
    if grid.len() < fit.points || fit.points <= fit.degree {
        return Err(Error::InsufficientSamples { needed: fit.points.max(fit.degree + 1), got: grid.len() });
    }
    let f = build_f(povm, a)?;
    let mut conditioned_avgs = Vec::with_capacity(grid.len());
    let mut success_probs = Vec::with_capacity(grid.len());
    for &g in grid {
        let cv = pseudoinverse_cv(&f, g, None)?;
        if !cv.is_exact(T::tol(EXACT_CV_TOL)) {
            return Err(Error::NoExactCv { g: g.as_f64(), residual: cv.residual.as_f64() });
        }
        let (value, success) = conditioned_average(povm, &cv.alpha, psi_i, psi_f, g)?;
        conditioned_avgs.push(value);
        success_probs.push(success);
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&x, &y| grid[x].abs().partial_cmp(&grid[y].abs()).unwrap_or(std::cmp::Ordering::Equal));
    let xs: Vec<T> = order[..fit.points].iter().map(|&i| grid[i]).collect();
    let ys: Vec<T> = order[..fit.points].iter().map(|&i| conditioned_avgs[i]).collect();
    let fit_coefficients = poly_fit(&xs, &ys, fit.degree)?;
    let extrapolated_limit = fit_coefficients[0];
    let traditional_value = mixed_weak_value(a, &projector(psi_i), &PostselectionEffect::from_state(psi_f))?;
    Ok(WeakLimitReport {
        g_grid: grid.to_vec(),
        conditioned_avgs,
        success_probs,
        extrapolated_limit,
        traditional_value,
        discrepancy: (extrapolated_limit - traditional_value).abs(),
        fit_coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::default_grid;
    use crate::povm::qubit_linear;
    use std::f64::consts::PI;

    fn sz() -> Hermitian<f64> {
        Hermitian::from_real_diag(&[1.0, -1.0])
    }

    fn plus() -> StateVector<f64> {
        StateVector::from_real(&[1.0, 1.0]).unwrap()
    }

    fn angle(theta: f64) -> StateVector<f64> {
        StateVector::from_angle(2, theta).unwrap()
    }

    #[test]
    fn traditional_values() {
        let (_, r) = traditional_weak_value(&sz(), &angle(0.3), &angle(0.3)).unwrap();
        assert!((r - (0.6f64).cos()).abs() < 1e-14);
        let (_, r) = traditional_weak_value(&sz(), &plus(), &angle(PI / 8.0)).unwrap();
        assert!((r - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        let (_, r) = traditional_weak_value(&sz(), &plus(), &angle(0.74 * PI)).unwrap();
        assert!((r + 31.8).abs() < 0.05, "{r}");
        assert!(matches!(
            traditional_weak_value(&sz(), &angle(0.0), &angle(PI / 2.0)),
            Err(Error::OrthogonalPostselection { .. })
        ));
    }

    #[test]
    fn mixed_values() {
        let eff = PostselectionEffect::from_state(&angle(PI / 8.0));
        let m = mixed_weak_value(&sz(), &projector(&plus()), &eff).unwrap();
        assert!((m - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        let id = PostselectionEffect::new(Hermitian::identity(2)).unwrap();
        let m = mixed_weak_value(&sz(), &projector(&angle(0.4)), &id).unwrap();
        assert!((m - 0.8f64.cos()).abs() < 1e-14);
        let m = mixed_weak_value(&sz(), &DensityMatrix::maximally_mixed(2), &eff).unwrap();
        assert!((m - (PI / 4.0).cos()).abs() < 1e-14);
        assert!(PostselectionEffect::new(Hermitian::from_real_diag(&[1.5, 0.0])).is_err());
    }

    #[test]
    fn conditioned_qubit() {
        let g = 0.01;
        let povm = qubit_linear(1.0);
        let (v, _) = conditioned_average(&povm, &[1.0 / g, -1.0 / g], &plus(), &angle(PI / 8.0), g).unwrap();
        // closed form cos2θ / (1 + sin2θ·√(1−g²))
        assert!((v - 1.0 / (2f64.sqrt() + (1.0 - g * g).sqrt())).abs() < 1e-12, "{v}");
        let (v, _) = conditioned_average(&povm, &[2.5, 2.5], &plus(), &angle(1.1), 0.3).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
        let r = conditioned_average(&povm, &[1.0, -1.0], &angle(0.0), &angle(PI / 2.0), 0.0);
        assert!(matches!(r, Err(Error::OrthogonalPostselection { .. })));
    }

    #[test]
    fn weak_limit_cases() {
        let povm = qubit_linear(1.0);
        let grid = default_grid();
        let r = weak_limit(&povm, &sz(), &plus(), &angle(PI / 8.0), &grid).unwrap();
        assert!((r.extrapolated_limit - 0.414214).abs() < 1e-4);
        assert!(r.discrepancy <= 1e-4);
        let r = weak_limit(&povm, &sz(), &angle(0.3), &angle(0.3), &grid).unwrap();
        assert!((r.extrapolated_limit - 0.6f64.cos()).abs() < 1e-6);
        let r = weak_limit(&povm, &Hermitian::identity(2), &plus(), &angle(0.2), &grid).unwrap();
        assert!(r.conditioned_avgs.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((r.extrapolated_limit - 1.0).abs() < 1e-10);
    }
}
