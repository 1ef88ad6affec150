//! Small-g asymptotics of matrix polynomials: leading-order fits, singular
//! value trajectories, the truncation/SVD commutation test and the check of
//! the claim "no identically-zero singular value ⇒ all singular values are
//! `O(g)`" for linear `F(g) = P + gQ`.

use crate::contextual::{pole_order, FMatrix};
use crate::error::{Error, Result};
use crate::fit::{line_fit, poly_eval, poly_fit};
use crate::linalg::{svd, CMatrix};
use crate::poly::PolyMatrix;
use crate::scalar::Real;

/// Number of smallest-g samples used by order fits.
pub const FIT_POINTS: usize = 6;
/// Fits with `r² < 0.999` are flagged unreliable.
pub const RELIABLE_R2: f64 = 0.999;
/// ...unless every log-log residual is below this: a flat trajectory has no
/// variance for `r²` to explain.
pub const RELIABLE_LOG_MISFIT: f64 = 1e-6;
/// A trajectory whose grid maximum is at most this is identically zero.
pub const ZERO_TRAJECTORY: f64 = 1e-12;
/// Leading orders up to this count as `O(g¹)`.
pub const ORDER_ONE_CUTOFF: f64 = 1.05;
/// Relative agreement required for `Σ(τ(F)) = τ(Σ(F))`.
pub const COMMUTE_RTOL: f64 = 1e-6;

/// Power-law estimate `value ≈ coefficient · g^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderEstimate<T> {
    pub exponent: T,
    pub coefficient: T,
    pub fit_r2: T,
    /// Largest absolute residual of the log-log line.
    pub log_misfit: T,
}

impl<T: Real> OrderEstimate<T> {
    pub fn reliable(&self) -> bool {
        self.fit_r2 >= T::lit(RELIABLE_R2) || self.log_misfit <= T::lit(RELIABLE_LOG_MISFIT)
    }
}

/// Log-log least squares over the six smallest `g`.
pub fn leading_order_fit<T: Real>(samples: &[(T, T)]) -> Result<OrderEstimate<T>> {
    if samples.len() < FIT_POINTS {
        return Err(Error::InsufficientSamples { needed: FIT_POINTS, got: samples.len() });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let window = &sorted[..FIT_POINTS];
    if let Some(&(g, value)) = window.iter().find(|(g, v)| !(*v > T::zero()) || !(*g > T::zero())) {
        return Err(Error::NotPositiveSamples { g: g.as_f64(), value: value.as_f64() });
    }
    let x: Vec<T> = window.iter().map(|(g, _)| g.ln()).collect();
    let y: Vec<T> = window.iter().map(|(_, v)| v.ln()).collect();
    let fit = line_fit(&x, &y)?;
    let log_misfit = x.iter().zip(&y).map(|(&a, &b)| (b - fit.intercept - fit.slope * a).abs()).fold(T::zero(), T::max);
    Ok(OrderEstimate { exponent: fit.slope, coefficient: fit.intercept.exp(), fit_r2: fit.r2, log_misfit })
}

/// Singular values of `F(g)` along a grid, matched across `g` by sort order.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdCurve<T> {
    pub g_grid: Vec<T>,
    /// `singulars[i]` is the descending singular-value vector at `g_grid[i]`.
    pub singulars: Vec<Vec<T>>,
    /// Left singular vectors at the smallest grid point.
    pub limit_left: CMatrix<T>,
    /// Right singular vectors at the smallest grid point.
    pub limit_right: CMatrix<T>,
    /// Trajectory indices `k` where `σ_k` and `σ_{k+1}` nearly touch, so
    /// sort-order matching may have swapped them.
    pub near_crossings: Vec<usize>,
}

impl<T: Real> SvdCurve<T> {
    /// Values of trajectory `k` along the grid.
    pub fn trajectory(&self, k: usize) -> Vec<T> {
        self.singulars.iter().map(|s| s[k]).collect()
    }

    pub fn trajectories(&self) -> usize {
        self.singulars.first().map_or(0, |s| s.len())
    }

    /// CSV with header `g,sigma_1,...,sigma_d`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("g");
        for k in 1..=self.trajectories() {
            out.push_str(&format!(",sigma_{k}"));
        }
        out.push('\n');
        for (g, s) in self.g_grid.iter().zip(&self.singulars) {
            out.push_str(&format!("{:e}", g.as_f64()));
            for v in s {
                out.push_str(&format!(",{:e}", v.as_f64()));
            }
            out.push('\n');
        }
        out
    }
}

pub fn svd_curve<T: Real>(f: &PolyMatrix<T>, grid: &[T]) -> Result<SvdCurve<T>> {
    if grid.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut singulars = Vec::with_capacity(grid.len());
    let mut smallest: Option<(T, CMatrix<T>, CMatrix<T>)> = None;
    for &g in grid {
        let s = svd(&f.eval(g))?;
        if smallest.as_ref().is_none_or(|(gs, _, _)| g.abs() < *gs) {
            smallest = Some((g.abs(), s.left.clone(), s.right.clone()));
        }
        singulars.push(s.singulars);
    }
    let (_, limit_left, limit_right) = smallest.expect("non-empty grid");
    let width = singulars[0].len();
    let mut near_crossings = Vec::new();
    for k in 0..width.saturating_sub(1) {
        let touches = singulars.iter().any(|s| {
            let gap = s[k] - s[k + 1];
            gap <= T::tol(1e-9) * s[0] && s[k] > T::tol(ZERO_TRAJECTORY)
        });
        if touches {
            near_crossings.push(k);
        }
    }
    Ok(SvdCurve { g_grid: grid.to_vec(), singulars, limit_left, limit_right, near_crossings })
}

/// `Σ(τ(F))` against `τ(Σ(F))` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorReport<T> {
    pub n: usize,
    /// Singular values of the order-`n` truncation of `F`.
    pub left: SvdCurve<T>,
    /// Order-`n` truncations of the fitted singular-value series of `F`,
    /// evaluated on the grid (`right[i][k]` at `g_grid[i]`).
    pub right: Vec<Vec<T>>,
    /// Truncated series coefficients per trajectory (`right_coeffs[k][m]` of `g^m`).
    pub right_coeffs: Vec<Vec<T>>,
    pub commute: bool,
    /// Largest `|left − right| / max(|left|, |right|)` over the grid.
    pub max_relative_gap: T,
    /// A trajectory fit used to build `right` had relative misfit above 1e-6.
    pub unreliable_fit: bool,
}

pub fn truncation_svd_commutator<T: Real>(f: &PolyMatrix<T>, n: usize, grid: &[T]) -> Result<CommutatorReport<T>> {
    let truncated = f.keep_orders(|k| k <= n);
    let left = svd_curve(&truncated, grid)?;
    let full = svd_curve(f, grid)?;

    let points = FIT_POINTS.max(n + 4);
    if grid.len() < points {
        return Err(Error::InsufficientSamples { needed: points, got: grid.len() });
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].abs().partial_cmp(&grid[b].abs()).unwrap_or(std::cmp::Ordering::Equal));
    let window: Vec<usize> = order[..points].to_vec();
    let xs: Vec<T> = window.iter().map(|&i| grid[i]).collect();
    let g_ref = xs.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let sigma_scale = window.iter().map(|&i| full.singulars[i][0]).fold(T::zero(), T::max).max(T::min_positive_value());

    let mut right_coeffs = Vec::with_capacity(full.trajectories());
    let mut unreliable_fit = false;
    for k in 0..full.trajectories() {
        let ys: Vec<T> = window.iter().map(|&i| full.singulars[i][k]).collect();
        let c = poly_fit(&xs, &ys, n + 2)?;
        let misfit = xs.iter().zip(&ys).map(|(&x, &y)| (poly_eval(&c, x) - y).abs()).fold(T::zero(), T::max);
        if misfit > T::tol(1e-6) * sigma_scale {
            unreliable_fit = true;
        }
        let snap = T::tol(1e-10) * sigma_scale;
        let truncated: Vec<T> = c
            .iter()
            .take(n + 1)
            .enumerate()
            .map(|(m, &cm)| if (cm * g_ref.powi(m as i32)).abs() <= snap { T::zero() } else { cm })
            .collect();
        right_coeffs.push(truncated);
    }
    let right: Vec<Vec<T>> = grid.iter().map(|&g| right_coeffs.iter().map(|c| poly_eval(c, g)).collect()).collect();

    let floor = T::tol(ZERO_TRAJECTORY);
    let mut max_relative_gap = T::zero();
    let mut commute = true;
    for (l, r) in left.singulars.iter().zip(&right) {
        for (&a, &b) in l.iter().zip(r) {
            let diff = (a - b).abs();
            let scale = a.abs().max(b.abs());
            if diff > T::tol(COMMUTE_RTOL) * scale + floor {
                commute = false;
            }
            if scale > floor {
                max_relative_gap = max_relative_gap.max(diff / scale);
            }
        }
    }
    Ok(CommutatorReport { n, left, right, right_coeffs, commute, max_relative_gap, unreliable_fit })
}

/// Verdict on the claim for a linear matrix polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct ClaimReport<T> {
    pub curve: SvdCurve<T>,
    /// Per trajectory: identically zero on the grid.
    pub zero_trajectories: Vec<bool>,
    /// Per trajectory leading order (`None` for zero trajectories).
    pub orders: Vec<Option<OrderEstimate<T>>>,
    pub claim_holds: bool,
    pub counterexample_found: bool,
    /// Every trajectory is treated as "relevant"; the narrower notion is not
    /// available, so the check is conservative.
    pub caveat: &'static str,
}

pub const RELEVANT_CAVEAT: &str = "all singular values treated as relevant";

pub fn proof_claim_check<T: Real>(f: &PolyMatrix<T>, grid: &[T]) -> Result<ClaimReport<T>> {
    if f.max_degree() > 1 {
        return Err(Error::NotLinear { degree: f.max_degree() });
    }
    let curve = svd_curve(f, grid)?;
    let zero_cut = T::tol(ZERO_TRAJECTORY);
    let mut zero_trajectories = Vec::new();
    let mut orders = Vec::new();
    for k in 0..curve.trajectories() {
        let traj = curve.trajectory(k);
        let is_zero = traj.iter().all(|&v| v <= zero_cut);
        zero_trajectories.push(is_zero);
        if is_zero {
            orders.push(None);
        } else {
            let samples: Vec<(T, T)> = grid.iter().copied().zip(traj).collect();
            orders.push(Some(leading_order_fit(&samples)?));
        }
    }
    let any_zero = zero_trajectories.iter().any(|&z| z);
    let all_order_one = orders.iter().flatten().all(|o| o.exponent <= T::lit(ORDER_ONE_CUTOFF));
    let claim_holds = any_zero || all_order_one;
    Ok(ClaimReport {
        curve,
        zero_trajectories,
        orders,
        claim_holds,
        counterexample_found: !claim_holds,
        caveat: RELEVANT_CAVEAT,
    })
}

/// Pole order of `‖F(g)⁺ a‖_∞` as `g → 0`.
pub fn pinv_pole_order<T: Real>(f: &PolyMatrix<T>, a: &[T], grid: &[T]) -> Result<OrderEstimate<T>> {
    let g_max = grid.iter().fold(T::zero(), |m, g| m.max(g.abs()));
    let fm = FMatrix::from_poly(f.clone(), a.to_vec(), g_max)?;
    pole_order(&fm, grid)
}
