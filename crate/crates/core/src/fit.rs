//! Small least-squares fits used for extrapolation and order estimation.

use crate::error::{Error, Result};
use crate::linalg::{complexify, pinv, CMatrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r2: T,
}

/// Ordinary least-squares line through `(x, y)`.
pub fn line_fit<T: Real>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: x.len().min(y.len()) });
    }
    let n = T::from_usize(x.len()).unwrap();
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let sxx = x.iter().map(|&v| (v - mx) * (v - mx)).sum::<T>();
    let sxy = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum::<T>();
    let syy = y.iter().map(|&v| (v - my) * (v - my)).sum::<T>();
    if sxx == T::zero() {
        return Err(Error::InvalidArgument("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = x.iter().zip(y).map(|(&a, &b)| (b - intercept - slope * a).powi(2)).sum::<T>();
    let r2 = if syy == T::zero() { T::one() } else { (T::one() - ss_res / syy).max(T::zero()).min(T::one()) };
    Ok(LineFit { slope, intercept, r2 })
}

/// Least-squares polynomial `Σ_m c_m x^m` of the given degree; returns `c`.
///
/// Abscissae are rescaled by their largest magnitude before solving, which
/// keeps the Vandermonde system well conditioned for tiny `x`.
pub fn poly_fit<T: Real>(x: &[T], y: &[T], degree: usize) -> Result<Vec<T>> {
    if x.len() != y.len() || x.len() <= degree {
        return Err(Error::InsufficientSamples { needed: degree + 1, got: x.len().min(y.len()) });
    }
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return Err(Error::InvalidArgument("degenerate abscissae".into()));
    }
    let vander = CMatrix::from_fn(x.len(), degree + 1, |i, m| crate::scalar::re((x[i] / scale).powi(m as i32)));
    let p = pinv(&vander, T::tol(1e-14))?;
    let c = p.matrix.mat_vec(&complexify(y));
    Ok(c.iter().enumerate().map(|(m, z)| z.re / scale.powi(m as i32)).collect())
}

/// Evaluates `Σ_m c_m x^m` by Horner's rule.
pub fn poly_eval<T: Real>(c: &[T], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + ci)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_through_exact_points() {
        let f = line_fit::<f64>(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn recovers_cubic_at_small_scale() {
        let c = [2.0, -1.0, 0.5, 3.0];
        let x: Vec<f64> = (0..8).map(|k| 1e-3 * 0.5f64.powi(k)).collect();
        let y: Vec<f64> = x.iter().map(|&v| poly_eval(&c, v)).collect();
        let fit = poly_fit(&x, &y, 3).unwrap();
        assert!((fit[0] - 2.0).abs() < 1e-14);
        assert!((fit[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(poly_fit(&[1.0, 2.0], &[1.0, 2.0], 2), Err(Error::InsufficientSamples { .. })));
    }
}
