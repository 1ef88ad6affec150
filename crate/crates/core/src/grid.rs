//! Sampling grids in the weakness parameter.

use crate::scalar::Real;

/// Top of the default contextual-value / weak-limit grid.
pub const DEFAULT_GRID_TOP: f64 = 0.1;
/// Number of halvings in the default grid (13 points, smallest ≈ 2.44e-5).
pub const DEFAULT_GRID_HALVINGS: usize = 12;
/// Points in the default positivity-validation grid.
pub const VALIDATION_POINTS: usize = 20;
/// The validation grid spans `[g_max · VALIDATION_SPAN, g_max]`.
pub const VALIDATION_SPAN: f64 = 1e-2;

/// `top · 2^{-k}` for `k = 0..=halvings`, descending.
pub fn halving_grid<T: Real>(top: T, halvings: usize) -> Vec<T> {
    let half = T::lit(0.5);
    let mut g = top;
    let mut out = Vec::with_capacity(halvings + 1);
    for _ in 0..=halvings {
        out.push(g);
        g = g * half;
    }
    out
}

/// The default grid `0.1 · 2^{-k}`, `k = 0..=12`.
pub fn default_grid<T: Real>() -> Vec<T> {
    halving_grid(T::lit(DEFAULT_GRID_TOP), DEFAULT_GRID_HALVINGS)
}

/// `points` logarithmically spaced values from `hi` down to `lo` (descending).
pub fn log_spaced_desc<T: Real>(lo: T, hi: T, points: usize) -> Vec<T> {
    if points <= 1 {
        return vec![hi];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let steps = T::from_usize(points - 1).unwrap();
    (0..points)
        .map(|k| {
            if k == 0 {
                hi
            } else if k == points - 1 {
                lo
            } else {
                (lhi + (llo - lhi) * T::from_usize(k).unwrap() / steps).exp()
            }
        })
        .collect()
}

/// Default positivity grid in `(0, g_max]`, ascending.
pub fn validation_grid<T: Real>(g_max: T) -> Vec<T> {
    let mut g = log_spaced_desc(g_max * T::lit(VALIDATION_SPAN), g_max, VALIDATION_POINTS);
    g.reverse();
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_bottom() {
        let g = default_grid::<f64>();
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], 0.1);
        assert!((g[12] - 2.44140625e-5).abs() < 1e-18);
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let g = log_spaced_desc(1e-3f64, 1e-1, 3);
        assert_eq!(g[0], 1e-1);
        assert!((g[1] - 1e-2).abs() < 1e-15);
        assert_eq!(g[2], 1e-3);
        let v = validation_grid(0.1f64);
        assert_eq!(v.len(), 20);
        assert_eq!(*v.last().unwrap(), 0.1);
    }
}
