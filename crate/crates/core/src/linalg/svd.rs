//! One-sided (Hestenes) Jacobi SVD and the Moore-Penrose pseudoinverse.
//!
//! One-sided Jacobi keeps high relative accuracy for small singular values,
//! which matters for trajectories that vanish like `g²` near `g = 0`.

use std::cmp::Ordering;

use num_traits::Zero;

use super::eigen::{jacobi_rotation, rotate_cols};
use super::matrix::{inner, vec_norm, CMatrix};
use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};

const MAX_SWEEPS: usize = 80;

/// `M = U · diag(σ) · Vᴴ` with unitary `U` (m×m) and `V` (n×n).
#[derive(Clone, Debug, PartialEq)]
pub struct SvdTriple<T> {
    pub left: CMatrix<T>,
    /// Descending, nonnegative; length `min(m, n)`.
    pub singulars: Vec<T>,
    pub right: CMatrix<T>,
}

impl<T: Real> SvdTriple<T> {
    pub fn reconstruct(&self) -> CMatrix<T> {
        let k = self.singulars.len();
        let idx: Vec<usize> = (0..k).collect();
        let u = self.left.select_cols(&idx);
        let v = self.right.select_cols(&idx);
        u.matmul(&CMatrix::diag_real(&self.singulars)).matmul(&v.adjoint())
    }

    pub fn largest(&self) -> T {
        self.singulars.first().copied().unwrap_or(T::zero())
    }
}

pub fn svd<T: Real>(m: &CMatrix<T>) -> Result<SvdTriple<T>> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.adjoint());
        return Ok(SvdTriple { left: t.right, singulars: t.singulars, right: t.left });
    }
    Ok(svd_tall(m))
}

fn svd_tall<T: Real>(m: &CMatrix<T>) -> SvdTriple<T> {
    let (rows, cols) = m.shape();
    let mut u = m.clone();
    let mut v = CMatrix::<T>::identity(cols);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let cp = u.col(p);
                let cq = u.col(q);
                let alpha = cp.iter().map(|z| z.norm_sqr()).sum::<T>();
                let beta = cq.iter().map(|z| z.norm_sqr()).sum::<T>();
                let gamma = inner(&cp, &cq);
                if gamma.norm() <= T::epsilon() * (alpha * beta).sqrt() || gamma.is_zero() {
                    continue;
                }
                rotated = true;
                let rot = jacobi_rotation(alpha, beta, gamma);
                rotate_cols(&mut u, p, q, &rot);
                rotate_cols(&mut v, p, q, &rot);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = (0..cols).map(|j| vec_norm(&u.col(j))).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(Ordering::Equal));
    let singulars: Vec<T> = order.iter().map(|&i| norms[i]).collect();
    let right = v.select_cols(&order);

    let sigma_max = singulars.first().copied().unwrap_or(T::zero());
    let floor = T::epsilon() * sigma_max * T::from_usize(rows.max(cols)).unwrap();
    let mut left_cols: Vec<Vec<C<T>>> = Vec::with_capacity(rows);
    for (k, &i) in order.iter().enumerate() {
        if singulars[k] > floor && singulars[k] > T::zero() {
            let mut c: Vec<C<T>> = u.col(i).iter().map(|z| z / singulars[k]).collect();
            // re-orthogonalize against earlier columns
            orthogonalize(&mut c, &left_cols);
            let n = vec_norm(&c);
            left_cols.push(c.into_iter().map(|z| z / n).collect());
        } else {
            left_cols.push(Vec::new());
        }
    }
    // Complete the left basis (null directions and the extra rows - cols columns).
    let mut e = 0;
    let mut filled: Vec<Vec<C<T>>> = left_cols.iter().filter(|c| !c.is_empty()).cloned().collect();
    let mut complete = |filled: &mut Vec<Vec<C<T>>>| -> Vec<C<T>> {
        loop {
            let mut c = vec![C::zero(); rows];
            c[e % rows] = re(T::one());
            e += 1;
            orthogonalize(&mut c, filled);
            orthogonalize(&mut c, filled);
            let n = vec_norm(&c);
            if n > T::lit(0.5) / T::from_usize(rows).unwrap().sqrt() || e > 4 * rows {
                let col: Vec<C<T>> = c.into_iter().map(|z| z / n).collect();
                filled.push(col.clone());
                return col;
            }
        }
    };
    for col in left_cols.iter_mut() {
        if col.is_empty() {
            *col = complete(&mut filled);
        }
    }
    while left_cols.len() < rows {
        let c = complete(&mut filled);
        left_cols.push(c);
    }
    let mut left = CMatrix::zeros(rows, rows);
    for (j, c) in left_cols.iter().enumerate() {
        left.set_col(j, c);
    }
    SvdTriple { left, singulars, right }
}

fn orthogonalize<T: Real>(c: &mut [C<T>], basis: &[Vec<C<T>>]) {
    for b in basis.iter().filter(|b| !b.is_empty()) {
        let proj = inner(b, c);
        for (ci, bi) in c.iter_mut().zip(b) {
            *ci = *ci - *bi * proj;
        }
    }
}

/// Default relative rank cutoff `1e-12 · max(m, n)`.
pub fn default_rank_rtol<T: Real>(m: &CMatrix<T>) -> T {
    T::tol(1e-12) * T::from_usize(m.rows().max(m.cols())).unwrap()
}

/// Pseudoinverse together with the number of singular values kept.
#[derive(Clone, Debug, PartialEq)]
pub struct Pinv<T> {
    pub matrix: CMatrix<T>,
    pub rank: usize,
}

/// Moore-Penrose pseudoinverse `V Σ⁺ Uᴴ`; singular values `≤ rank_rtol·σ_max` count as zero.
pub fn pinv<T: Real>(m: &CMatrix<T>, rank_rtol: T) -> Result<Pinv<T>> {
    let s = svd(m)?;
    let cutoff = rank_rtol * s.largest();
    let mut out = CMatrix::zeros(m.cols(), m.rows());
    let mut rank = 0;
    for (k, &sigma) in s.singulars.iter().enumerate() {
        if sigma <= cutoff || sigma.is_zero() {
            continue;
        }
        rank += 1;
        let inv = T::one() / sigma;
        for i in 0..m.cols() {
            let vik = s.right[(i, k)] * inv;
            for j in 0..m.rows() {
                out[(i, j)] = out[(i, j)] + vik * s.left[(j, k)].conj();
            }
        }
    }
    Ok(Pinv { matrix: out, rank })
}
