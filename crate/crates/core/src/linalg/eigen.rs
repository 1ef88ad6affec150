//! Hermitian eigensolver (cyclic complex Jacobi) and simultaneous diagonalization.

use std::cmp::Ordering;

use num_traits::Zero;

use super::matrix::{inner, vec_norm, CMatrix};
use super::types::Hermitian;
use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};

const MAX_SWEEPS: usize = 80;

/// Unitary 2×2 block `[[gpp, gpq], [gqp, gqq]]` that diagonalizes
/// `[[a, b], [b̄, d]]` under `G ↦ Gᴴ · X · G`.
pub(crate) struct Rotation<T> {
    pub pp: C<T>,
    pub pq: C<T>,
    pub qp: C<T>,
    pub qq: C<T>,
}

pub(crate) fn jacobi_rotation<T: Real>(a: T, d: T, b: C<T>) -> Rotation<T> {
    let mag = b.norm();
    let phase = if mag > T::zero() { (b / mag).conj() } else { re(T::one()) };
    let zeta = (d - a) / (mag + mag);
    let t = if zeta >= T::zero() {
        T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
    } else {
        -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    Rotation { pp: re(c), pq: re(s), qp: phase * (-s), qq: phase * c }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are returned in descending order; column `k` of the second
/// component is the eigenvector of eigenvalue `k`. Eigenvectors of a
/// degenerate eigenvalue are the Gram-Schmidt orthonormalization of the
/// projected standard basis, which makes the output independent of the
/// iteration path.
pub fn eigh<T: Real>(h: &Hermitian<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    let (sorted_vals, mut vecs) = eigh_raw(h)?;
    let n = h.dim();
    let scale = h.matrix().norm_fro();
    let cluster_tol = T::tol(1e-9) * scale.max(T::one());
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (sorted_vals[end - 1] - sorted_vals[end]).abs() <= cluster_tol {
            end += 1;
        }
        let idx: Vec<usize> = (start..end).collect();
        let block = vecs.select_cols(&idx);
        let canon =
            if end - start > 1 { canonical_subspace_basis(&block) } else { vec![canonical_phase(&block.col(0))] };
        for (k, col) in canon.iter().enumerate() {
            vecs.set_col(start + k, col);
        }
        start = end;
    }
    Ok((sorted_vals, vecs))
}

/// Jacobi eigenpairs (descending) without canonicalizing near-degenerate
/// clusters: `V diag(λ) Vᴴ` reproduces `H` to rounding, which matrix
/// functions need when eigenvalues differ by less than the cluster tolerance.
pub(crate) fn eigh_raw<T: Real>(h: &Hermitian<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    if !a.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let mut v = CMatrix::<T>::identity(n);
    let scale = a.norm_fro();
    if scale > T::zero() {
        let target = T::epsilon() * scale * T::lit(1e-2);
        for _ in 0..MAX_SWEEPS {
            let off = off_diagonal_norm(&a);
            if off <= target {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let b = a[(p, q)];
                    if b.norm() <= T::min_positive_value() {
                        continue;
                    }
                    let rot = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, b);
                    rotate_cols(&mut a, p, q, &rot);
                    rotate_rows_adjoint(&mut a, p, q, &rot);
                    a[(p, q)] = C::zero();
                    a[(q, p)] = C::zero();
                    a[(p, p)] = re(a[(p, p)].re);
                    a[(q, q)] = re(a[(q, q)].re);
                    rotate_cols(&mut v, p, q, &rot);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap_or(Ordering::Equal));
    let sorted_vals: Vec<T> = order.iter().map(|&i| vals[i]).collect();
    Ok((sorted_vals, v.select_cols(&order)))
}

fn off_diagonal_norm<T: Real>(a: &CMatrix<T>) -> T {
    let mut s = T::zero();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if i != j {
                s = s + a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

pub(crate) fn rotate_cols<T: Real>(m: &mut CMatrix<T>, p: usize, q: usize, r: &Rotation<T>) {
    for k in 0..m.rows() {
        let mp = m[(k, p)];
        let mq = m[(k, q)];
        m[(k, p)] = mp * r.pp + mq * r.qp;
        m[(k, q)] = mp * r.pq + mq * r.qq;
    }
}

fn rotate_rows_adjoint<T: Real>(m: &mut CMatrix<T>, p: usize, q: usize, r: &Rotation<T>) {
    for k in 0..m.cols() {
        let mp = m[(p, k)];
        let mq = m[(q, k)];
        m[(p, k)] = r.pp.conj() * mp + r.qp.conj() * mq;
        m[(q, k)] = r.pq.conj() * mp + r.qq.conj() * mq;
    }
}

/// Rotates the phase so that the first entry of significant modulus is real positive.
pub(crate) fn canonical_phase<T: Real>(v: &[C<T>]) -> Vec<C<T>> {
    let n = vec_norm(v);
    let thresh = T::tol(1e-9) * n;
    match v.iter().find(|z| z.norm() > thresh) {
        Some(z) => {
            let ph = (*z / z.norm()).conj();
            v.iter().map(|x| x * ph).collect()
        }
        None => v.to_vec(),
    }
}

/// Canonical orthonormal basis of the column span of `block` (orthonormal columns):
/// projected standard basis vectors, Gram-Schmidt in index order.
pub(crate) fn canonical_subspace_basis<T: Real>(block: &CMatrix<T>) -> Vec<Vec<C<T>>> {
    let (dim, k) = block.shape();
    let proj = block.matmul(&block.adjoint());
    let mut basis: Vec<Vec<C<T>>> = Vec::with_capacity(k);
    // Greedy: pick the standard vector with the largest remaining component each round.
    let mut used = vec![false; dim];
    while basis.len() < k {
        let mut best: Option<(usize, T, Vec<C<T>>)> = None;
        for e in (0..dim).filter(|&e| !used[e]) {
            let mut w = proj.col(e);
            for b in &basis {
                let c = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi = *wi - *bi * c;
                }
            }
            let nw = vec_norm(&w);
            // first index whose residual is clearly nonzero wins; ties go to the lower index
            if nw > T::lit(0.5) / T::from_usize(dim).unwrap().sqrt() {
                best = Some((e, nw, w));
                break;
            }
            if best.as_ref().is_none_or(|(_, bn, _)| nw > *bn) {
                best = Some((e, nw, w));
            }
        }
        let Some((e, nw, w)) = best else { break };
        used[e] = true;
        let unit: Vec<C<T>> = w.iter().map(|z| z / nw).collect();
        basis.push(canonical_phase(&unit));
    }
    basis
}

/// Lexicographic descending comparison of vectors rounded at 1e-9.
pub(crate) fn lex_cmp_desc<T: Real>(a: &[C<T>], b: &[C<T>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = quantize(y.re).cmp(&quantize(x.re)).then(quantize(y.im).cmp(&quantize(x.im)));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

pub(crate) fn quantize<T: Real>(x: T) -> i64 {
    (x.as_f64() * 1e9).round() as i64
}

/// Simultaneous eigenbasis of a pairwise-commuting family.
///
/// Columns are ordered by descending eigenvalue of the first operator, then
/// the second, and so on; remaining ties are broken lexicographically on the
/// (rounded) basis vectors.
pub fn common_eigenbasis<T: Real>(ops: &[Hermitian<T>]) -> Result<CMatrix<T>> {
    let Some(first) = ops.first() else {
        return Err(Error::InvalidArgument("empty operator family".into()));
    };
    let dim = first.dim();
    if let Some(bad) = ops.iter().find(|o| o.dim() != dim) {
        return Err(Error::DimensionError(format!("operator of dim {} in dim-{dim} family", bad.dim())));
    }
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            let (x, y) = (ops[i].matrix(), ops[j].matrix());
            let norm = x.commutator(y).norm_fro();
            if norm > T::tol(1e-10) * x.norm_fro() * y.norm_fro() {
                return Err(Error::NotCommuting { first: i, second: j, norm: norm.as_f64() });
            }
        }
    }

    let mut blocks = vec![CMatrix::<T>::identity(dim)];
    for op in ops {
        let x = op.matrix();
        let cluster_tol = T::tol(1e-9) * x.norm_fro().max(T::one());
        let mut next = Vec::new();
        for q in blocks {
            if q.cols() == 1 {
                next.push(q);
                continue;
            }
            let restricted = Hermitian::from_matrix_unchecked(q.adjoint().matmul(x).matmul(&q));
            let (vals, w) = eigh(&restricted)?;
            let rotated = q.matmul(&w);
            let mut start = 0;
            while start < vals.len() {
                let mut end = start + 1;
                while end < vals.len() && (vals[end - 1] - vals[end]).abs() <= cluster_tol {
                    end += 1;
                }
                next.push(rotated.select_cols(&(start..end).collect::<Vec<_>>()));
                start = end;
            }
        }
        blocks = next;
    }

    let mut vectors: Vec<Vec<C<T>>> = Vec::with_capacity(dim);
    for b in &blocks {
        if b.cols() == 1 {
            vectors.push(canonical_phase(&b.col(0)));
        } else {
            vectors.extend(canonical_subspace_basis(b));
        }
    }
    let keys: Vec<Vec<i64>> =
        vectors.iter().map(|v| ops.iter().map(|o| quantize(o.expectation(v))).collect()).collect();
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&i, &j| keys[j].cmp(&keys[i]).then_with(|| lex_cmp_desc(&vectors[i], &vectors[j])));
    let mut out = CMatrix::zeros(dim, dim);
    for (k, &i) in order.iter().enumerate() {
        out.set_col(k, &vectors[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(rows: &[&[f64]]) -> Hermitian<f64> {
        Hermitian::new(CMatrix::from_real_rows(rows)).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn diagonal_input() {
        let (vals, vecs) = eigh(&herm(&[&[1.0, 0.0], &[0.0, -1.0]])).unwrap();
        assert_eq!(vals, vec![1.0, -1.0]);
        assert_eq!(vecs, CMatrix::identity(2));
    }

    #[test]
    fn identity_is_degenerate_standard_basis() {
        let (vals, vecs) = eigh(&Hermitian::<f64>::identity(3)).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
        assert!((&vecs - &CMatrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn pauli_x() {
        let (vals, vecs) = eigh(&herm(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!(close(vals[0], 1.0) && close(vals[1], -1.0));
        let s = 0.5f64.sqrt();
        assert!(close(vecs[(0, 0)].re, s) && close(vecs[(1, 0)].re, s));
        assert!(close(vecs[(0, 1)].re, s) && close(vecs[(1, 1)].re, -s));
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = CMatrix::from_rows(&[
            &[C::new(2.0, 0.0), C::new(0.5, -1.0), C::new(0.0, 0.3)],
            &[C::new(0.5, 1.0), C::new(-1.0, 0.0), C::new(0.7, 0.0)],
            &[C::new(0.0, -0.3), C::new(0.7, 0.0), C::new(0.25, 0.0)],
        ]);
        let h = Hermitian::new(m.clone()).unwrap();
        let (vals, v) = eigh(&h).unwrap();
        let rec = v.matmul(&CMatrix::diag_real(&vals)).matmul(&v.adjoint());
        assert!((&rec - &m).max_abs() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn commuting_diagonals_give_standard_basis() {
        let z = herm(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let d = herm(&[&[2.0, 0.0], &[0.0, 3.0]]);
        let b = common_eigenbasis(&[z, d]).unwrap();
        assert_eq!(b, CMatrix::identity(2));
    }

    #[test]
    fn pauli_pair_does_not_commute() {
        let z = herm(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let x = herm(&[&[0.0, 1.0], &[1.0, 0.0]]);
        match common_eigenbasis(&[z, x]) {
            Err(Error::NotCommuting { first: 0, second: 1, norm }) => assert!(norm > 1.0),
            other => panic!("expected NotCommuting, got {other:?}"),
        }
    }

    #[test]
    fn identity_first_defers_to_second_operator() {
        let h = herm(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let b = common_eigenbasis(&[Hermitian::identity(2), h.clone()]).unwrap();
        let (_, v) = eigh(&h).unwrap();
        assert!((&b - &v).max_abs() < 1e-12);
    }

    #[test]
    fn tie_break_uses_later_operators() {
        // first operator degenerate, second resolves the order
        let a = Hermitian::<f64>::identity(3);
        let e = Hermitian::from_real_diag(&[0.1, 0.7, 0.4]);
        let b = common_eigenbasis(&[a, e]).unwrap();
        let expected = CMatrix::from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(b, expected);
    }
}
