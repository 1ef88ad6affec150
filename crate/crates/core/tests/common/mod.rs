#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use weaklab_core::linalg::{CMatrix, Hermitian, StateVector};
use weaklab_core::poly::PolyMatrix;
use weaklab_core::povm::ParamPovm;
use weaklab_core::C;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix<f64> {
    CMatrix::from_fn(rows, cols, |_, _| C::new(normal(rng), normal(rng)))
}

/// Product of thin factors: rank at most `rank`.
pub fn low_rank(rng: &mut impl Rng, rows: usize, cols: usize, rank: usize) -> CMatrix<f64> {
    random_matrix(rng, rows, rank).matmul(&random_matrix(rng, rank, cols))
}

pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> Hermitian<f64> {
    let m = random_matrix(rng, dim, dim);
    Hermitian::new((&m + &m.adjoint()).scale(0.5)).unwrap()
}

pub fn random_state(rng: &mut impl Rng, dim: usize) -> StateVector<f64> {
    StateVector::normalized((0..dim).map(|_| C::new(normal(rng), normal(rng))).collect()).unwrap()
}

pub fn to_na(m: &CMatrix<f64>) -> DMatrix<C<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<C<f64>>) -> CMatrix<f64> {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix (nalgebra).
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> CMatrix<f64> {
    from_na(&to_na(&random_matrix(rng, dim, dim)).qr().q())
}

fn rotate(u: &CMatrix<f64>, diag: &[f64]) -> CMatrix<f64> {
    u.matmul(&CMatrix::diag_real(diag)).matmul(&u.adjoint())
}

/// Random commuting family: a POVM `E_j(g) = U diag(p_ij + g q_ij) U†` (valid
/// for `g ≤ 0.1`) and an observable diagonal in the same basis.
pub struct CommutingInstance {
    pub povm: ParamPovm<f64>,
    pub observable: Hermitian<f64>,
    pub basis: CMatrix<f64>,
}

pub fn commuting_instance(rng: &mut impl Rng, dim: usize, n_out: usize) -> CommutingInstance {
    let u = random_unitary(rng, dim);
    let mut p = vec![vec![0.0; n_out]; dim];
    let mut q = vec![vec![0.0; n_out]; dim];
    for i in 0..dim {
        let w: Vec<f64> = (0..n_out).map(|_| rng.random_range(0.2..1.0)).collect();
        let s: f64 = w.iter().sum();
        let d: Vec<f64> = (0..n_out).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = d.iter().sum::<f64>() / n_out as f64;
        let floor = w.iter().cloned().fold(f64::INFINITY, f64::min) / s;
        for j in 0..n_out {
            p[i][j] = w[j] / s;
            // |g q| ≤ 0.1 · 2 · floor keeps every element positive up to g = 0.1
            q[i][j] = (d[j] - mean) * floor;
        }
    }
    let elements = (0..n_out)
        .map(|j| {
            let c0: Vec<f64> = (0..dim).map(|i| p[i][j]).collect();
            let c1: Vec<f64> = (0..dim).map(|i| q[i][j]).collect();
            PolyMatrix::linear(rotate(&u, &c0), rotate(&u, &c1)).unwrap()
        })
        .collect();
    let povm = ParamPovm::validated(elements, 0.1).unwrap();
    let spectrum: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let observable = Hermitian::from_matrix_unchecked(rotate(&u, &spectrum));
    CommutingInstance { povm, observable, basis: u }
}
