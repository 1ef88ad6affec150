mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use weaklab_core::contextual::{build_f, pseudoinverse_cv, variance_min_cv, FMatrix};
use weaklab_core::grid::{default_grid, validation_grid};
use weaklab_core::linalg::{CMatrix, Hermitian};
use weaklab_core::poly::PolyMatrix;
use weaklab_core::povm::{ParamPovm, TruncateMode};

fn real_na(m: &CMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].re)
}

fn weighted_second_moment(alpha: &[f64], p: &[f64]) -> f64 {
    alpha.iter().zip(p).map(|(a, w)| w * a * a).sum()
}

/// Projected gradient descent for `min Σ p_j α_j²` subject to `Fα = a`.
fn qp_oracle(f: &DMatrix<f64>, a: &[f64], p: &[f64]) -> Vec<f64> {
    let n = f.ncols();
    let fp = f.clone().pseudo_inverse(1e-13).unwrap();
    let null = DMatrix::<f64>::identity(n, n) - &fp * f;
    let mut alpha = &fp * nalgebra::DVector::from_column_slice(a);
    let step = 0.5 / p.iter().cloned().fold(0.0, f64::max);
    for _ in 0..20_000 {
        let grad = nalgebra::DVector::from_fn(n, |j, _| 2.0 * p[j] * alpha[j]);
        alpha -= &null * grad * step;
    }
    alpha.iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn f_rows_sum_to_one(seed: u64, dim in 1usize..=4, n_out in 1usize..=5) {
        let inst = commuting_instance(&mut rng(seed), dim, n_out);
        let f = build_f(&inst.povm, &inst.observable).unwrap();
        prop_assert!(f.row_sum_defect() <= 1e-12);
        for g in validation_grid(0.1) {
            let m = f.eval(g).unwrap();
            for i in 0..dim {
                let s: f64 = m.row(i).iter().map(|z| z.re).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn povm_sums_to_identity_and_sqrt_completes(seed: u64, dim in 1usize..=4, n_out in 1usize..=5) {
        let inst = commuting_instance(&mut rng(seed), dim, n_out);
        for g in validation_grid(0.1) {
            let es = inst.povm.evaluate(g).unwrap();
            let sum = es.iter().fold(CMatrix::zeros(dim, dim), |acc, e| &acc + e.matrix());
            prop_assert!((&sum - &CMatrix::identity(dim)).max_abs() <= 1e-11);
            let ms = inst.povm.measurement_operators(g).unwrap();
            let sq = ms.iter().fold(CMatrix::zeros(dim, dim), |acc, m| &acc + &m.matrix().matmul(m.matrix()));
            prop_assert!((&sq - &CMatrix::identity(dim)).max_abs() <= 1e-10);
        }
    }

    #[test]
    fn pip_is_exact_and_minimum_norm(seed: u64, dim in 1usize..=4, extra in 0usize..=3) {
        let mut r = rng(seed);
        let n_out = dim + extra;
        let inst = commuting_instance(&mut r, dim, n_out);
        let f = build_f(&inst.povm, &inst.observable).unwrap();
        let g = 0.05;
        let sol = pseudoinverse_cv(&f, g, None).unwrap();
        prop_assert!(sol.residual <= 1e-9);
        // Any other exact solution α + z with Fz = 0 is at least as long.
        let fm = real_na(&f.eval(g).unwrap());
        let null = DMatrix::<f64>::identity(n_out, n_out) - fm.clone().pseudo_inverse(1e-13).unwrap() * &fm;
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..20 {
            let z = &null * nalgebra::DVector::from_fn(n_out, |_, _| normal(&mut r));
            let other: Vec<f64> = sol.alpha.iter().zip(z.iter()).map(|(a, b)| a + b).collect();
            prop_assert!(norm(&other) >= norm(&sol.alpha) - 1e-9);
        }
    }

    #[test]
    fn pip_is_linear_in_a(seed: u64, dim in 1usize..=4, c in -5.0f64..5.0) {
        let inst = commuting_instance(&mut rng(seed), dim, dim + 1);
        let f = build_f(&inst.povm, &inst.observable).unwrap();
        let scaled = f.with_a(f.a_vec().iter().map(|x| c * x).collect()).unwrap();
        let a = pseudoinverse_cv(&f, 0.03, None).unwrap();
        let b = pseudoinverse_cv(&scaled, 0.03, None).unwrap();
        for (x, y) in a.alpha.iter().zip(&b.alpha) {
            prop_assert!((c * x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn square_pip_is_direct_solve(seed: u64, dim in 1usize..=4) {
        let inst = commuting_instance(&mut rng(seed), dim, dim);
        let f = build_f(&inst.povm, &inst.observable).unwrap();
        let m = real_na(&f.eval(0.07).unwrap());
        let sv = m.clone().singular_values();
        let cond = sv.max() / sv.min();
        let direct = m.lu().solve(&nalgebra::DVector::from_column_slice(f.a_vec())).unwrap();
        let sol = pseudoinverse_cv(&f, 0.07, None).unwrap();
        for (x, y) in sol.alpha.iter().zip(direct.iter()) {
            prop_assert!((x - y).abs() <= 1e-9 * cond.max(1.0) * (1.0 + y.abs()));
        }
    }

    #[test]
    fn variance_min_matches_qp_and_dominates_pip(seed: u64, dim in 1usize..=3, extra in 1usize..=2) {
        let mut r = rng(seed);
        let n_out = dim + extra;
        let inst = commuting_instance(&mut r, dim, n_out);
        let f = build_f(&inst.povm, &inst.observable).unwrap();
        let w: Vec<f64> = (0..n_out).map(|_| r.random_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let g = 0.08;
        let vm = variance_min_cv(&f, g, &p).unwrap();
        let pip = pseudoinverse_cv(&f, g, None).unwrap();
        prop_assert!(vm.residual <= 1e-9);
        prop_assert!(weighted_second_moment(&vm.alpha, &p) <= weighted_second_moment(&pip.alpha, &p) + 1e-10);
        let oracle = qp_oracle(&real_na(&f.eval(g).unwrap()), f.a_vec(), &p);
        let scale = 1.0 + oracle.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in vm.alpha.iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-6 * scale, "{} vs {}", x, y);
        }
    }

    #[test]
    fn full_truncation_is_identity(seed: u64, dim in 1usize..=3, n_out in 1usize..=4) {
        let inst = commuting_instance(&mut rng(seed), dim, n_out);
        let t = inst.povm.truncate(1, TruncateMode::Prefix).unwrap();
        for g in validation_grid(0.1) {
            let (a, b) = (inst.povm.evaluate(g).unwrap(), t.evaluate(g).unwrap());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.matrix() - y.matrix()).max_abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn reparameterization_matches(seed: u64, n in 2usize..=3, scale in 0.1f64..0.5) {
        // E_±(g) = (I ± s gⁿ D)/2 with a random traceless diagonal D.
        let mut r = rng(seed);
        let d: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..1.0)).collect();
        let dm = CMatrix::diag_real(&d).scale(0.5 * scale);
        let half = CMatrix::identity(2).scale(0.5);
        let plus = PolyMatrix::from_terms(2, 2, &[(0, half.clone()), (n, dm.clone())]).unwrap();
        let minus = PolyMatrix::from_terms(2, 2, &[(0, half), (n, dm.scale(-1.0))]).unwrap();
        let povm = ParamPovm::validated(vec![plus, minus], 0.5).unwrap();
        prop_assert_eq!(povm.minimum_nonzero_order().unwrap().n, n);
        let lin = povm.reparameterize_linear().unwrap();
        for g in validation_grid(0.5) {
            let (a, b) = (povm.evaluate(g).unwrap(), lin.evaluate(g.powi(n as i32)).unwrap());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.matrix() - y.matrix()).max_abs() <= 1e-12);
            }
        }
        // Order is unchanged when the order-n coefficients are scaled together.
        let rescaled = ParamPovm::new(
            povm.elements().iter().map(|e| e.map_coeffs(|c| c.scale(0.3)).unwrap()).collect(),
            0.5,
        );
        if let Ok(p) = rescaled {
            let _ = p.minimum_nonzero_order();
        }
        let half = CMatrix::identity(2).scale(0.5);
        let plus = PolyMatrix::from_terms(2, 2, &[(0, half.clone()), (n, CMatrix::diag_real(&d).scale(0.15 * scale))]).unwrap();
        let minus = PolyMatrix::from_terms(2, 2, &[(0, half), (n, CMatrix::diag_real(&d).scale(-0.15 * scale))]).unwrap();
        prop_assert_eq!(ParamPovm::new(vec![plus, minus], 0.5).unwrap().minimum_nonzero_order().unwrap().n, n);
    }
}

#[test]
fn pole_orders_of_generated_linear_povms_are_one() {
    use weaklab_core::conjecture::{generate_instance, trial_rng};
    use weaklab_core::contextual::pole_order;
    for seed in 0..20 {
        let inst = generate_instance::<f64, _>(&mut trial_rng(seed, 0), 2, 2, None, None).unwrap();
        let f: FMatrix<f64> = build_f(&inst.povm, &inst.observable).unwrap();
        let est = pole_order(&f, &default_grid()).unwrap();
        assert!((est.exponent - 1.0).abs() < 0.05, "seed {seed}: {}", est.exponent);
    }
}

#[test]
fn identity_observable_is_exact() {
    // Square F: the unique solution is all ones.
    let inst = commuting_instance(&mut rng(4), 3, 3);
    let f = build_f(&inst.povm, &Hermitian::identity(3)).unwrap();
    let sol = pseudoinverse_cv(&f, 0.1, None).unwrap();
    assert!(sol.residual < 1e-12);
    assert!(sol.alpha.iter().all(|a| (a - 1.0).abs() < 1e-12));
    // Wide F: all ones is one exact solution; PIP returns the shortest.
    let inst = commuting_instance(&mut rng(4), 3, 5);
    let f = build_f(&inst.povm, &Hermitian::identity(3)).unwrap();
    let sol = pseudoinverse_cv(&f, 0.1, None).unwrap();
    assert!(sol.residual < 1e-12);
    assert!(sol.alpha.iter().map(|a| a * a).sum::<f64>() <= 5.0 + 1e-12);
}
