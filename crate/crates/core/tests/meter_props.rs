mod common;

use common::*;
use weaklab_core::contextual::{build_f, pseudoinverse_cv};
use weaklab_core::grid::validation_grid;
use weaklab_core::meter::{compose_isometry, decompose_isometry, MeasurementOps};
use weaklab_core::poly::PolyMatrix;

use rand::Rng;

#[test]
fn meter_identities_on_random_commuting_instances() {
    let mut r = rng(505);
    for _ in 0..100 {
        let dim = r.random_range(1..=4);
        let n_out = r.random_range(dim..=dim + 2);
        let inst = commuting_instance(&mut r, dim, n_out);
        let f = build_f(&inst.povm, &inst.observable).unwrap();
        let f_alpha = f.clone();
        let model = compose_isometry(MeasurementOps::SquareRoot(inst.povm.clone()))
            .unwrap()
            .with_meter_eigenvalues(move |g| pseudoinverse_cv(&f_alpha, g, None).unwrap().alpha)
            .unwrap();
        let s = random_state(&mut r, dim);
        let g = r.random_range(0.001..0.1);
        let probs = model.outcome_probabilities(&s, g).unwrap();
        for (p, e) in probs.iter().zip(inst.povm.evaluate(g).unwrap()) {
            assert!((p - e.expectation(s.amplitudes())).abs() <= 1e-12);
        }
        let sol = pseudoinverse_cv(&f, g, None).unwrap();
        assert!(sol.residual <= 1e-9);
        let expect = inst.observable.expectation(s.amplitudes());
        assert!((model.meter_expectation(&s, g).unwrap() - expect).abs() <= 1e-9);
        let red = model.reduced_state(&s, g).unwrap();
        assert!((red.matrix().trace().re - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn polynomial_round_trip_is_exact() {
    let mut r = rng(77);
    for _ in 0..50 {
        let dim = r.random_range(1..=3);
        // Projective measurement in a random basis: M_j = |u_j⟩⟨u_j|, constant.
        let u = random_unitary(&mut r, dim);
        let ops: Vec<PolyMatrix<f64>> = (0..dim)
            .map(|j| {
                let col = u.col(j);
                let m = weaklab_core::linalg::CMatrix::from_fn(dim, dim, |a, b| col[a] * col[b].conj());
                PolyMatrix::constant(m)
            })
            .collect();
        let model = compose_isometry(MeasurementOps::Polynomial { ops: ops.clone(), g_max: 1.0 }).unwrap();
        match decompose_isometry(&model) {
            MeasurementOps::Polynomial { ops: back, .. } => assert_eq!(back, ops),
            other => panic!("unexpected {other:?}"),
        }
        for g in validation_grid(1.0) {
            let u = model.isometry(g).unwrap();
            let defect = (&u.adjoint().matmul(&u) - &weaklab_core::linalg::CMatrix::identity(dim)).max_abs();
            assert!(defect <= 1e-10);
        }
    }
}
