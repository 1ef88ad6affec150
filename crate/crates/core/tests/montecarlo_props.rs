use std::f64::consts::PI;

use weaklab_core::linalg::StateVector;
use weaklab_core::montecarlo::{sample_run, McConfig};
use weaklab_core::povm::qubit_linear;
use weaklab_core::weak::{conditioned_average, joint_weights};

const G: f64 = 0.1;

fn states() -> (StateVector<f64>, StateVector<f64>) {
    (StateVector::from_real(&[1.0, 1.0]).unwrap(), StateVector::from_angle(2, PI / 8.0).unwrap())
}

#[test]
fn estimator_within_three_stderr_for_most_seeds() {
    let povm = qubit_linear(1.0);
    let (i, f) = states();
    let alpha = [1.0 / G, -1.0 / G];
    let (exact, _) = conditioned_average(&povm, &alpha, &i, &f, G).unwrap();
    let hits = (0..100u64)
        .filter(|&seed| {
            let r = sample_run(&povm, &alpha, &i, &f, &McConfig { trials: 1_000_000, seed, g: G }).unwrap();
            (r.empirical_value - exact).abs() <= 3.0 * r.stderr
        })
        .count();
    assert!(hits >= 99, "{hits}/100 seeds within 3·stderr");
}

#[test]
fn joint_frequencies_within_four_sigma() {
    let povm = qubit_linear(1.0);
    let (i, f) = states();
    let trials = 1_000_000u64;
    let joint = joint_weights(&povm, &i, &f, G).unwrap();
    let r = sample_run(&povm, &[1.0, -1.0], &i, &f, &McConfig { trials, seed: 12, g: G }).unwrap();
    let n = trials as f64;
    for (count, p) in r.per_outcome_counts.iter().zip(&joint) {
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((*count as f64 - n * p).abs() <= 4.0 * sigma, "{count} vs {}", n * p);
    }
    assert_eq!(r.drawn_counts.iter().sum::<u64>(), trials);
}

#[test]
fn runs_are_bit_identical() {
    let povm = qubit_linear(1.0);
    let (i, f) = states();
    let cfg = McConfig { trials: 300_000, seed: 1, g: G };
    let a = sample_run(&povm, &[10.0, -10.0], &i, &f, &cfg).unwrap();
    let b = sample_run(&povm, &[10.0, -10.0], &i, &f, &cfg).unwrap();
    assert_eq!(a.empirical_value.to_bits(), b.empirical_value.to_bits());
    assert_eq!(a, b);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = single.install(|| sample_run(&povm, &[10.0, -10.0], &i, &f, &cfg).unwrap());
    assert_eq!(a, c);
}
