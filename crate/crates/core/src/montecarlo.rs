//! Monte Carlo simulation of the two-step experiment: a weak measurement with
//! operators `M_j = E_j^{1/2}`, then projective postselection on `ψ_f`.
//!
//! Trials are split into fixed blocks of `2^14`; block `b` reads ChaCha8
//! stream `b` of `seed` sequentially, four words per trial. Trial `t`'s draws
//! are therefore a fixed function of `(seed, t)`, and since the reduction only
//! adds integer counts, results are bit-identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{inner, StateVector};
use crate::povm::ParamPovm;
use crate::scalar::Real;

const CHUNK: u64 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig<T> {
    pub trials: u64,
    pub seed: u64,
    pub g: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McResult<T> {
    /// Mean of `α_j` over accepted trials.
    pub empirical_value: T,
    /// Sample standard deviation of `α_j` over accepted trials, over `√successes`.
    pub stderr: T,
    pub successes: u64,
    pub trials: u64,
    /// Accepted trials per first-measurement outcome (joint `f ∧ j` counts).
    pub per_outcome_counts: Vec<u64>,
    /// All trials per first-measurement outcome.
    pub drawn_counts: Vec<u64>,
}

fn add_counts(mut a: (Vec<u64>, Vec<u64>), b: (Vec<u64>, Vec<u64>)) -> (Vec<u64>, Vec<u64>) {
    a.0.iter_mut().zip(b.0).for_each(|(x, y)| *x += y);
    a.1.iter_mut().zip(b.1).for_each(|(x, y)| *x += y);
    a
}

pub fn sample_run<T: Real>(
    povm: &ParamPovm<T>,
    alpha: &[T],
    psi_i: &StateVector<T>,
    psi_f: &StateVector<T>,
    config: &McConfig<T>,
) -> Result<McResult<T>> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let n = povm.outcomes();
    if alpha.len() != n || psi_i.dim() != povm.dim() || psi_f.dim() != povm.dim() {
        return Err(Error::DimensionError("POVM, contextual values and states disagree".into()));
    }
    // Outcome j with P(j) = ‖M_j ψ_i‖², then accept with |⟨ψ_f|M_j ψ_i⟩|² / P(j).
    let mut cumulative = Vec::with_capacity(n);
    let mut accept = Vec::with_capacity(n);
    let mut total = 0.0f64;
    for m in povm.measurement_operators(config.g)? {
        let v = m.matrix().mat_vec(psi_i.amplitudes());
        let p = v.iter().map(|z| z.norm_sqr()).sum::<T>().as_f64();
        let joint = inner(psi_f.amplitudes(), &v).norm_sqr().as_f64();
        total += p;
        cumulative.push(total);
        accept.push(if p > 0.0 { (joint / p).min(1.0) } else { 0.0 });
    }
    let draw = |u: f64| cumulative.iter().position(|&c| u * total < c).unwrap_or(n - 1);

    let chunks = config.trials.div_ceil(CHUNK);
    let (accepted, drawn) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0u64; n];
            let mut drw = vec![0u64; n];
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(c);
            for _ in c * CHUNK..((c + 1) * CHUNK).min(config.trials) {
                let j = draw(rng.random::<f64>());
                drw[j] += 1;
                if rng.random::<f64>() < accept[j] {
                    acc[j] += 1;
                }
            }
            (acc, drw)
        })
        .reduce(|| (vec![0; n], vec![0; n]), add_counts);

    let successes: u64 = accepted.iter().sum();
    if successes == 0 {
        return Err(Error::NoSuccesses { trials: config.trials });
    }
    let s = T::from_u64(successes).unwrap();
    // Offsetting by α_0 keeps a constant α exact.
    let base = alpha[0];
    let shift = alpha.iter().zip(&accepted).map(|(&a, &c)| (a - base) * T::from_u64(c).unwrap()).sum::<T>() / s;
    let mean = base + shift;
    let stderr = if successes > 1 {
        let ss = alpha.iter().zip(&accepted).map(|(&a, &c)| T::from_u64(c).unwrap() * (a - mean).powi(2)).sum::<T>();
        (ss / (s - T::one())).sqrt() / s.sqrt()
    } else {
        T::zero()
    };
    Ok(McResult {
        empirical_value: mean,
        stderr,
        successes,
        trials: config.trials,
        per_outcome_counts: accepted,
        drawn_counts: drawn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::qubit_linear;
    use crate::weak::conditioned_average;
    use std::f64::consts::PI;

    fn plus() -> StateVector<f64> {
        StateVector::from_real(&[1.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_alpha_exact() {
        let cfg = McConfig { trials: 10_000, seed: 3, g: 0.2 };
        let r = sample_run(&qubit_linear(1.0), &[0.7, 0.7], &plus(), &StateVector::from_angle(2, 0.3).unwrap(), &cfg)
            .unwrap();
        assert_eq!(r.empirical_value, 0.7);
        assert_eq!(r.stderr, 0.0);
        assert!(r.successes <= r.trials);
    }

    #[test]
    fn orthogonal_postselection_never_succeeds() {
        let cfg = McConfig { trials: 1000, seed: 1, g: 0.0 };
        let r =
            sample_run(&qubit_linear(1.0), &[1.0, -1.0], &StateVector::basis(2, 0), &StateVector::basis(2, 1), &cfg);
        assert_eq!(r.unwrap_err(), Error::NoSuccesses { trials: 1000 });
    }

    #[test]
    fn reproducible_and_close() {
        let g = 0.1;
        let psi_f = StateVector::from_angle(2, PI / 8.0).unwrap();
        let alpha = [1.0 / g, -1.0 / g];
        let cfg = McConfig { trials: 200_000, seed: 9, g };
        let a = sample_run(&qubit_linear(1.0), &alpha, &plus(), &psi_f, &cfg).unwrap();
        let b = sample_run(&qubit_linear(1.0), &alpha, &plus(), &psi_f, &cfg).unwrap();
        assert_eq!(a, b);
        let (exact, _) = conditioned_average(&qubit_linear(1.0), &alpha, &plus(), &psi_f, g).unwrap();
        assert!((a.empirical_value - exact).abs() < 5.0 * a.stderr);
    }
}
