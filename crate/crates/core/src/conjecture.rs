//! Randomized evidence for weak-value convergence of linear commuting POVMs.
//!
//! A trial draws a diagonal linear POVM `E_j(g) = p_j I + g D_j` (weights `p`
//! from a flat Dirichlet, so `E_j(0) ∝ I`; the columns of `D` sum to zero row
//! by row), a diagonal observable and a pair of states, then compares the
//! extrapolated conditioned average with the traditional weak value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::default_grid;
use crate::linalg::{inner, CMatrix, Hermitian, StateVector};
use crate::poly::PolyMatrix;
use crate::povm::ParamPovm;
use crate::scalar::{Real, C};
use crate::weak::{weak_limit, WeakLimitReport};

pub const MAX_DIM: usize = 6;
pub const MAX_OUTCOMES: usize = 8;
pub const MAX_ATTEMPTS: usize = 100;
pub const DEFAULT_PASS_TOL: f64 = 1e-3;
/// Drawn states keep `|⟨ψ_f|ψ_i⟩|` at least this large.
pub const MIN_OVERLAP: f64 = 0.1;
/// Validity range of generated POVMs, as a fraction of the positivity radius
/// (which the generator normalizes to 1).
pub const RADIUS_FRACTION: f64 = 0.9;

/// Independent stream for trial `index` of a sweep seeded with `master`.
pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// A random instance satisfying the hypotheses under test.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearInstance<T> {
    pub povm: ParamPovm<T>,
    pub observable: Hermitian<T>,
    pub psi_i: StateVector<T>,
    pub psi_f: StateVector<T>,
}

fn flat_dirichlet<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Haar-random pure state.
pub fn random_state<T: Real, R: Rng>(rng: &mut R, dim: usize) -> StateVector<T> {
    loop {
        let amps: Vec<C<T>> = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C::new(T::lit(re), T::lit(im))
            })
            .collect();
        if let Ok(s) = StateVector::normalized(amps) {
            return s;
        }
    }
}

/// Linear POVM draw; `None` if the draw is degenerate (some `D_j = 0`).
fn draw_povm<T: Real, R: Rng>(rng: &mut R, dim: usize, n_out: usize) -> Result<Option<ParamPovm<T>>> {
    if n_out == 1 {
        let id = PolyMatrix::constant(CMatrix::identity(dim));
        return ParamPovm::validated(vec![id], T::one()).map(Some);
    }
    let p = flat_dirichlet(rng, n_out);
    let mut d = vec![vec![0.0f64; n_out]; dim];
    for row in &mut d {
        for x in row.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let mean = row.iter().sum::<f64>() / n_out as f64;
        row.iter_mut().for_each(|x| *x -= mean);
    }
    let col_max = |j: usize| d.iter().map(|r| r[j].abs()).fold(0.0, f64::max);
    if (0..n_out).any(|j| col_max(j) <= 1e-9) {
        return Ok(None);
    }
    let radius = (0..n_out).map(|j| p[j] / col_max(j)).fold(f64::INFINITY, f64::min);
    if !(radius.is_finite() && radius > 0.0) {
        return Ok(None);
    }
    let elements = (0..n_out)
        .map(|j| {
            let c0 = CMatrix::identity(dim).scale(T::lit(p[j]));
            let c1 = CMatrix::diag_real(&d.iter().map(|r| T::lit(r[j] * radius)).collect::<Vec<_>>());
            PolyMatrix::linear(c0, c1)
        })
        .collect::<Result<Vec<_>>>()?;
    match ParamPovm::validated(elements, T::lit(RADIUS_FRACTION)) {
        Ok(povm) => Ok(Some(povm)),
        Err(Error::NotPositive { .. }) | Err(Error::InvalidMatrix(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Draws a complete instance; states not supplied are drawn with
/// `|⟨ψ_f|ψ_i⟩| ≥ 0.1`.
pub fn generate_instance<T: Real, R: Rng>(
    rng: &mut R,
    dim: usize,
    n_out: usize,
    psi_i: Option<StateVector<T>>,
    psi_f: Option<StateVector<T>>,
) -> Result<LinearInstance<T>> {
    if dim == 0 || dim > MAX_DIM || n_out == 0 || n_out > MAX_OUTCOMES {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ dim ≤ {MAX_DIM} and 1 ≤ n_out ≤ {MAX_OUTCOMES}, got {dim} and {n_out}"
        )));
    }
    for s in psi_i.iter().chain(psi_f.iter()) {
        if s.dim() != dim {
            return Err(Error::DimensionError(format!("state dim {} vs {dim}", s.dim())));
        }
    }
    let mut povm = None;
    for _ in 0..MAX_ATTEMPTS {
        if let Some(p) = draw_povm(rng, dim, n_out)? {
            povm = Some(p);
            break;
        }
    }
    let povm = povm.ok_or(Error::GenerationFailed { attempts: MAX_ATTEMPTS })?;

    let mut spectrum: Vec<T> = (0..dim).map(|_| T::lit(rng.random_range(-1.0..=1.0))).collect();
    spectrum.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let observable = Hermitian::from_matrix_unchecked(CMatrix::diag_real(&spectrum));

    let (psi_i, psi_f) = match (psi_i, psi_f) {
        (Some(i), Some(f)) => (i, f),
        (fixed_i, fixed_f) => {
            let mut attempt = 0;
            loop {
                let i = fixed_i.clone().unwrap_or_else(|| random_state(rng, dim));
                let f = fixed_f.clone().unwrap_or_else(|| random_state(rng, dim));
                if inner(f.amplitudes(), i.amplitudes()).norm() >= T::lit(MIN_OVERLAP) {
                    break (i, f);
                }
                attempt += 1;
                if attempt >= MAX_ATTEMPTS {
                    return Err(Error::GenerationFailed { attempts: attempt });
                }
            }
        }
    };
    Ok(LinearInstance { povm, observable, psi_i, psi_f })
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrialOutcome<T> {
    Pass,
    /// Discrepancy above tolerance; the instance is kept for inspection.
    Fail(Box<LinearInstance<T>>),
    /// The pipeline rejected the instance (e.g. no exact contextual values).
    Error(Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord<T> {
    pub index: u64,
    pub seed: u64,
    pub dim: usize,
    pub n_out: usize,
    pub report: Option<WeakLimitReport<T>>,
    pub outcome: TrialOutcome<T>,
}

impl<T: Real> TrialRecord<T> {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, TrialOutcome::Pass)
    }

    pub fn discrepancy(&self) -> Option<T> {
        self.report.as_ref().map(|r| r.discrepancy)
    }
}

fn run_trial<T: Real>(
    rng: &mut ChaCha8Rng,
    (seed, index): (u64, u64),
    dim: usize,
    n_out: usize,
    states: (Option<StateVector<T>>, Option<StateVector<T>>),
    tol: T,
) -> Result<TrialRecord<T>> {
    let inst = generate_instance(rng, dim, n_out, states.0, states.1)?;
    let record = |report, outcome| TrialRecord { index, seed, dim, n_out, report, outcome };
    match weak_limit(&inst.povm, &inst.observable, &inst.psi_i, &inst.psi_f, &default_grid()) {
        Ok(rep) if rep.discrepancy <= tol => Ok(record(Some(rep), TrialOutcome::Pass)),
        Ok(rep) => Ok(record(Some(rep), TrialOutcome::Fail(Box::new(inst)))),
        Err(e) => Ok(record(None, TrialOutcome::Error(e))),
    }
}

/// One trial: random linear commuting POVM and observable from `seed`, weak
/// limit on the default grid, pass if the discrepancy is at most `tol`.
pub fn conjecture_trial<T: Real>(
    seed: u64,
    dim: usize,
    n_out: usize,
    psi_i: Option<StateVector<T>>,
    psi_f: Option<StateVector<T>>,
    tol: T,
) -> Result<TrialRecord<T>> {
    run_trial(&mut trial_rng(seed, 0), (seed, 0), dim, n_out, (psi_i, psi_f), tol)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepConfig {
    pub trials: u64,
    pub seed: u64,
    /// Fixed dimension, or uniform in `2..=4` per trial.
    pub dim: Option<usize>,
    /// Fixed outcome count, or uniform in `dim..=max(dim, 5)` per trial.
    pub n_out: Option<usize>,
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { trials: 100, seed: 0, dim: None, n_out: None, tol: DEFAULT_PASS_TOL }
    }
}

/// Runs trials in parallel; trial `i` draws from `trial_rng(seed, i)`, so the
/// records do not depend on scheduling.
pub fn conjecture_sweep<T: Real>(cfg: &SweepConfig) -> Result<Vec<TrialRecord<T>>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = trial_rng(cfg.seed, index);
            let dim = cfg.dim.unwrap_or_else(|| rng.random_range(2..=4));
            let n_out = cfg.n_out.unwrap_or_else(|| rng.random_range(dim..=dim.max(5)));
            run_trial(&mut rng, (cfg.seed, index), dim, n_out, (None, None), T::lit(cfg.tol))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_42_qubit_passes() {
        let r = conjecture_trial::<f64>(42, 2, 2, None, None, DEFAULT_PASS_TOL).unwrap();
        assert!(r.passed(), "{:?}", r.report.map(|r| r.discrepancy));
    }

    #[test]
    fn generated_povm_is_linear_and_weak() {
        let mut rng = trial_rng(7, 3);
        let inst: LinearInstance<f64> = generate_instance(&mut rng, 3, 4, None, None).unwrap();
        assert_eq!(inst.povm.max_degree(), 1);
        assert_eq!(inst.povm.minimum_nonzero_order().unwrap().n, 1);
        for e in inst.povm.elements() {
            let c0 = e.coeff(0);
            assert!((&c0 - &CMatrix::identity(3).scale(c0[(0, 0)].re)).max_abs() < 1e-15);
        }
        assert!(inner(inst.psi_f.amplitudes(), inst.psi_i.amplitudes()).norm() >= MIN_OVERLAP);
    }

    #[test]
    fn single_outcome_has_no_cv() {
        let r = conjecture_trial::<f64>(1, 2, 1, None, None, DEFAULT_PASS_TOL).unwrap();
        assert!(matches!(r.outcome, TrialOutcome::Error(Error::NoExactCv { .. })));
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = SweepConfig { trials: 8, seed: 5, ..Default::default() };
        let a = conjecture_sweep::<f64>(&cfg).unwrap();
        let b = conjecture_sweep::<f64>(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.passed()));
    }

    #[test]
    fn rejects_oversized() {
        let r = conjecture_trial::<f64>(0, 7, 2, None, None, DEFAULT_PASS_TOL);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}
