//! Built-in instances.

use std::f64::consts::PI;

use weaklab_core::contextual::{build_f, exact_cv_exists, truncated_cv_check, EXACT_CV_TOL};
use weaklab_core::grid::validation_grid;
use weaklab_core::linalg::{CMatrix, Hermitian, StateVector};
use weaklab_core::poly::PolyMatrix;
use weaklab_core::povm::{qubit_linear, ParamPovm, TruncateMode};
use weaklab_core::{Error, Matrix, Result};

use crate::instance::{InstanceSpec, Model};

pub struct RegistryEntry {
    pub spec: InstanceSpec,
    /// Reference values checked by the acceptance suite.
    pub expected: Vec<(&'static str, f64)>,
}

pub const NAMES: [&str; 5] = ["eq70", "qubit-linear", "flat", "quad-cx", "quad-cx-mixed"];

/// Coupling strength of the quadratic term in the `quad-cx` family.
const QUAD_STRENGTH: f64 = 10.0;
/// Lower bound on the order-1 truncation residual claimed for `quad-cx`.
pub const QUAD_TRUNCATED_FLOOR: f64 = 0.1;

pub fn get(name: &str) -> Option<Result<RegistryEntry>> {
    Some(match name {
        "eq70" => Ok(eq70()),
        "qubit-linear" => Ok(qubit()),
        "flat" => Ok(flat()),
        "quad-cx" => quad_cx(false),
        "quad-cx-mixed" => quad_cx(true),
        _ => return None,
    })
}

fn diag(v: &[f64]) -> Matrix {
    CMatrix::diag_real(v)
}

fn eq70() -> RegistryEntry {
    let p = CMatrix::from_real_rows(&[&[1.0, 1.0], &[-1.0, -1.0]]);
    let f = PolyMatrix::linear(p, CMatrix::identity(2)).expect("2x2");
    RegistryEntry {
        spec: InstanceSpec {
            name: "eq70".into(),
            model: Model::Matrix { f, target: vec![1.0, 1.0], g_max: 0.1 },
            psi_i: None,
            psi_f: None,
            notes: "Linear F(g) = [[1+g, 1], [-1, -1+g]] with det F = g^2: no singular value vanishes \
                    identically, yet one is O(g^2). F^+ (1,1) has a pole of order 2, F^+ (1,-1) of order 1."
                .into(),
        },
        expected: vec![("det_over_g2", 1.0), ("pole_order_ones", 2.0), ("pole_order_alternating", 1.0)],
    }
}

fn qubit() -> RegistryEntry {
    RegistryEntry {
        spec: InstanceSpec {
            name: "qubit-linear".into(),
            model: Model::Povm { povm: qubit_linear(1.0), observable: Hermitian::from_real_diag(&[1.0, -1.0]) },
            psi_i: Some(StateVector::from_real(&[1.0, 1.0]).expect("nonzero")),
            psi_f: Some(StateVector::from_angle(2, PI / 8.0).expect("dim 2")),
            notes: "E_± = (I ± g σ_z)/2 with A = σ_z; postselecting |+> on cos(π/8)|0> + sin(π/8)|1> \
                    has weak value √2 − 1."
                .into(),
        },
        expected: vec![("weak_value", 2f64.sqrt() - 1.0)],
    }
}

fn flat() -> RegistryEntry {
    let half = PolyMatrix::constant(CMatrix::identity(2).scale(0.5));
    RegistryEntry {
        spec: InstanceSpec {
            name: "flat".into(),
            model: Model::Povm {
                povm: ParamPovm::new(vec![half.clone(), half], 0.1).expect("valid"),
                observable: Hermitian::from_real_diag(&[1.0, -1.0]),
            },
            psi_i: Some(StateVector::from_real(&[1.0, 1.0]).expect("nonzero")),
            psi_f: Some(StateVector::basis(2, 0)),
            notes: "E_1 = E_2 = I/2 carries no information about σ_z: no contextual values exist.".into(),
        },
        expected: vec![("pip_residual", 2f64.sqrt())],
    }
}

/// `E_j = I/3 + g L_j + g² c D_j`, diagonal, with `D` the cyclic differences
/// `diag(1,0,−1), diag(−1,1,0), diag(0,−1,1)` and `A = diag(1, 0, −1)`.
///
/// Without `L` (`quad-cx`) the order-1 truncation is `I/3` for every outcome
/// and cannot resolve `A`; the full POVM can. With `L` (`quad-cx-mixed`) the
/// linear part only separates the first two basis states, so again only the
/// quadratic term makes `A` reachable.
fn quad_cx(mixed: bool) -> Result<RegistryEntry> {
    let c = QUAD_STRENGTH;
    let d = [[1.0, 0.0, -1.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]];
    let l = [[1.0, -1.0, 0.0], [-2.0, 2.0, 0.0], [1.0, -1.0, 0.0]];
    let elements = (0..3)
        .map(|j| {
            let mut terms = vec![(0, CMatrix::identity(3).scale(1.0 / 3.0)), (2, diag(&d[j]).scale(c))];
            if mixed {
                terms.push((1, diag(&l[j])));
            }
            PolyMatrix::from_terms(3, 3, &terms)
        })
        .collect::<Result<Vec<_>>>()?;
    let povm = ParamPovm::validated(elements, 0.1)?;
    let observable = Hermitian::from_real_diag(&[1.0, 0.0, -1.0]);
    let name = if mixed { "quad-cx-mixed" } else { "quad-cx" };
    let order = if mixed { 1 } else { 2 };
    verify_quad(&povm, &observable, order)?;
    let notes = if mixed {
        "Diagonal quadratic POVM with uniform minimum order 1: contextual values exist for the full \
         POVM but not for its linear truncation, whose F has rank 2."
    } else {
        "Diagonal quadratic POVM with minimum order 2: contextual values exist for the full POVM but \
         not for its order-1 truncation (residual √2)."
    };
    Ok(RegistryEntry {
        spec: InstanceSpec {
            name: name.into(),
            model: Model::Povm { povm, observable },
            psi_i: Some(StateVector::from_real(&[1.0, 1.0, 1.0]).expect("nonzero")),
            psi_f: Some(StateVector::from_real(&[1.0, 2.0, 0.5]).expect("nonzero")),
            notes: notes.into(),
        },
        expected: vec![("min_order", order as f64), ("truncated_residual_floor", QUAD_TRUNCATED_FLOOR)],
    })
}

/// The certified properties: expected minimum order, exact contextual values
/// for the full POVM, and none for the order-1 truncation (in both modes).
fn verify_quad(povm: &ParamPovm<f64>, a: &Hermitian<f64>, order: usize) -> Result<()> {
    let fail = |what: String| Err(Error::InvalidArgument(format!("quadratic counterexample: {what}")));
    let n = povm.minimum_nonzero_order()?.n;
    if n != order {
        return fail(format!("minimum order {n}, expected {order}"));
    }
    let grid = validation_grid(povm.g_max());
    if !exact_cv_exists(&build_f(povm, a)?, &grid, EXACT_CV_TOL)? {
        return fail("full POVM has no exact contextual values".into());
    }
    for mode in [TruncateMode::Gap, TruncateMode::Prefix] {
        let rep = truncated_cv_check(povm, a, 1, &grid, mode)?;
        let floor = rep.truncated_residual.iter().fold(f64::INFINITY, |m, &r| m.min(r));
        if rep.truncated_solvable || floor < QUAD_TRUNCATED_FLOOR {
            return fail(format!("order-1 truncation ({mode:?}) is solvable or residual {floor:e} too small"));
        }
    }
    Ok(())
}
