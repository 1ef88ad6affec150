//! Numerical laboratory for weak measurements described by g-parameterized
//! POVMs: contextual values via the pseudoinverse prescription, postselected
//! conditioned averages and their weak limits, and small-g singular-value
//! asymptotics of matrix polynomials.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! double precision, which is what the tolerances are calibrated for.

// `!(x > 0)`-style guards are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod conjecture;
pub mod contextual;
pub mod error;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod meter;
pub mod montecarlo;
pub mod poly;
pub mod povm;
pub mod scalar;
pub mod weak;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Matrix = linalg::CMatrix<f64>;
pub type HermitianMatrix = linalg::Hermitian<f64>;
pub type State = linalg::StateVector<f64>;
pub type Density = linalg::DensityMatrix<f64>;
pub type Povm = povm::ParamPovm<f64>;
pub type Poly = poly::PolyMatrix<f64>;
pub type FMatrix = contextual::FMatrix<f64>;
pub type CvSolution = contextual::CvSolution<f64>;
pub type MeterModel = meter::MeterModel<f64>;
pub type WeakLimitReport = weak::WeakLimitReport<f64>;
pub type SvdCurve = asymptotics::SvdCurve<f64>;
pub type OrderEstimate = asymptotics::OrderEstimate<f64>;
pub type TrialRecord = conjecture::TrialRecord<f64>;
pub type McConfig = montecarlo::McConfig<f64>;
pub type McResult = montecarlo::McResult<f64>;
