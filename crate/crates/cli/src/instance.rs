//! Instance files: a POVM (or a bare matrix polynomial) with an observable,
//! optional default states and free-form notes.
//!
//! POVM files carry `dim`, `g_max`, `outcomes` (per outcome, a list of
//! `{order, matrix}` coefficients), `observable`, optional `psi_i`/`psi_f`,
//! `name` and `notes`. Matrix-polynomial files replace `dim`/`outcomes`/
//! `observable` with `shape`, `polynomial` and `target`. Matrices are
//! row-major lists of `[re, im]` pairs; states are lists of pairs.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use thiserror::Error;
use weaklab_core::grid::validation_grid;
use weaklab_core::linalg::{CMatrix, Hermitian, StateVector};
use weaklab_core::poly::PolyMatrix;
use weaklab_core::povm::ParamPovm;
use weaklab_core::{HermitianMatrix, Matrix, Poly, Povm, State};

use crate::canonical;

const HERMITIAN_TOL: f64 = 1e-12;
const STATE_NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Povm {
        povm: Povm,
        observable: HermitianMatrix,
    },
    /// A raw `F(g)` with target vector `a`; no POVM structure.
    Matrix {
        f: Poly,
        target: Vec<f64>,
        g_max: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub name: String,
    pub model: Model,
    pub psi_i: Option<State>,
    pub psi_f: Option<State>,
    pub notes: String,
}

impl InstanceSpec {
    pub fn g_max(&self) -> f64 {
        match &self.model {
            Model::Povm { povm, .. } => povm.g_max(),
            Model::Matrix { g_max, .. } => *g_max,
        }
    }

    pub fn povm(&self) -> Option<(&Povm, &HermitianMatrix)> {
        match &self.model {
            Model::Povm { povm, observable } => Some((povm, observable)),
            Model::Matrix { .. } => None,
        }
    }
}

/// Machine-readable cause of a rejected instance file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    Schema,
    Shape,
    NotHermitian,
    Completeness,
    NotPositive,
    InvalidState,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{origin}: {source}")]
    Io { origin: String, source: std::io::Error },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("{origin}: {location}: {reason}: {detail}")]
    Validation { origin: String, location: String, reason: Reason, detail: String },
}

impl LoadError {
    pub fn reason(&self) -> Option<Reason> {
        match self {
            LoadError::Validation { reason, .. } => Some(*reason),
            _ => None,
        }
    }
}

struct Ctx<'a> {
    origin: &'a str,
}

impl Ctx<'_> {
    fn fail(&self, location: impl Into<String>, reason: Reason, detail: impl Into<String>) -> LoadError {
        LoadError::Validation {
            origin: self.origin.to_string(),
            location: location.into(),
            reason,
            detail: detail.into(),
        }
    }

    fn field<'v>(&self, obj: &'v Map<String, Value>, key: &str) -> Result<&'v Value, LoadError> {
        obj.get(key).ok_or_else(|| self.fail(format!("/{key}"), Reason::Schema, "missing key"))
    }

    fn uint(&self, v: &Value, at: &str) -> Result<usize, LoadError> {
        v.as_u64().map(|u| u as usize).ok_or_else(|| self.fail(at, Reason::Schema, "expected a non-negative integer"))
    }

    fn real(&self, v: &Value, at: &str) -> Result<f64, LoadError> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(self.fail(at, Reason::Schema, "expected a finite number")),
        }
    }

    fn text(&self, v: &Value, at: &str) -> Result<String, LoadError> {
        v.as_str().map(str::to_string).ok_or_else(|| self.fail(at, Reason::Schema, "expected a string"))
    }

    fn array<'v>(&self, v: &'v Value, at: &str) -> Result<&'v Vec<Value>, LoadError> {
        v.as_array().ok_or_else(|| self.fail(at, Reason::Schema, "expected an array"))
    }

    fn complex(&self, v: &Value, at: &str) -> Result<Complex64, LoadError> {
        match v.as_array().map(Vec::as_slice) {
            Some([re, im]) => Ok(Complex64::new(self.real(re, at)?, self.real(im, at)?)),
            _ => Err(self.fail(at, Reason::Schema, "expected an [re, im] pair")),
        }
    }

    fn entries(&self, v: &Value, at: &str) -> Result<Vec<Complex64>, LoadError> {
        self.array(v, at)?.iter().enumerate().map(|(i, x)| self.complex(x, &format!("{at}/{i}"))).collect()
    }

    fn matrix(&self, v: &Value, rows: usize, cols: usize, at: &str) -> Result<Matrix, LoadError> {
        let data = self.entries(v, at)?;
        if data.len() != rows * cols {
            return Err(self.fail(at, Reason::Shape, format!("{} entries, expected {rows}x{cols}", data.len())));
        }
        CMatrix::from_vec(rows, cols, data).map_err(|e| self.fail(at, Reason::Shape, e.to_string()))
    }

    fn hermitian(&self, m: Matrix, at: &str) -> Result<Matrix, LoadError> {
        let defect = m.hermitian_defect();
        if defect > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(self.fail(at, Reason::NotHermitian, format!("Hermiticity defect {defect:e}")));
        }
        Ok(m)
    }

    fn polynomial(&self, v: &Value, rows: usize, cols: usize, at: &str, hermitian: bool) -> Result<Poly, LoadError> {
        let mut terms = Vec::new();
        for (i, c) in self.array(v, at)?.iter().enumerate() {
            let here = format!("{at}/{i}");
            let obj = c.as_object().ok_or_else(|| self.fail(&here, Reason::Schema, "expected {order, matrix}"))?;
            let order = self.uint(obj.get("order").unwrap_or(&Value::Null), &format!("{here}/order"))?;
            if terms.iter().any(|(k, _)| *k == order) {
                return Err(self.fail(&here, Reason::Schema, format!("order {order} repeated")));
            }
            let mat_at = format!("{here}/matrix");
            let m = self.matrix(obj.get("matrix").unwrap_or(&Value::Null), rows, cols, &mat_at)?;
            let m = if hermitian { self.hermitian(m, &mat_at)? } else { m };
            terms.push((order, m));
        }
        if terms.is_empty() {
            return Err(self.fail(at, Reason::Schema, "no coefficients"));
        }
        PolyMatrix::from_terms(rows, cols, &terms).map_err(|e| self.fail(at, Reason::Shape, e.to_string()))
    }

    fn state(&self, v: &Value, dim: usize, at: &str) -> Result<State, LoadError> {
        let amps = self.entries(v, at)?;
        if amps.len() != dim {
            return Err(self.fail(at, Reason::Shape, format!("{} amplitudes, expected {dim}", amps.len())));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(self.fail(at, Reason::InvalidState, format!("norm {norm} != 1")));
        }
        StateVector::new(amps).map_err(|e| self.fail(at, Reason::InvalidState, e.to_string()))
    }
}

pub fn from_json(text: &str, origin: &str) -> Result<InstanceSpec, LoadError> {
    let root: Value = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let cx = Ctx { origin };
    let obj = root.as_object().ok_or_else(|| cx.fail("/", Reason::Schema, "expected an object"))?;
    let name = match obj.get("name") {
        Some(v) => cx.text(v, "/name")?,
        None => String::new(),
    };
    let notes = match obj.get("notes") {
        Some(v) => cx.text(v, "/notes")?,
        None => String::new(),
    };
    let g_max = cx.real(cx.field(obj, "g_max")?, "/g_max")?;
    if g_max <= 0.0 {
        return Err(cx.fail("/g_max", Reason::Schema, "g_max must be positive"));
    }

    let (model, dim) = if obj.contains_key("polynomial") {
        let shape = cx.array(cx.field(obj, "shape")?, "/shape")?;
        let [r, c] = shape.as_slice() else {
            return Err(cx.fail("/shape", Reason::Schema, "expected [rows, cols]"));
        };
        let (rows, cols) = (cx.uint(r, "/shape/0")?, cx.uint(c, "/shape/1")?);
        let f = cx.polynomial(cx.field(obj, "polynomial")?, rows, cols, "/polynomial", false)?;
        let target = cx
            .array(cx.field(obj, "target")?, "/target")?
            .iter()
            .enumerate()
            .map(|(i, x)| cx.real(x, &format!("/target/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        if target.len() != rows {
            return Err(cx.fail("/target", Reason::Shape, format!("{} entries for {rows} rows", target.len())));
        }
        (Model::Matrix { f, target, g_max }, rows)
    } else {
        let dim = cx.uint(cx.field(obj, "dim")?, "/dim")?;
        if dim == 0 {
            return Err(cx.fail("/dim", Reason::Shape, "dim must be at least 1"));
        }
        let mut elements = Vec::new();
        for (j, o) in cx.array(cx.field(obj, "outcomes")?, "/outcomes")?.iter().enumerate() {
            elements.push(cx.polynomial(o, dim, dim, &format!("/outcomes/{j}"), true)?);
        }
        let povm = ParamPovm::new(elements, g_max).map_err(|e| cx.fail("/outcomes", Reason::Shape, e.to_string()))?;
        let report =
            povm.validate(&validation_grid(g_max)).map_err(|e| cx.fail("/outcomes", Reason::Shape, e.to_string()))?;
        if !report.completeness_ok() {
            return Err(cx.fail(
                "/outcomes",
                Reason::Completeness,
                format!("completeness residual {:e}", report.max_completeness_residual()),
            ));
        }
        if !report.positivity_ok() {
            return Err(cx.fail(
                "/outcomes",
                Reason::NotPositive,
                format!("smallest eigenvalue {:e} on the validation grid up to g_max", report.min_eigenvalue()),
            ));
        }
        let a = cx.matrix(cx.field(obj, "observable")?, dim, dim, "/observable")?;
        let observable = Hermitian::new(cx.hermitian(a, "/observable")?)
            .map_err(|e| cx.fail("/observable", Reason::NotHermitian, e.to_string()))?;
        (Model::Povm { povm, observable }, dim)
    };

    let psi_i = obj.get("psi_i").map(|v| cx.state(v, dim, "/psi_i")).transpose()?;
    let psi_f = obj.get("psi_f").map(|v| cx.state(v, dim, "/psi_f")).transpose()?;
    Ok(InstanceSpec { name, model, psi_i, psi_f, notes })
}

fn pair(z: &Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_value(m: &Matrix) -> Value {
    Value::Array(m.as_slice().iter().map(pair).collect())
}

fn poly_value(p: &Poly) -> Value {
    let mut terms: Vec<Value> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.max_abs() != 0.0)
        .map(|(k, c)| json!({"order": k, "matrix": matrix_value(c)}))
        .collect();
    if terms.is_empty() {
        terms.push(json!({"order": 0, "matrix": matrix_value(&p.coeff(0))}));
    }
    Value::Array(terms)
}

pub fn to_value(spec: &InstanceSpec) -> Value {
    let mut obj = Map::new();
    obj.insert("name".into(), json!(spec.name));
    obj.insert("notes".into(), json!(spec.notes));
    obj.insert("g_max".into(), json!(spec.g_max()));
    match &spec.model {
        Model::Povm { povm, observable } => {
            obj.insert("dim".into(), json!(povm.dim()));
            obj.insert("outcomes".into(), Value::Array(povm.elements().iter().map(poly_value).collect()));
            obj.insert("observable".into(), matrix_value(observable.matrix()));
        }
        Model::Matrix { f, target, .. } => {
            obj.insert("shape".into(), json!([f.rows(), f.cols()]));
            obj.insert("polynomial".into(), poly_value(f));
            obj.insert("target".into(), json!(target));
        }
    }
    for (key, s) in [("psi_i", &spec.psi_i), ("psi_f", &spec.psi_f)] {
        if let Some(s) = s {
            obj.insert(key.into(), Value::Array(s.amplitudes().iter().map(pair).collect()));
        }
    }
    Value::Object(obj)
}

pub fn to_json(spec: &InstanceSpec) -> String {
    canonical::to_string(&to_value(spec))
}

pub fn load_instance(path: &Path) -> Result<InstanceSpec, LoadError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { origin: origin.clone(), source })?;
    from_json(&text, &origin)
}

pub fn save_instance(path: &Path, spec: &InstanceSpec) -> std::io::Result<()> {
    std::fs::write(path, to_json(spec))
}
