//! `weaklab` command-line workbench.
//!
//! Exit codes: 0 when the command succeeds and its verdict passes, 1 on an
//! analytic failure (no exact contextual values, sweep failures, rejected
//! instance files), 2 on usage errors.

pub mod canonical;
pub mod instance;
pub mod registry;

mod commands;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use weaklab_core::grid::{default_grid, log_spaced_desc, DEFAULT_GRID_HALVINGS, DEFAULT_GRID_TOP};
use weaklab_core::linalg::StateVector;
use weaklab_core::povm::TruncateMode;
use weaklab_core::{Matrix, State};

use instance::{load_instance, InstanceSpec, LoadError};

#[derive(Parser, Debug)]
#[command(name = "weaklab", version, about = "Contextual values, weak limits and small-g asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Built-in instance (see `registry list`); defaults to qubit-linear.
    #[arg(long, conflicts_with = "file")]
    instance: Option<String>,
    /// Instance file (canonical JSON, see `registry export`).
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Smallest g of a log-spaced grid [default grid: 0.1·2^-k, k = 0..12].
    #[arg(long)]
    grid_min: Option<f64>,
    /// Largest g of a log-spaced grid.
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_HALVINGS + 1)]
    grid_points: usize,
}

#[derive(Args, Debug, Clone)]
struct StateArgs {
    /// Initial state amplitudes, comma-separated `re` or `re:im` (normalized).
    #[arg(long, allow_hyphen_values = true)]
    psi_i: Option<String>,
    /// Postselected state amplitudes, comma-separated `re` or `re:im`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "theta_f")]
    psi_f: Option<String>,
    /// Postselect on cos θ|0⟩ + sin θ|1⟩.
    #[arg(long, allow_hyphen_values = true)]
    theta_f: Option<f64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    /// Keep orders 0 and n.
    #[value(name = "eq13")]
    Gap,
    /// Keep all orders up to n.
    Prefix,
}

#[derive(Subcommand, Debug)]
enum RegistryCmd {
    List,
    Show {
        name: String,
    },
    /// Write the canonical instance file.
    Export {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load an instance and report completeness, positivity and orders.
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Pseudoinverse contextual values at one g.
    CvSolve {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        g: Option<f64>,
        /// Override the target eigenvalue vector (comma-separated).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        target: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leading pole order of the pseudoinverse contextual values.
    PoleOrder {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        target: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contextual values of the full POVM against its order-n truncation.
    TruncationCheck {
        #[command(flatten)]
        source: Source,
        /// Truncation order [default: the minimum nonzero order].
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "eq13")]
        truncate_mode: ModeArg,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conditioned averages along a grid and their g → 0 extrapolation.
    WeakLimit {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        states: StateArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Largest accepted |extrapolated − traditional weak value|.
        #[arg(long, default_value_t = weaklab_core::conjecture::DEFAULT_PASS_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Singular-value trajectories, determinant, pole orders, truncation
    /// commutation and the linear-F claim check.
    SvdAsymptotics {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        grid: GridArgs,
        /// Truncation order for the commutation test.
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks "no identically-zero singular value ⇒ all are O(g)" for a linear F.
    ProofClaim {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weak limit against the weak value on random linear commuting POVMs.
    ConjectureSweep {
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Fixed dimension [default: uniform in 2..=4 per trial].
        #[arg(long)]
        dim: Option<usize>,
        /// Fixed outcome count [default: uniform in dim..=max(dim, 5)].
        #[arg(long)]
        n_out: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = weaklab_core::conjecture::DEFAULT_PASS_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for failing instances [default: next to --out, else stdout].
        #[arg(long)]
        fail_dir: Option<PathBuf>,
    },
    /// Monte Carlo run of the weak measurement followed by postselection.
    McRun {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        states: StateArgs,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        g: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in instances.
    #[command(subcommand)]
    Registry(RegistryCmd),
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Analytic(String),
}

impl From<weaklab_core::Error> for Failure {
    fn from(e: weaklab_core::Error) -> Self {
        Failure::Analytic(e.to_string())
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Analytic(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Analytic(format!("I/O error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Analytic(format!("CSV error: {e}"))
    }
}

type Outcome = Result<bool, Failure>;

/// Runs one command line (`argv[0]` is the program name); returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Analytic(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "usage error: {msg}");
            2
        }
    }
}

fn resolve(source: &Source) -> Result<InstanceSpec, Failure> {
    if let Some(path) = &source.file {
        return Ok(load_instance(path)?);
    }
    let name = source.instance.as_deref().unwrap_or("qubit-linear");
    match registry::get(name) {
        Some(entry) => Ok(entry?.spec),
        None => Err(Failure::Usage(format!("unknown instance '{name}' (known: {})", registry::NAMES.join(", ")))),
    }
}

impl GridArgs {
    fn build(&self, fallback: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>, Failure> {
        if self.grid_min.is_none() && self.grid_max.is_none() {
            return Ok(fallback());
        }
        let hi = self.grid_max.unwrap_or(DEFAULT_GRID_TOP);
        let lo = self.grid_min.unwrap_or(hi * 0.5f64.powi(DEFAULT_GRID_HALVINGS as i32));
        if !(lo > 0.0 && lo < hi && hi.is_finite()) || self.grid_points < 2 {
            return Err(Failure::Usage(format!(
                "grid needs 0 < grid-min < grid-max and at least 2 points (got {lo}, {hi}, {})",
                self.grid_points
            )));
        }
        Ok(log_spaced_desc(lo, hi, self.grid_points))
    }

    fn build_default(&self) -> Result<Vec<f64>, Failure> {
        self.build(default_grid)
    }
}

fn parse_amplitudes(text: &str) -> Result<Vec<Complex64>, Failure> {
    text.split(',')
        .map(|part| {
            let part = part.trim();
            let (re, im) = part.split_once(':').unwrap_or((part, "0"));
            match (re.trim().parse::<f64>(), im.trim().parse::<f64>()) {
                (Ok(r), Ok(i)) => Ok(Complex64::new(r, i)),
                _ => Err(Failure::Usage(format!("cannot parse amplitude '{part}'"))),
            }
        })
        .collect()
}

impl StateArgs {
    fn resolve(&self, spec: &InstanceSpec, dim: usize) -> Result<(State, State), Failure> {
        let parse = |text: &str| -> Result<State, Failure> {
            let v = parse_amplitudes(text)?;
            if v.len() != dim {
                return Err(Failure::Usage(format!("state has {} amplitudes, instance dim is {dim}", v.len())));
            }
            StateVector::normalized(v).map_err(|e| Failure::Usage(e.to_string()))
        };
        let psi_i = match &self.psi_i {
            Some(t) => parse(t)?,
            None => spec.psi_i.clone().ok_or_else(|| Failure::Usage("instance has no psi_i; pass --psi-i".into()))?,
        };
        let psi_f = match (&self.psi_f, self.theta_f) {
            (Some(t), _) => parse(t)?,
            (None, Some(theta)) => StateVector::from_angle(dim, theta).map_err(|e| Failure::Usage(e.to_string()))?,
            (None, None) => {
                spec.psi_f.clone().ok_or_else(|| Failure::Usage("instance has no psi_f; pass --psi-f".into()))?
            }
        };
        Ok((psi_i, psi_f))
    }
}

impl From<ModeArg> for TruncateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Gap => TruncateMode::Gap,
            ModeArg::Prefix => TruncateMode::Prefix,
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &Matrix) -> Complex64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.rows();
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut d = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].norm().total_cmp(&a[y][k].norm())).expect("non-empty");
        if a[p][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        d *= a[k][k];
        for i in k + 1..n {
            let factor = a[i][k] / a[k][k];
            let (top, bottom) = a.split_at_mut(i);
            for (x, &y) in bottom[0][k..].iter_mut().zip(&top[k][k..]) {
                *x -= factor * y;
            }
        }
    }
    d
}
