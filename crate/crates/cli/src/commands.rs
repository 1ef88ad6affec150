use std::io::Write;
use std::path::{Path, PathBuf};

use weaklab_core::asymptotics::{
    leading_order_fit, proof_claim_check, svd_curve, truncation_svd_commutator, ClaimReport, OrderEstimate,
};
use weaklab_core::conjecture::{conjecture_sweep, SweepConfig, TrialOutcome};
use weaklab_core::contextual::{build_f, pole_order, pseudoinverse_cv, truncated_cv_check, FMatrix, EXACT_CV_TOL};
use weaklab_core::grid::validation_grid;
use weaklab_core::montecarlo::{sample_run, McConfig};
use weaklab_core::weak::{conditioned_average, weak_limit};

use crate::instance::{to_json, InstanceSpec, Model};
use crate::{det, registry, resolve, Command, Failure, Outcome, RegistryCmd};

pub(crate) fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Validate { source } => validate(&resolve(&source)?, out),
        Command::CvSolve { source, g, target, out: csv } => {
            let spec = resolve(&source)?;
            cv_solve(&spec, g, target, csv.as_deref(), out)
        }
        Command::PoleOrder { source, grid, target, out: csv } => {
            let spec = resolve(&source)?;
            let f = f_matrix(&spec, target)?;
            let grid = grid.build_default()?;
            pole(&f, &grid, csv.as_deref(), out)
        }
        Command::TruncationCheck { source, n, truncate_mode, grid, out: csv } => {
            let spec = resolve(&source)?;
            let (povm, a) =
                spec.povm().ok_or_else(|| Failure::Usage(format!("{} is not a POVM instance", spec.name)))?;
            let n = match n {
                Some(n) => n,
                None => povm.minimum_nonzero_order()?.n,
            };
            let grid = grid.build(|| validation_grid(povm.g_max()))?;
            let rep = truncated_cv_check(povm, a, n, &grid, truncate_mode.into())?;
            writeln!(out, "instance={}", spec.name)?;
            writeln!(out, "n={n} mode={:?}", rep.mode)?;
            writeln!(out, "{:>12} {:>14} {:>14}", "g", "full_resid", "trunc_resid")?;
            for ((g, f), t) in rep.grid.iter().zip(&rep.full_residual).zip(&rep.truncated_residual) {
                writeln!(out, "{g:>12.4e} {f:>14.4e} {t:>14.4e}")?;
            }
            writeln!(out, "full_solvable={}", rep.full_solvable)?;
            writeln!(out, "truncated_solvable={}", rep.truncated_solvable)?;
            writeln!(out, "alphas_match={}", rep.alphas_match)?;
            writeln!(out, "max_relative_gap={:.6e}", rep.max_relative_gap)?;
            if let Some(path) = csv {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["g", "full_residual", "truncated_residual"])?;
                for ((g, f), t) in rep.grid.iter().zip(&rep.full_residual).zip(&rep.truncated_residual) {
                    w.write_record([num(*g), num(*f), num(*t)])?;
                }
                w.flush()?;
            }
            Ok(rep.truncated_solvable && rep.alphas_match)
        }
        Command::WeakLimit { source, states, grid, tol, out: csv } => {
            let spec = resolve(&source)?;
            let (povm, a) =
                spec.povm().ok_or_else(|| Failure::Usage(format!("{} is not a POVM instance", spec.name)))?;
            let (psi_i, psi_f) = states.resolve(&spec, povm.dim())?;
            let grid = grid.build_default()?;
            let rep = weak_limit(povm, a, &psi_i, &psi_f, &grid)?;
            writeln!(out, "instance={}", spec.name)?;
            writeln!(out, "{:>12} {:>20} {:>14}", "g", "conditioned_avg", "success_prob")?;
            for ((g, v), p) in rep.g_grid.iter().zip(&rep.conditioned_avgs).zip(&rep.success_probs) {
                writeln!(out, "{g:>12.4e} {v:>20.12} {p:>14.6e}")?;
            }
            writeln!(out, "extrapolated_limit={:.9}", rep.extrapolated_limit)?;
            writeln!(out, "traditional_value={:.9}", rep.traditional_value)?;
            writeln!(out, "discrepancy={:.3e}", rep.discrepancy)?;
            writeln!(out, "tol={tol:e}")?;
            if let Some(path) = csv {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["g", "conditioned_average", "success_probability"])?;
                for ((g, v), p) in rep.g_grid.iter().zip(&rep.conditioned_avgs).zip(&rep.success_probs) {
                    w.write_record([num(*g), num(*v), num(*p)])?;
                }
                w.flush()?;
            }
            Ok(rep.discrepancy <= tol)
        }
        Command::SvdAsymptotics { source, grid, n, out: csv } => {
            let spec = resolve(&source)?;
            let f = f_matrix(&spec, None)?;
            svd_asymptotics(&spec, &f, &grid.build_default()?, n, csv.as_deref(), out)
        }
        Command::ProofClaim { source, grid, out: csv } => {
            let spec = resolve(&source)?;
            let f = f_matrix(&spec, None)?;
            let rep = proof_claim_check(f.poly(), &grid.build_default()?)?;
            writeln!(out, "instance={}", spec.name)?;
            print_claim(&rep, out)?;
            if let Some(path) = csv {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["trajectory", "identically_zero", "exponent", "coefficient", "fit_r2"])?;
                for (k, (z, o)) in rep.zero_trajectories.iter().zip(&rep.orders).enumerate() {
                    let (e, c, r) = o.map_or((String::new(), String::new(), String::new()), |o| {
                        (num(o.exponent), num(o.coefficient), num(o.fit_r2))
                    });
                    w.write_record([(k + 1).to_string(), z.to_string(), e, c, r])?;
                }
                w.flush()?;
            }
            Ok(true)
        }
        Command::ConjectureSweep { trials, dim, n_out, seed, tol, out: csv, fail_dir } => {
            sweep(SweepConfig { trials, seed, dim, n_out, tol }, csv.as_deref(), fail_dir, out)
        }
        Command::McRun { source, states, trials, seed, g, out: csv } => {
            let spec = resolve(&source)?;
            let (povm, a) =
                spec.povm().ok_or_else(|| Failure::Usage(format!("{} is not a POVM instance", spec.name)))?;
            let (psi_i, psi_f) = states.resolve(&spec, povm.dim())?;
            let cv = pseudoinverse_cv(&build_f(povm, a)?, g, None)?;
            if !cv.is_exact(EXACT_CV_TOL) {
                return Err(Failure::Analytic(format!(
                    "no exact contextual values at g = {g} (residual {:e})",
                    cv.residual
                )));
            }
            let res = sample_run(povm, &cv.alpha, &psi_i, &psi_f, &McConfig { trials, seed, g })?;
            let (exact, success) = conditioned_average(povm, &cv.alpha, &psi_i, &psi_f, g)?;
            writeln!(out, "instance={}", spec.name)?;
            writeln!(out, "g={g} trials={trials} seed={seed}")?;
            writeln!(
                out,
                "successes={} (rate {:.6}, expected {:.6})",
                res.successes,
                res.successes as f64 / trials as f64,
                success
            )?;
            writeln!(out, "empirical_value={:.9}", res.empirical_value)?;
            writeln!(out, "stderr={:.3e}", res.stderr)?;
            writeln!(out, "analytic_value={exact:.9}")?;
            let z = if res.stderr > 0.0 { (res.empirical_value - exact) / res.stderr } else { 0.0 };
            writeln!(out, "z_score={z:.3}")?;
            if let Some(path) = csv {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["outcome", "alpha", "drawn", "accepted"])?;
                for (j, alpha) in cv.alpha.iter().enumerate() {
                    w.write_record([
                        (j + 1).to_string(),
                        num(*alpha),
                        res.drawn_counts[j].to_string(),
                        res.per_outcome_counts[j].to_string(),
                    ])?;
                }
                w.flush()?;
            }
            Ok(true)
        }
        Command::Registry(cmd) => registry_cmd(cmd, out),
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn f_matrix(spec: &InstanceSpec, target: Option<Vec<f64>>) -> Result<FMatrix<f64>, Failure> {
    let f = match &spec.model {
        Model::Povm { povm, observable } => build_f(povm, observable)?,
        Model::Matrix { f, target, g_max } => FMatrix::from_poly(f.clone(), target.clone(), *g_max)?,
    };
    match target {
        Some(t) if t.len() != f.rows() => {
            Err(Failure::Usage(format!("target has {} entries, F has {} rows", t.len(), f.rows())))
        }
        Some(t) => Ok(f.with_a(t)?),
        None => Ok(f),
    }
}

fn validate(spec: &InstanceSpec, out: &mut dyn Write) -> Outcome {
    writeln!(out, "instance={}", spec.name)?;
    writeln!(out, "g_max={}", spec.g_max())?;
    match &spec.model {
        Model::Matrix { f, target, .. } => {
            writeln!(out, "kind=matrix-polynomial shape={}x{} degree={}", f.rows(), f.cols(), f.max_degree())?;
            writeln!(out, "target={target:?}")?;
        }
        Model::Povm { povm, observable } => {
            let rep = povm.validate(&validation_grid(povm.g_max()))?;
            writeln!(out, "kind=povm dim={} outcomes={} degree={}", povm.dim(), povm.outcomes(), povm.max_degree())?;
            writeln!(out, "completeness_residual={:.3e}", rep.max_completeness_residual())?;
            writeln!(out, "min_eigenvalue={:.6e}", rep.min_eigenvalue())?;
            match povm.minimum_nonzero_order() {
                Ok(m) => writeln!(out, "minimum_nonzero_order={}", m.n)?,
                Err(e) => writeln!(out, "minimum_nonzero_order=none ({e})")?,
            }
            match build_f(povm, observable) {
                Ok(_) => writeln!(out, "observable_commutes=true")?,
                Err(e) => writeln!(out, "observable_commutes=false ({e})")?,
            }
        }
    }
    writeln!(out, "valid=true")?;
    Ok(true)
}

fn cv_solve(
    spec: &InstanceSpec,
    g: Option<f64>,
    target: Option<Vec<f64>>,
    csv: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let f = f_matrix(spec, target)?;
    let g = g.unwrap_or_else(|| spec.g_max().min(0.01));
    let sol = pseudoinverse_cv(&f, g, None)?;
    writeln!(out, "instance={}", spec.name)?;
    writeln!(out, "g={g}")?;
    writeln!(out, "a={:?}", f.a_vec())?;
    for (j, a) in sol.alpha.iter().enumerate() {
        writeln!(out, "alpha_{}={a:.12e}", j + 1)?;
    }
    writeln!(out, "residual={:.6e}", sol.residual)?;
    writeln!(out, "rank_used={}", sol.rank_used)?;
    let exact = sol.is_exact(EXACT_CV_TOL);
    writeln!(out, "exact={exact}")?;
    if let Some(path) = csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["outcome", "alpha"])?;
        for (j, a) in sol.alpha.iter().enumerate() {
            w.write_record([(j + 1).to_string(), num(*a)])?;
        }
        w.flush()?;
    }
    if !exact {
        writeln!(out, "NoExactCv: residual {:.3e} at g = {g}", sol.residual)?;
    }
    Ok(exact)
}

fn print_order(label: &str, o: &OrderEstimate<f64>, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{label}: order={:.4} coefficient={:.6e} r2={:.6}{}",
        o.exponent,
        o.coefficient,
        o.fit_r2,
        if o.reliable() { "" } else { " (unreliable fit)" }
    )
}

fn pole(f: &FMatrix<f64>, grid: &[f64], csv: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let est = pole_order(f, grid)?;
    writeln!(out, "a={:?}", f.a_vec())?;
    print_order("pole", &est, out)?;
    if let Some(path) = csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["g", "max_abs_alpha"])?;
        for &g in grid {
            let s = pseudoinverse_cv(f, g, None)?;
            w.write_record([num(g), num(s.alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())))])?;
        }
        w.flush()?;
    }
    Ok(true)
}

fn print_claim(rep: &ClaimReport<f64>, out: &mut dyn Write) -> std::io::Result<()> {
    for (k, (z, o)) in rep.zero_trajectories.iter().zip(&rep.orders).enumerate() {
        match o {
            Some(o) if !z => print_order(&format!("sigma_{}", k + 1), o, out)?,
            _ => writeln!(out, "sigma_{}: identically zero", k + 1)?,
        }
    }
    writeln!(out, "claim_holds={}", rep.claim_holds)?;
    writeln!(out, "counterexample_found={}", rep.counterexample_found)?;
    writeln!(out, "caveat: {}", rep.caveat)
}

fn svd_asymptotics(
    spec: &InstanceSpec,
    f: &FMatrix<f64>,
    grid: &[f64],
    n: usize,
    csv: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let poly = f.poly();
    let curve = svd_curve(poly, grid)?;
    let square = poly.rows() == poly.cols();
    writeln!(out, "instance={}", spec.name)?;
    write!(out, "{:>12}", "g")?;
    for k in 1..=curve.trajectories() {
        write!(out, " {:>14}", format!("sigma_{k}"))?;
    }
    writeln!(out, "{}", if square { format!(" {:>14}", "|det F|") } else { String::new() })?;
    let mut dets = Vec::new();
    for (g, s) in curve.g_grid.iter().zip(&curve.singulars) {
        write!(out, "{g:>12.4e}")?;
        for v in s {
            write!(out, " {v:>14.6e}")?;
        }
        if square {
            let d = det(&poly.eval(*g)).norm();
            dets.push((*g, d));
            write!(out, " {d:>14.6e}")?;
        }
        writeln!(out)?;
    }
    if square {
        match leading_order_fit(&dets) {
            Ok(o) => print_order("det", &o, out)?,
            Err(e) => writeln!(out, "det: {e}")?,
        }
    }
    if !curve.near_crossings.is_empty() {
        writeln!(out, "near_crossings={:?}", curve.near_crossings)?;
    }

    let rows = poly.rows();
    let mut targets = vec![("a".to_string(), f.a_vec().to_vec())];
    for i in 0..rows {
        let mut e = vec![0.0; rows];
        e[i] = 1.0;
        targets.push((format!("e_{}", i + 1), e));
    }
    for (label, t) in targets {
        match f.with_a(t.clone()).and_then(|fa| pole_order(&fa, grid)) {
            Ok(o) => print_order(&format!("pole[{label}={t:?}]"), &o, out)?,
            Err(e) => writeln!(out, "pole[{label}={t:?}]: {e}")?,
        }
    }

    let comm = truncation_svd_commutator(poly, n, grid)?;
    writeln!(out, "truncation order n={n}")?;
    for (k, c) in comm.right_coeffs.iter().enumerate() {
        let small = comm.left.singulars.last().map_or(f64::NAN, |s| s[k]);
        writeln!(out, "sigma_{}: truncated series {c:.6?}; truncated-F value at smallest g {small:.6e}", k + 1)?;
    }
    writeln!(out, "max_relative_gap={:.3e}", comm.max_relative_gap)?;
    if comm.unreliable_fit {
        writeln!(out, "warning: a singular-value series fit was unreliable")?;
    }
    writeln!(out, "commute={}", comm.commute)?;

    if poly.max_degree() <= 1 {
        print_claim(&proof_claim_check(poly, grid)?, out)?;
    }
    if let Some(path) = csv {
        std::fs::write(path, curve.to_csv())?;
    }
    Ok(true)
}

fn sweep(cfg: SweepConfig, csv: Option<&Path>, fail_dir: Option<PathBuf>, out: &mut dyn Write) -> Outcome {
    let records = conjecture_sweep::<f64>(&cfg)?;
    let fail_dir = fail_dir.or_else(|| csv.map(|p| p.parent().map(Path::to_path_buf).unwrap_or_default()));
    let mut writer = csv.map(csv::Writer::from_path).transpose()?;
    if let Some(w) = writer.as_mut() {
        w.write_record(["seed", "trial", "dim", "n_out", "g_min", "discrepancy", "pass"])?;
    }
    let mut passed = 0usize;
    let mut worst = 0.0f64;
    for r in &records {
        let g_min = r.report.as_ref().map(|rep| rep.g_grid.iter().fold(f64::INFINITY, |m, &g| m.min(g.abs())));
        let disc = r.discrepancy();
        if let Some(d) = disc {
            worst = worst.max(d);
        }
        if r.passed() {
            passed += 1;
        }
        if let Some(w) = writer.as_mut() {
            w.write_record([
                r.seed.to_string(),
                r.index.to_string(),
                r.dim.to_string(),
                r.n_out.to_string(),
                g_min.map(num).unwrap_or_default(),
                disc.map(num).unwrap_or_default(),
                r.passed().to_string(),
            ])?;
        }
        match &r.outcome {
            TrialOutcome::Pass => {}
            TrialOutcome::Error(e) => writeln!(out, "trial {}: error: {e}", r.index)?,
            TrialOutcome::Fail(inst) => {
                let spec = InstanceSpec {
                    name: format!("sweep-{}-{}", r.seed, r.index),
                    model: Model::Povm { povm: inst.povm.clone(), observable: inst.observable.clone() },
                    psi_i: Some(inst.psi_i.clone()),
                    psi_f: Some(inst.psi_f.clone()),
                    notes: format!("conjecture sweep failure: discrepancy {:e}", disc.unwrap_or(f64::NAN)),
                };
                match &fail_dir {
                    Some(dir) => {
                        let path = dir.join(format!("{}.json", spec.name));
                        std::fs::write(&path, to_json(&spec))?;
                        writeln!(out, "trial {}: FAIL, instance written to {}", r.index, path.display())?;
                    }
                    None => writeln!(out, "trial {}: FAIL\n{}", r.index, to_json(&spec))?,
                }
            }
        }
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    let total = records.len();
    writeln!(out, "trials={total} passed={passed} pass_rate={:.4}", passed as f64 / total.max(1) as f64)?;
    writeln!(out, "max_discrepancy={worst:.3e} tol={:e}", cfg.tol)?;
    Ok(passed == total)
}

fn registry_cmd(cmd: RegistryCmd, out: &mut dyn Write) -> Outcome {
    let fetch = |name: &str| match registry::get(name) {
        Some(e) => Ok(e?),
        None => Err(Failure::Usage(format!("unknown instance '{name}' (known: {})", registry::NAMES.join(", ")))),
    };
    match cmd {
        RegistryCmd::List => {
            for name in registry::NAMES {
                let e = fetch(name)?;
                let kind = match e.spec.model {
                    Model::Povm { .. } => "povm",
                    Model::Matrix { .. } => "matrix-polynomial",
                };
                writeln!(out, "{name:<14} {kind:<18} {}", e.spec.notes.split(':').next().unwrap_or(""))?;
            }
        }
        RegistryCmd::Show { name } => {
            let e = fetch(&name)?;
            writeln!(out, "{}", e.spec.notes)?;
            for (k, v) in &e.expected {
                writeln!(out, "expected {k}={v}")?;
            }
            write!(out, "{}", to_json(&e.spec))?;
        }
        RegistryCmd::Export { name, out: path } => {
            let e = fetch(&name)?;
            match path {
                Some(p) => std::fs::write(p, to_json(&e.spec))?,
                None => write!(out, "{}", to_json(&e.spec))?,
            }
        }
    }
    Ok(true)
}
