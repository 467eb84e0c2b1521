use crate::methods::{run_method, Method, MethodRun, RunOptions};
use crate::report::{emit, summary_csv, summary_row, ClearReport};
use crate::{Command, GenParams, OracleMode, SolverArgs};
use anyhow::{bail, Context, Result};
use mpclear::clearing::{ClearingMode, ClearingSolution};
use mpclear::market::{generate_synthetic, Instance, SyntheticParams};
use mpclear::solver::{HighsBackend, SolveOptions, SolveStatus};
use mpclear::verification::{brute_force_oracle, profit_report, verify, VerificationReport};
use std::path::Path;

/// Process exit classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Verified = 0,
    Error = 1,
    Infeasible = 2,
    Disagreement = 3,
}

/// Relative tolerance for cross-method welfare agreement.
const AGREEMENT_TOL: f64 = 1e-5;

pub fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Clear {
            instance,
            method,
            out,
            csv,
            solver,
        } => run_clear(&instance, method, out.as_deref(), csv.as_deref(), &solver),
        Command::Verify {
            instance,
            solution,
            tol,
            out,
            csv,
        } => run_verify(&instance, &solution, tol, out.as_deref(), csv.as_deref()),
        Command::Oracle {
            instance,
            mode,
            out,
            solver,
        } => run_oracle(&instance, mode, out.as_deref(), &solver),
        Command::Compare {
            instance,
            methods,
            out,
            csv,
            solver,
        } => run_compare(&instance, &methods, out.as_deref(), csv.as_deref(), &solver),
        Command::Bench {
            instances,
            methods,
            seeds,
            seed_start,
            params,
            csv,
            solver,
        } => run_bench(&instances, &methods, seeds, seed_start, &params, csv.as_deref(), &solver),
        Command::Gen { seed, params, out } => {
            let inst = generate_synthetic(seed, &params.resolve()?)?;
            emit(out.as_deref(), &inst.to_json_string())?;
            Ok(Outcome::Verified)
        }
    }
}

pub fn parse_instance_file(path: &Path) -> Result<Instance> {
    Instance::from_path(path).with_context(|| format!("instance {}", path.display()))
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl SolverArgs {
    fn run_options(&self) -> RunOptions {
        RunOptions {
            solve: self.solve_options(),
            policy: self.cuts.into(),
        }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            time_limit: self.time_limit,
            mip_gap: self.mip_gap,
            ..SolveOptions::default()
        }
    }
}

impl GenParams {
    fn resolve(&self) -> Result<SyntheticParams> {
        let mut p = match &self.params {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parameters {}", path.display()))?
            }
            None => SyntheticParams::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(
            n_mp,
            steps_per_curve,
            n_periods,
            n_locations,
            atc_capacity,
            cost_scale,
            demand_steps,
            supply_steps,
            buy_mp_share
        );
        Ok(p)
    }
}

fn verify_run(instance: &Instance, run: &MethodRun, tol: f64) -> Result<Option<VerificationReport>> {
    run.solution
        .as_ref()
        .map(|s| verify(instance, s, tol))
        .transpose()
        .context("verification could not run")
}

fn outcome_of(run: &MethodRun, report: Option<&VerificationReport>) -> Outcome {
    match (run.status, report) {
        (SolveStatus::Optimal, Some(r)) if r.passed => Outcome::Verified,
        (SolveStatus::Infeasible, _) => Outcome::Infeasible,
        _ => Outcome::Error,
    }
}

fn explain_failure(name: &str, run: &MethodRun, report: Option<&VerificationReport>) {
    match report {
        Some(r) if !r.passed => {
            for c in r.failed() {
                eprintln!(
                    "{name} {}: check {} failed (residual {:e}, items {:?})",
                    run.method.name(),
                    c.name,
                    c.max_residual,
                    c.offending
                );
            }
        }
        _ if run.status != SolveStatus::Optimal && run.status != SolveStatus::Infeasible => {
            eprintln!("{name} {}: solver stopped with status {:?}", run.method.name(), run.status);
        }
        _ => {}
    }
}

fn run_clear(path: &Path, method: Method, out: Option<&Path>, csv: Option<&Path>, solver: &SolverArgs) -> Result<Outcome> {
    let inst = parse_instance_file(path)?;
    let name = instance_name(path);
    let run = run_method(&inst, method, &solver.run_options())?;
    let report = verify_run(&inst, &run, solver.tol)?;
    let profit = run.solution.as_ref().map(|s| profit_report(&inst, s)).transpose()?;
    let doc = ClearReport::new(&name, &inst, &run, profit, report.clone());
    emit(out, &serde_json::to_string_pretty(&doc)?)?;
    if let Some(csv) = csv {
        emit(Some(csv), &summary_csv(&[summary_row(&name, &run)])?)?;
    }
    explain_failure(&name, &run, report.as_ref());
    Ok(outcome_of(&run, report.as_ref()))
}

fn run_verify(path: &Path, solution: &Path, tol: f64, out: Option<&Path>, csv: Option<&Path>) -> Result<Outcome> {
    let inst = parse_instance_file(path)?;
    let text = std::fs::read_to_string(solution).with_context(|| format!("reading {}", solution.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("solution {}", solution.display()))?;
    // A `clear` report nests the solution; a bare solution is accepted too.
    let body = match value.get("solution") {
        Some(inner) if !inner.is_null() => inner.clone(),
        Some(_) => bail!("{} holds no solution", solution.display()),
        None => value,
    };
    let sol: ClearingSolution =
        serde_json::from_value(body).with_context(|| format!("solution {}", solution.display()))?;
    let report = verify(&inst, &sol, tol)?;
    emit(out, &serde_json::to_string_pretty(&report)?)?;
    if let Some(csv) = csv {
        emit(Some(csv), &report.to_csv())?;
    }
    for c in report.failed() {
        eprintln!("check {} failed (residual {:e}, items {:?})", c.name, c.max_residual, c.offending);
    }
    Ok(if report.passed { Outcome::Verified } else { Outcome::Error })
}

fn run_oracle(path: &Path, mode: OracleMode, out: Option<&Path>, solver: &SolverArgs) -> Result<Outcome> {
    let inst = parse_instance_file(path)?;
    let mode = match mode {
        OracleMode::Mpc => ClearingMode::Mpc,
        OracleMode::Mic => ClearingMode::Mic,
    };
    let report = brute_force_oracle(&inst, mode, &HighsBackend, &solver.solve_options(), 1e-6)?;
    emit(out, &serde_json::to_string_pretty(&report)?)?;
    Ok(if report.best.is_some() { Outcome::Verified } else { Outcome::Infeasible })
}

/// A pair of methods whose results do not match.
#[derive(Debug)]
pub struct Mismatch {
    pub first: Method,
    pub second: Method,
    pub detail: String,
}

/// Compares welfare within each welfare definition; methods maximizing
/// different objectives are listed as non-comparable instead.
pub fn agreement(runs: &[MethodRun]) -> (Vec<Mismatch>, Vec<(Method, Method)>) {
    let mut mismatches = Vec::new();
    let mut non_comparable = Vec::new();
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            if a.method.welfare_definition() != b.method.welfare_definition() {
                non_comparable.push((a.method, b.method));
                continue;
            }
            let detail = match (&a.solution, &b.solution) {
                (Some(x), Some(y)) => {
                    let scale = x.welfare.abs().max(y.welfare.abs()).max(1.0);
                    ((x.welfare - y.welfare).abs() > AGREEMENT_TOL * scale)
                        .then(|| format!("welfare {} vs {}", x.welfare, y.welfare))
                }
                (None, None) => None,
                (x, y) => Some(format!(
                    "{} vs {}",
                    if x.is_some() { "solved" } else { "no solution" },
                    if y.is_some() { "solved" } else { "no solution" }
                )),
            };
            if let Some(detail) = detail {
                mismatches.push(Mismatch {
                    first: a.method,
                    second: b.method,
                    detail,
                });
            }
        }
    }
    (mismatches, non_comparable)
}

fn run_compare(
    path: &Path,
    methods: &[Method],
    out: Option<&Path>,
    csv: Option<&Path>,
    solver: &SolverArgs,
) -> Result<Outcome> {
    let inst = parse_instance_file(path)?;
    let name = instance_name(path);
    let opts = solver.run_options();
    let mut runs = Vec::new();
    let mut worst = Outcome::Verified;
    for &m in methods {
        let run = run_method(&inst, m, &opts)?;
        let report = verify_run(&inst, &run, solver.tol)?;
        explain_failure(&name, &run, report.as_ref());
        if outcome_of(&run, report.as_ref()) == Outcome::Error {
            worst = Outcome::Error;
        }
        runs.push(run);
    }
    let rows: Vec<_> = runs.iter().map(|r| summary_row(&name, r)).collect();
    emit(csv, &summary_csv(&rows)?)?;
    let (mismatches, non_comparable) = agreement(&runs);
    for (a, b) in &non_comparable {
        eprintln!(
            "{name}: {} and {} maximize different welfare definitions; not compared",
            a.name(),
            b.name()
        );
    }
    for m in &mismatches {
        eprintln!("{name}: {} and {} disagree: {}", m.first.name(), m.second.name(), m.detail);
    }
    if let Some(out) = out {
        let doc = serde_json::json!({
            "instance": name,
            "methods": runs.iter().map(|r| serde_json::json!({
                "method": r.method.name(),
                "welfare_definition": r.method.welfare_definition(),
                "status": format!("{:?}", r.status).to_lowercase(),
                "welfare": r.solution.as_ref().map(|s| s.welfare),
            })).collect::<Vec<_>>(),
            "agreement": mismatches.is_empty(),
            "non_comparable": non_comparable.iter().map(|(a, b)| [a.name(), b.name()]).collect::<Vec<_>>(),
        });
        emit(Some(out), &serde_json::to_string_pretty(&doc)?)?;
    }
    if !mismatches.is_empty() {
        return Ok(Outcome::Disagreement);
    }
    if worst == Outcome::Verified && runs.iter().all(|r| r.solution.is_none()) {
        return Ok(Outcome::Infeasible);
    }
    Ok(worst)
}

fn run_bench(
    files: &[std::path::PathBuf],
    methods: &[Method],
    seeds: u64,
    seed_start: u64,
    params: &GenParams,
    csv: Option<&Path>,
    solver: &SolverArgs,
) -> Result<Outcome> {
    let mut instances = Vec::new();
    if files.is_empty() {
        let p = params.resolve()?;
        for seed in seed_start..seed_start + seeds {
            instances.push((format!("seed-{seed}"), generate_synthetic(seed, &p)?));
        }
    } else {
        for f in files {
            instances.push((instance_name(f), parse_instance_file(f)?));
        }
    }
    let opts = solver.run_options();
    let mut rows = Vec::new();
    let mut worst = Outcome::Verified;
    for (name, inst) in &instances {
        let mut runs = Vec::new();
        for &m in methods {
            let run = run_method(inst, m, &opts)?;
            let report = verify_run(inst, &run, solver.tol)?;
            explain_failure(name, &run, report.as_ref());
            if outcome_of(&run, report.as_ref()) == Outcome::Error && worst != Outcome::Disagreement {
                worst = Outcome::Error;
            }
            rows.push(summary_row(name, &run));
            runs.push(run);
        }
        let (mismatches, _) = agreement(&runs);
        for m in &mismatches {
            eprintln!("{name}: {} and {} disagree: {}", m.first.name(), m.second.name(), m.detail);
            worst = Outcome::Disagreement;
        }
    }
    emit(csv, &summary_csv(&rows)?)?;
    Ok(worst)
}
