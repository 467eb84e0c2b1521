use super::{Backend, Capabilities, SolveOptions, SolveResult, SolveStats, SolveStatus, SolverError};
use crate::model::{LinearModel, Sense};
use highs::{HighsModelStatus, RowProblem, SolvedModel};
use std::time::Instant;

/// HiGHS through its C API. No lazy-constraint callbacks are exposed by the
/// bindings, so this backend only offers plain solves.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

const NAME: &str = "highs";

fn backend_error(message: impl Into<String>) -> SolverError {
    SolverError::Backend {
        backend: NAME,
        message: message.into(),
    }
}

fn run(model: &LinearModel, options: &SolveOptions, presolve: bool) -> Result<SolvedModel, SolverError> {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = model
        .columns
        .iter()
        .map(|c| pb.add_column_with_integrality(c.cost, c.lower..=c.upper, c.integer))
        .collect();
    for r in &model.rows {
        pb.add_row(r.lower..=r.upper, r.terms.iter().map(|(c, a)| (cols[c.0], *a)));
    }
    let sense = match model.sense {
        Sense::Maximize => highs::Sense::Maximise,
        Sense::Minimize => highs::Sense::Minimise,
    };
    let mut m = pb
        .try_optimise(sense)
        .map_err(|s| backend_error(format!("model rejected: {s:?}")))?;
    m.make_quiet();
    let set = |m: &mut highs::Model, name: &str, v: f64| {
        m.try_set_option(name, v)
            .map_err(|s| backend_error(format!("option {name}: {s:?}")))
    };
    set(&mut m, "primal_feasibility_tolerance", options.feasibility_tol)?;
    set(&mut m, "dual_feasibility_tolerance", options.feasibility_tol)?;
    set(&mut m, "mip_feasibility_tolerance", options.feasibility_tol.max(1e-9))?;
    set(&mut m, "mip_rel_gap", options.mip_gap)?;
    set(&mut m, "mip_abs_gap", 1e-9)?;
    if let Some(t) = options.time_limit {
        set(&mut m, "time_limit", t)?;
    }
    if options.disable_heuristics {
        set(&mut m, "mip_heuristic_effort", 0.0)?;
    }
    if !presolve {
        m.try_set_option("presolve", "off")
            .map_err(|s| backend_error(format!("option presolve: {s:?}")))?;
    }
    m.try_solve().map_err(|s| backend_error(format!("run failed: {s:?}")))
}

fn mip_nodes(solved: &SolvedModel) -> u64 {
    let mut value: i64 = 0;
    // SAFETY: the pointer comes from a live model and the key is a valid C string.
    let status = unsafe {
        highs_sys::Highs_getInt64InfoValue(solved.as_ptr(), c"mip_node_count".as_ptr(), &mut value)
    };
    if status == highs_sys::STATUS_OK {
        value.max(0) as u64
    } else {
        0
    }
}

impl Backend for HighsBackend {
    fn name(&self) -> &'static str {
        NAME
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_lazy_constraints: false,
            supports_local_cuts: false,
            supports_heuristics_toggle: true,
        }
    }

    fn solve(&self, model: &LinearModel, options: &SolveOptions) -> Result<SolveResult, SolverError> {
        let start = Instant::now();
        let is_mip = model.is_mip();
        if model.columns.is_empty() {
            let stats = SolveStats {
                wall_time_s: start.elapsed().as_secs_f64(),
                ..Default::default()
            };
            let feasible = model.rows.iter().all(|r| r.lower <= 0.0 && 0.0 <= r.upper);
            if !feasible {
                return Ok(SolveResult::without_point(SolveStatus::Infeasible, stats));
            }
            return Ok(SolveResult {
                status: SolveStatus::Optimal,
                objective: model.objective_offset,
                best_bound: model.objective_offset,
                primal: Vec::new(),
                duals: (!is_mip).then(|| vec![0.0; model.rows.len()]),
                stats,
            });
        }

        let mut solved = run(model, options, true)?;
        if solved.status() == HighsModelStatus::UnboundedOrInfeasible {
            solved = run(model, options, false)?;
        }
        let stats = SolveStats {
            nodes: if is_mip { mip_nodes(&solved) } else { 0 },
            simplex_iterations: solved.simplex_iteration_count().max(0) as u64,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded => SolveStatus::Unbounded,
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit => SolveStatus::Limit,
            other => return Err(backend_error(format!("unexpected model status {other:?}"))),
        };
        if matches!(status, SolveStatus::Infeasible | SolveStatus::Unbounded) {
            return Ok(SolveResult::without_point(status, stats));
        }
        let has_point = status == SolveStatus::Optimal
            || solved.primal_solution_status() == highs::HighsSolutionStatus::Feasible;
        if !has_point {
            return Ok(SolveResult::without_point(status, stats));
        }
        let solution = solved.get_solution();
        let primal = solution.columns().to_vec();
        let objective = model.objective(&primal);
        let best_bound = if is_mip {
            solved
                .double_info_value(c"mip_dual_bound")
                .unwrap_or(f64::NAN)
                + model.objective_offset
        } else if status == SolveStatus::Optimal {
            objective
        } else {
            f64::NAN
        };
        let duals = (!is_mip && status == SolveStatus::Optimal).then(|| solution.dual_rows().to_vec());
        Ok(SolveResult {
            status,
            objective,
            best_bound,
            primal,
            duals,
            stats,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn one_constraint_lp() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_column("x", -INF, INF, 1.0);
        m.add_row("x>=3", 3.0, INF, vec![(x, 1.0)]);
        let r = HighsBackend.solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(r.objective, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_feasible_set_is_infeasible() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_column("x", -INF, INF, 1.0);
        m.add_row("ub", -INF, 1.0, vec![(x, 1.0)]);
        m.add_row("lb", 2.0, INF, vec![(x, 1.0)]);
        let r = HighsBackend.solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.primal.is_empty());
    }

    #[test]
    fn unbounded_is_reported() {
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_column("x", 0.0, INF, 1.0);
        m.add_row("free", 0.0, INF, vec![(x, 1.0)]);
        let r = HighsBackend.solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn shadow_prices_of_max_problem_are_nonnegative_on_binding_le_rows() {
        // max 3x + 2y, x + y <= 4, x <= 3
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_column("x", 0.0, INF, 3.0);
        let y = m.add_column("y", 0.0, INF, 2.0);
        let r1 = m.add_row("cap", -INF, 4.0, vec![(x, 1.0), (y, 1.0)]);
        let r2 = m.add_row("x", -INF, 3.0, vec![(x, 1.0)]);
        let r = HighsBackend.solve(&m, &SolveOptions::default()).unwrap();
        assert_abs_diff_eq!(r.objective, 11.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.dual(r1).unwrap(), 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.dual(r2).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn small_mip_reports_nodes_and_bound() {
        let mut m = LinearModel::new(Sense::Maximize);
        let a = m.add_integer_column("a", 0.0, 1.0, 5.0);
        let b = m.add_integer_column("b", 0.0, 1.0, 4.0);
        let c = m.add_integer_column("c", 0.0, 1.0, 3.0);
        m.add_row("w", -INF, 5.0, vec![(a, 2.0), (b, 3.0), (c, 4.0)]);
        let opts = SolveOptions {
            disable_heuristics: true,
            ..Default::default()
        };
        let r = HighsBackend.solve(&m, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(r.objective, 9.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.best_bound, 9.0, epsilon = 1e-6);
        assert!(r.duals.is_none());
    }
}
