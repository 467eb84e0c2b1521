//! Benders decomposition of MarketClearing-MPC: a master over the primal rows
//! only, a worker deciding whether supporting prices exist for the master's
//! commitments, and classical, no-good and strengthened cuts.

mod cuts;

pub use cuts::{generate_cut, CutKind, CutOrigin, CutRecord};

use crate::clearing::{
    price_support, worker_program, ClearError, ClearingMode, ClearingSolution, Duals, Primal, WorkerOptimum,
};
use crate::formulation::{add_ramping, build_uwelfare, compute_big_m, FormulationError};
use crate::market::Instance;
use crate::model::ModelHandle;
use crate::solver::{
    Backend, Incumbent, LazyCut, SolveOptions, SolveStatus, SolverError,
};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BendersMode {
    /// Solve the master to optimality, then cut; the classical scheme.
    Iterative,
    /// Cut inside a branch-and-cut on every integer incumbent.
    Callback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutPolicy {
    StrengthenedPlusNogood,
    NogoodOnly,
    ClassicalOnly,
}

#[derive(Debug, Error)]
pub enum BendersError {
    #[error(transparent)]
    Clear(#[from] ClearError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("a globally valid strengthened cut needs a master optimum, not a branch-and-bound incumbent")]
    StrengthenedOutOfScope,
    #[error("a classical cut needs a failed worker test")]
    ClassicalNeedsWorkerOptimum,
    #[error("{kind:?} cut does not cut off the incumbent it was generated for")]
    NonSeparating { kind: CutKind },
    #[error("{0}")]
    Internal(String),
}

/// Result of the worker test for one incumbent.
#[derive(Debug, Clone)]
pub enum WorkerOutcome {
    /// Prices exist; `duals` is one supporting dual point.
    Feasible { duals: Duals, worker_objective: f64 },
    /// No supporting prices; the worker optimum exceeds the incumbent welfare.
    Infeasible { worker: WorkerOptimum, welfare_star: f64 },
}

impl WorkerOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, WorkerOutcome::Feasible { .. })
    }
}

/// Worker test: maximize welfare over the relaxation with rejected bids pinned
/// to zero and compare with the incumbent's own welfare, recomputed from its
/// primal values. `tol` is relative to `max(1, |welfare|)`.
pub fn worker_test(
    instance: &Instance,
    incumbent: &Primal,
    backend: &dyn Backend,
    options: &SolveOptions,
    tol: f64,
) -> Result<WorkerOutcome, BendersError> {
    let welfare_star = incumbent.welfare(instance, ClearingMode::Mpc);
    let worker = worker_program(instance, &incumbent.u, backend, options)?;
    if worker.objective > welfare_star + tol * welfare_star.abs().max(1.0) {
        return Ok(WorkerOutcome::Infeasible { worker, welfare_star });
    }
    let support = price_support(instance, incumbent, ClearingMode::Mpc, backend, options, tol)?;
    let duals = support.duals.ok_or_else(|| {
        BendersError::Internal("worker accepted a point the price-support LP cannot price".into())
    })?;
    Ok(WorkerOutcome::Feasible {
        duals,
        worker_objective: worker.objective,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutCounts {
    pub classical: usize,
    pub no_good: usize,
    pub strengthened_global: usize,
    pub strengthened_local: usize,
}

impl CutCounts {
    fn add(&mut self, kind: CutKind) {
        match kind {
            CutKind::Classical => self.classical += 1,
            CutKind::NoGood => self.no_good += 1,
            CutKind::StrengthenedGlobal => self.strengthened_global += 1,
            CutKind::StrengthenedLocal => self.strengthened_local += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.classical + self.no_good + self.strengthened_global + self.strengthened_local
    }

    pub fn strengthened(&self) -> usize {
        self.strengthened_global + self.strengthened_local
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BendersStats {
    /// Master solves (iterative) or worker calls (callback).
    pub iterations: usize,
    pub cuts: CutCounts,
    pub master_nodes: u64,
    pub wall_time_s: f64,
    /// Objective of each master optimum, in order (iterative mode).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub master_objectives: Vec<f64>,
    /// Why callback mode ran iteratively instead, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BendersResult {
    pub status: SolveStatus,
    pub solution: Option<ClearingSolution>,
    /// Relative gap of the master solve that produced the accepted point;
    /// infinite when no point was accepted.
    pub gap: f64,
    pub cuts: Vec<CutRecord>,
    pub stats: BendersStats,
}

#[derive(Debug, Clone)]
pub struct BendersOptions {
    pub solve: SolveOptions,
    pub worker_tol: f64,
    /// Safety net on master iterations.
    pub max_iterations: usize,
}

impl Default for BendersOptions {
    fn default() -> Self {
        BendersOptions {
            solve: SolveOptions::default(),
            worker_tol: 1e-6,
            max_iterations: 100_000,
        }
    }
}

/// The master program: primal rows only, binary commitments.
pub fn master_model(instance: &Instance) -> Result<ModelHandle, BendersError> {
    let mut h = build_uwelfare(instance, None)?;
    if instance.mp_bids.iter().any(|c| c.ramp.is_some()) {
        add_ramping(&mut h, instance)?;
    }
    Ok(h)
}

fn cuts_for(
    policy: CutPolicy,
    origin: CutOrigin,
    local_supported: bool,
) -> Vec<CutKind> {
    match (policy, origin) {
        (CutPolicy::ClassicalOnly, _) => vec![CutKind::Classical],
        (CutPolicy::NogoodOnly, _) => vec![CutKind::NoGood],
        // The global strengthened cut implies the no-good of the same incumbent.
        (CutPolicy::StrengthenedPlusNogood, CutOrigin::MasterOptimum) => vec![CutKind::StrengthenedGlobal],
        (CutPolicy::StrengthenedPlusNogood, CutOrigin::NodeIncumbent) if local_supported => {
            vec![CutKind::StrengthenedLocal, CutKind::NoGood]
        }
        (CutPolicy::StrengthenedPlusNogood, CutOrigin::NodeIncumbent) => vec![CutKind::NoGood],
    }
}

fn make_cuts(
    instance: &Instance,
    big_m: &[f64],
    outcome: &WorkerOutcome,
    incumbent: &Primal,
    kinds: &[CutKind],
    origin: CutOrigin,
) -> Result<Vec<CutRecord>, BendersError> {
    let mut out = Vec::new();
    for &kind in kinds {
        let cut = generate_cut(instance, big_m, kind, outcome, &incumbent.u, origin)?;
        if cut.violation(instance, incumbent) <= 1e-9 {
            return Err(BendersError::NonSeparating { kind });
        }
        out.push(cut);
    }
    Ok(out)
}

/// Solves MarketClearing-MPC by decomposition.
pub fn solve_benders(
    instance: &Instance,
    mode: BendersMode,
    policy: CutPolicy,
    backend: &dyn Backend,
    options: &BendersOptions,
) -> Result<BendersResult, BendersError> {
    match mode {
        BendersMode::Iterative => iterative(instance, policy, backend, options, None),
        BendersMode::Callback => {
            let caps = backend.capabilities();
            if !caps.supports_lazy_constraints || !caps.supports_heuristics_toggle {
                let reason = format!(
                    "backend '{}' lacks lazy constraints or a heuristics switch; ran iteratively",
                    backend.name()
                );
                return iterative(instance, policy, backend, options, Some(reason));
            }
            callback(instance, policy, backend, options)
        }
    }
}

fn iterative(
    instance: &Instance,
    policy: CutPolicy,
    backend: &dyn Backend,
    options: &BendersOptions,
    fallback: Option<String>,
) -> Result<BendersResult, BendersError> {
    let start = Instant::now();
    let mut master = master_model(instance)?;
    let big_m: Vec<f64> = instance
        .mp_bids
        .iter()
        .map(|c| compute_big_m(c, instance.price_bound))
        .collect();
    let mut stats = BendersStats {
        fallback,
        ..Default::default()
    };
    let mut cuts = Vec::new();

    loop {
        if stats.iterations >= options.max_iterations {
            return Err(BendersError::Internal(format!(
                "no convergence after {} master solves",
                stats.iterations
            )));
        }
        stats.iterations += 1;
        let r = backend.solve(&master.model, &options.solve)?;
        stats.master_nodes += r.stats.nodes;
        match r.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => {
                stats.wall_time_s = start.elapsed().as_secs_f64();
                return Ok(BendersResult {
                    status: SolveStatus::Infeasible,
                    solution: None,
                    gap: f64::INFINITY,
                    cuts,
                    stats,
                });
            }
            other => {
                return Err(BendersError::Internal(format!("master ended with status {other:?}")));
            }
        }
        stats.master_objectives.push(r.objective);
        let incumbent = Primal::from_values(instance, &master, &r.primal);
        let outcome = worker_test(instance, &incumbent, backend, &options.solve, options.worker_tol)?;
        if let WorkerOutcome::Feasible { duals, .. } = outcome {
            stats.wall_time_s = start.elapsed().as_secs_f64();
            return Ok(BendersResult {
                status: SolveStatus::Optimal,
                solution: Some(ClearingSolution::new(
                    instance,
                    ClearingMode::Mpc,
                    incumbent,
                    Some(duals),
                )),
                gap: r.gap(),
                cuts,
                stats,
            });
        }
        let kinds = cuts_for(policy, CutOrigin::MasterOptimum, false);
        for cut in make_cuts(instance, &big_m, &outcome, &incumbent, &kinds, CutOrigin::MasterOptimum)? {
            let lazy = cut.to_lazy_cut(&master, cuts.len());
            master.model.add_row(lazy.name, lazy.lower, lazy.upper, lazy.terms);
            stats.cuts.add(cut.kind);
            cuts.push(cut);
        }
    }
}

fn callback(
    instance: &Instance,
    policy: CutPolicy,
    backend: &dyn Backend,
    options: &BendersOptions,
) -> Result<BendersResult, BendersError> {
    let start = Instant::now();
    let master = master_model(instance)?;
    let big_m: Vec<f64> = instance
        .mp_bids
        .iter()
        .map(|c| compute_big_m(c, instance.price_bound))
        .collect();
    let local_supported = backend.capabilities().supports_local_cuts;
    let solve_options = SolveOptions {
        disable_heuristics: true,
        ..options.solve.clone()
    };

    struct State {
        cuts: Vec<CutRecord>,
        counts: CutCounts,
        calls: usize,
        accepted: Vec<(Primal, Duals)>,
        error: Option<BendersError>,
    }
    let state = RefCell::new(State {
        cuts: Vec::new(),
        counts: CutCounts::default(),
        calls: 0,
        accepted: Vec::new(),
        error: None,
    });

    let mut handler = |inc: &Incumbent<'_>| -> Result<Vec<LazyCut>, SolverError> {
        let mut st = state.borrow_mut();
        st.calls += 1;
        let incumbent = Primal::from_values(instance, &master, inc.values);
        let fail = |st: &mut State, e: BendersError| {
            let msg = e.to_string();
            st.error = Some(e);
            SolverError::Callback(msg)
        };
        let outcome = match worker_test(instance, &incumbent, backend, &options.solve, options.worker_tol) {
            Ok(o) => o,
            Err(e) => return Err(fail(&mut st, e)),
        };
        if let WorkerOutcome::Feasible { duals, .. } = outcome {
            st.accepted.push((incumbent, duals));
            return Ok(Vec::new());
        }
        // Even a root incumbent is not a master optimum: the tree may still hold
        // better integer points, so callback cuts are always node cuts.
        let kinds = cuts_for(policy, CutOrigin::NodeIncumbent, local_supported);
        let made = match make_cuts(instance, &big_m, &outcome, &incumbent, &kinds, CutOrigin::NodeIncumbent) {
            Ok(c) => c,
            Err(e) => return Err(fail(&mut st, e)),
        };
        let mut lazy = Vec::new();
        for cut in made {
            let n = st.cuts.len();
            lazy.push(cut.to_lazy_cut(&master, n));
            st.counts.add(cut.kind);
            st.cuts.push(cut);
        }
        Ok(lazy)
    };

    let r = backend.solve_with_lazy_handler(&master.model, &solve_options, &mut handler);
    let st = state.into_inner();
    if let Some(e) = st.error {
        return Err(e);
    }
    let r = r?;
    let stats = BendersStats {
        iterations: st.calls,
        cuts: st.counts,
        master_nodes: r.stats.nodes,
        wall_time_s: start.elapsed().as_secs_f64(),
        master_objectives: Vec::new(),
        fallback: None,
    };
    let solution = match r.status {
        SolveStatus::Optimal | SolveStatus::Limit if !r.primal.is_empty() => {
            let u = Primal::from_values(instance, &master, &r.primal).u;
            let (primal, duals) = st
                .accepted
                .into_iter()
                .rev()
                .find(|(p, _)| p.u == u)
                .ok_or_else(|| BendersError::Internal("final incumbent never passed the worker".into()))?;
            Some(ClearingSolution::new(instance, ClearingMode::Mpc, primal, Some(duals)))
        }
        _ => None,
    };
    let gap = if solution.is_some() { r.gap() } else { f64::INFINITY };
    Ok(BendersResult {
        status: r.status,
        solution,
        gap,
        cuts: st.cuts,
        stats,
    })
}
