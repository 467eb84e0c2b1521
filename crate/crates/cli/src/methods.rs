use anyhow::Result;
use clap::ValueEnum;
use mpclear::benders::{solve_benders, BendersMode, BendersOptions, BendersStats, CutCounts, CutPolicy};
use mpclear::clearing::{clear, ClearOptions, ClearingMode, ClearingSolution};
use mpclear::market::Instance;
use mpclear::solver::{BranchAndCut, HighsBackend, SolveOptions, SolveStatus};
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mpc,
    Mic,
    BendersIterative,
    BendersCallback,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mpc => "mpc",
            Method::Mic => "mic",
            Method::BendersIterative => "benders-iterative",
            Method::BendersCallback => "benders-callback",
        }
    }

    /// Which welfare the method maximizes; only equal definitions compare.
    pub fn welfare_definition(self) -> &'static str {
        match self {
            Method::Mic => "welfare_without_fixed_costs",
            _ => "welfare_net_of_fixed_costs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    StrengthenedPlusNogood,
    NogoodOnly,
    ClassicalOnly,
}

impl From<Policy> for CutPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::StrengthenedPlusNogood => CutPolicy::StrengthenedPlusNogood,
            Policy::NogoodOnly => CutPolicy::NogoodOnly,
            Policy::ClassicalOnly => CutPolicy::ClassicalOnly,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub solve: SolveOptions,
    pub policy: CutPolicy,
}

/// Outcome of one method on one instance.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub status: SolveStatus,
    pub solution: Option<ClearingSolution>,
    pub gap: f64,
    pub cuts: CutCounts,
    pub nodes: u64,
    pub runtime_s: f64,
    pub benders: Option<BendersStats>,
}

pub fn run_method(instance: &Instance, method: Method, opts: &RunOptions) -> Result<MethodRun> {
    let start = Instant::now();
    let run = match method {
        Method::Mpc | Method::Mic => {
            let mode = if method == Method::Mpc { ClearingMode::Mpc } else { ClearingMode::Mic };
            let options = ClearOptions {
                solve: opts.solve.clone(),
                ..ClearOptions::default()
            };
            let out = clear(instance, mode, &HighsBackend, &options)?;
            MethodRun {
                method,
                status: out.status,
                solution: out.solution,
                gap: out.gap,
                cuts: CutCounts::default(),
                nodes: out.stats.nodes,
                runtime_s: 0.0,
                benders: None,
            }
        }
        Method::BendersIterative | Method::BendersCallback => {
            let options = BendersOptions {
                solve: opts.solve.clone(),
                ..BendersOptions::default()
            };
            let r = if method == Method::BendersIterative {
                solve_benders(instance, BendersMode::Iterative, opts.policy, &HighsBackend, &options)?
            } else {
                let backend = BranchAndCut::new(HighsBackend);
                solve_benders(instance, BendersMode::Callback, opts.policy, &backend, &options)?
            };
            MethodRun {
                method,
                status: r.status,
                solution: r.solution,
                gap: r.gap,
                cuts: r.stats.cuts.clone(),
                nodes: r.stats.master_nodes,
                runtime_s: 0.0,
                benders: Some(r.stats),
            }
        }
    };
    Ok(MethodRun {
        runtime_s: start.elapsed().as_secs_f64(),
        ..run
    })
}
