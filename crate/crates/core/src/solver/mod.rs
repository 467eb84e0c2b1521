//! Backend-neutral solve interface.
//!
//! Dual values are only returned for pure LPs. Maximization duals are shadow
//! prices, `d objective / d row bound`, so a binding `<=` row has a
//! non-negative dual.

mod branch_and_cut;
mod highs;

pub use branch_and_cut::BranchAndCut;
pub use highs::HighsBackend;

use crate::model::{ColId, LinearModel, ModelHandle, RowId, Symbol};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Seconds.
    pub time_limit: Option<f64>,
    /// Relative MIP gap at which the search stops.
    pub mip_gap: f64,
    pub disable_heuristics: bool,
    pub feasibility_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_limit: None,
            mip_gap: 0.0,
            disable_heuristics: false,
            feasibility_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time or node limit hit; `primal` holds the best point found, if any.
    Limit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub simplex_iterations: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective of `primal`, `NaN` when no point is available.
    pub objective: f64,
    /// Proven bound on the optimum (equal to `objective` for solved LPs).
    pub best_bound: f64,
    /// One value per model column; empty when no point is available.
    pub primal: Vec<f64>,
    /// One shadow price per row, LPs only.
    pub duals: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, col: ColId) -> f64 {
        self.primal[col.0]
    }

    pub fn symbol_value(&self, h: &ModelHandle, symbol: Symbol) -> f64 {
        h.value(&self.primal, symbol)
    }

    pub fn dual(&self, row: RowId) -> Option<f64> {
        self.duals.as_ref().map(|d| d[row.0])
    }

    /// Relative gap between objective and bound.
    pub fn gap(&self) -> f64 {
        if !self.objective.is_finite() || !self.best_bound.is_finite() {
            return f64::INFINITY;
        }
        (self.best_bound - self.objective).abs() / self.objective.abs().max(1.0)
    }

    pub(crate) fn without_point(status: SolveStatus, stats: SolveStats) -> Self {
        SolveResult {
            status,
            objective: f64::NAN,
            best_bound: f64::NAN,
            primal: Vec::new(),
            duals: None,
            stats,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Capabilities {
    pub supports_lazy_constraints: bool,
    pub supports_local_cuts: bool,
    pub supports_heuristics_toggle: bool,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("backend '{backend}' failed: {message}")]
    Backend { backend: &'static str, message: String },
    #[error("backend '{backend}' does not support {feature}")]
    Unsupported {
        backend: &'static str,
        feature: &'static str,
    },
    #[error("lazy constraint handler failed: {0}")]
    Callback(String),
    #[error("lazy cut '{0}' does not cut off the incumbent it was generated for")]
    NonSeparatingCut(String),
    #[error("unknown backend '{0}' (expected 'highs' or 'branch-and-cut')")]
    UnknownBackend(String),
}

/// An integer-feasible point found by the search, offered to a lazy handler
/// before it may become the incumbent.
#[derive(Debug)]
pub struct Incumbent<'a> {
    pub values: &'a [f64],
    pub objective: f64,
    /// Depth of the node whose LP relaxation produced the point; 0 is the root.
    pub depth: usize,
}

/// A row returned by a lazy handler. Local rows only hold in the subtree of the
/// node that produced the incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct LazyCut {
    pub name: String,
    pub terms: Vec<(ColId, f64)>,
    pub lower: f64,
    pub upper: f64,
    pub local: bool,
}

impl LazyCut {
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act: f64 = self.terms.iter().map(|(c, a)| a * values[c.0]).sum();
        (self.lower - act).max(act - self.upper).max(0.0)
    }
}

pub trait LazyHandler {
    /// Returns the rows to add; an empty list accepts the point.
    fn on_incumbent(&mut self, incumbent: &Incumbent<'_>) -> Result<Vec<LazyCut>, SolverError>;
}

impl<F> LazyHandler for F
where
    F: FnMut(&Incumbent<'_>) -> Result<Vec<LazyCut>, SolverError>,
{
    fn on_incumbent(&mut self, incumbent: &Incumbent<'_>) -> Result<Vec<LazyCut>, SolverError> {
        self(incumbent)
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    fn capabilities(&self) -> Capabilities;

    fn solve(&self, model: &LinearModel, options: &SolveOptions) -> Result<SolveResult, SolverError>;

    /// Solves a MIP, offering every integer-feasible point to `handler` first.
    fn solve_with_lazy_handler(
        &self,
        _model: &LinearModel,
        _options: &SolveOptions,
        _handler: &mut dyn LazyHandler,
    ) -> Result<SolveResult, SolverError> {
        Err(SolverError::Unsupported {
            backend: self.name(),
            feature: "lazy constraints",
        })
    }
}

/// Looks a backend up by its configuration name.
pub fn backend_by_name(name: &str) -> Result<Box<dyn Backend>, SolverError> {
    match name {
        "highs" => Ok(Box::new(HighsBackend)),
        "branch-and-cut" => Ok(Box::new(BranchAndCut::new(HighsBackend))),
        other => Err(SolverError::UnknownBackend(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    #[test]
    fn lookup_by_name() {
        assert_eq!(backend_by_name("highs").unwrap().name(), "highs");
        let bc = backend_by_name("branch-and-cut").unwrap();
        assert!(bc.capabilities().supports_lazy_constraints);
        assert!(matches!(backend_by_name("cplex"), Err(SolverError::UnknownBackend(_))));
    }

    #[test]
    fn plain_backend_refuses_lazy_handler() {
        let mut m = LinearModel::new(Sense::Maximize);
        m.add_integer_column("u", 0.0, 1.0, 1.0);
        let mut handler = |_: &Incumbent<'_>| Ok(Vec::new());
        let err = HighsBackend
            .solve_with_lazy_handler(&m, &SolveOptions::default(), &mut handler)
            .unwrap_err();
        assert!(matches!(err, SolverError::Unsupported { .. }));
    }
}
