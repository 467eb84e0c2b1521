use super::{ClearingMode, ClearingSolution, Duals, Primal};
use crate::formulation::{add_ramping, build, build_uwelfare, FormulationConfig, FormulationError, Variant};
use crate::market::{Instance, InstanceError, Layout};
use crate::model::{ModelHandle, Symbol};
use crate::solver::{Backend, SolveOptions, SolveResult, SolveStats, SolveStatus, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClearError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("mode {0:?} cannot be cleared this way")]
    UnsupportedMode(ClearingMode),
    #[error("{0}")]
    Numerical(String),
}

#[derive(Debug, Clone)]
pub struct ClearOptions {
    pub solve: SolveOptions,
    pub price_bound_rows: bool,
    /// Re-solve the primal–dual model as an LP with the commitments fixed, so
    /// that reported values carry LP accuracy rather than MIP tolerances.
    pub polish: bool,
}

impl Default for ClearOptions {
    fn default() -> Self {
        ClearOptions {
            solve: SolveOptions::default(),
            price_bound_rows: true,
            polish: true,
        }
    }
}

/// Result of a clearing run. `solution` is `None` when the model is
/// infeasible or a limit was hit before any point was found.
#[derive(Debug, Clone)]
pub struct Cleared {
    pub status: SolveStatus,
    pub solution: Option<ClearingSolution>,
    pub stats: SolveStats,
    pub gap: f64,
}

/// Solves the MPC, MIC or UMFS model directly as one MILP.
pub fn clear(
    instance: &Instance,
    mode: ClearingMode,
    backend: &dyn Backend,
    options: &ClearOptions,
) -> Result<Cleared, ClearError> {
    let variant = match mode {
        ClearingMode::Mpc => Variant::Mpc,
        ClearingMode::Mic => Variant::Mic,
        ClearingMode::Umfs => Variant::Umfs,
        ClearingMode::FixedCommitment => return Err(ClearError::UnsupportedMode(mode)),
    };
    let mut config = FormulationConfig::new(variant).ramping_for(instance);
    config.price_bound_rows = options.price_bound_rows;
    let h = build(instance, &config)?;
    let r = backend.solve(&h.model, &options.solve)?;
    if r.primal.is_empty() {
        if r.status == SolveStatus::Unbounded {
            return Err(ClearError::Numerical("clearing model reported unbounded".into()));
        }
        return Ok(Cleared {
            status: r.status,
            solution: None,
            stats: r.stats,
            gap: f64::INFINITY,
        });
    }
    let gap = r.gap();
    let mut stats = r.stats.clone();
    let mut values = r.primal;
    if options.polish {
        if let Some(polished) = polish(&h, &values, backend, &options.solve)? {
            stats.simplex_iterations += polished.stats.simplex_iterations;
            stats.wall_time_s += polished.stats.wall_time_s;
            values = polished.primal;
        }
    }
    let layout = Layout::new(instance)?;
    let primal = Primal::from_values(instance, &h, &values);
    let duals = Duals::from_columns(instance, &layout, &h, &values, &primal, mode);
    Ok(Cleared {
        status: r.status,
        solution: Some(ClearingSolution::new(instance, mode, primal, Some(duals))),
        stats,
        gap,
    })
}

/// Fixes every commitment at its rounded value and re-solves as an LP.
fn polish(
    h: &ModelHandle,
    values: &[f64],
    backend: &dyn Backend,
    options: &SolveOptions,
) -> Result<Option<SolveResult>, ClearError> {
    let mut lp = h.model.clone();
    for (symbol, col) in h.symbols() {
        if let Symbol::Commitment(_) = symbol {
            let u = values[col.0].round();
            lp.set_bounds(col, u, u);
        }
    }
    lp.relax_integrality();
    let r = backend.solve(&lp, options)?;
    Ok(r.is_optimal().then_some(r))
}

/// Optimum of the welfare LP with every commitment fixed.
#[derive(Debug, Clone)]
pub struct FixedOptimum {
    pub handle: ModelHandle,
    pub result: SolveResult,
    pub primal: Primal,
    /// Welfare net of fixed costs.
    pub welfare: f64,
}

/// Solves the fixed-commitment welfare LP (with ramping rows when the instance
/// has ramp data). `None` when that LP is infeasible.
pub fn fixed_commitment_optimum(
    instance: &Instance,
    u: &[bool],
    backend: &dyn Backend,
    options: &SolveOptions,
) -> Result<Option<FixedOptimum>, ClearError> {
    let mut h = build_uwelfare(instance, Some(u))?;
    if instance.mp_bids.iter().any(|c| c.ramp.is_some()) {
        add_ramping(&mut h, instance)?;
    }
    let result = backend.solve(&h.model, options)?;
    match result.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(None),
        other => {
            return Err(ClearError::Numerical(format!(
                "fixed-commitment LP ended with status {other:?}"
            )))
        }
    }
    let primal = Primal::from_values(instance, &h, &result.primal);
    let welfare = primal.welfare(instance, ClearingMode::FixedCommitment);
    Ok(Some(FixedOptimum {
        handle: h,
        result,
        primal,
        welfare,
    }))
}

/// Diagnostic clear with imposed commitments: prices and surpluses are the
/// shadow prices of the fixed-commitment LP, shadow costs of acceptance may be
/// positive (an accepted bid then makes a loss).
pub fn clear_fixed_commitments(
    instance: &Instance,
    u: &[bool],
    backend: &dyn Backend,
    options: &SolveOptions,
) -> Result<Option<ClearingSolution>, ClearError> {
    let Some(opt) = fixed_commitment_optimum(instance, u, backend, options)? else {
        return Ok(None);
    };
    let layout = Layout::new(instance)?;
    let duals = Duals::from_row_duals(instance, &layout, &opt.handle, &opt.result);
    Ok(Some(ClearingSolution::new(
        instance,
        ClearingMode::FixedCommitment,
        opt.primal,
        Some(duals),
    )))
}
