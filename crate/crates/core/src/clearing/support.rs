use super::{ClearError, ClearingMode, Duals, Primal};
use crate::formulation::{add_ramping, build_marketclearing_mpc, build_uwelfare, FormulationConfig, Variant};
use crate::market::{Instance, Layout};
use crate::model::{RowKey, Sense, Symbol};
use crate::solver::{Backend, SolveOptions, SolveStatus};

/// Outcome of searching for prices that support a fixed primal point.
#[derive(Debug, Clone)]
pub struct PriceSupport {
    pub supported: bool,
    /// Smallest dual objective `sum s_i + sum s_c + sum w v` over every dual
    /// point meeting the conditions; `+inf` when no such point exists.
    pub dual_objective: f64,
    /// Welfare of the primal point under the mode's objective.
    pub welfare: f64,
    pub duals: Option<Duals>,
}

/// Searches for dual values under which `primal` satisfies every condition of
/// `mode` (MPC or MIC): dual rows, price bounds, no shadow cost of acceptance
/// and, in MIC mode, the income rows.
///
/// By weak duality the minimal dual objective is never below the optimal
/// welfare for these commitments, so the point is supported exactly when that
/// minimum does not exceed the point's welfare; `tol` is relative to
/// `max(1, |welfare|)`. A degenerate LP may have many dual solutions, and this
/// searches all of them rather than trusting one vertex.
pub fn price_support(
    instance: &Instance,
    primal: &Primal,
    mode: ClearingMode,
    backend: &dyn Backend,
    options: &SolveOptions,
    tol: f64,
) -> Result<PriceSupport, ClearError> {
    let variant = match mode {
        ClearingMode::Mpc => Variant::Mpc,
        ClearingMode::Mic => Variant::Mic,
        other => return Err(ClearError::UnsupportedMode(other)),
    };
    let config = FormulationConfig::new(variant).ramping_for(instance);
    let mut h = build_marketclearing_mpc(instance, &config)?;
    let welfare = primal.welfare(instance, mode);

    let fixed: Vec<_> = h
        .symbols()
        .filter_map(|(s, col)| {
            let v = match s {
                Symbol::HourlyAcceptance(i) => primal.x_hourly[i],
                Symbol::SubBidAcceptance(c, k) => primal.x_sub[c][k],
                Symbol::Commitment(c) => f64::from(u8::from(primal.u[c])),
                Symbol::Export(k) => primal.n[k],
                _ => return None,
            };
            Some((col, v))
        })
        .collect();
    for (col, v) in fixed {
        h.model.set_bounds(col, v, v);
    }
    // Rows over primal columns only are constants now.
    let primal_rows: Vec<_> = h
        .row_keys()
        .filter(|(k, _)| {
            matches!(
                k,
                RowKey::HourlyCap(_)
                    | RowKey::SubBidMax(..)
                    | RowKey::SubBidMin(..)
                    | RowKey::CommitCap(_)
                    | RowKey::Balance(..)
                    | RowKey::ResourceCap(_)
                    | RowKey::RampUp(..)
                    | RowKey::RampDown(..)
                    | RowKey::StrongDuality
            )
        })
        .map(|(_, r)| r)
        .collect();
    for r in primal_rows {
        h.model.rows[r.0].lower = f64::NEG_INFINITY;
        h.model.rows[r.0].upper = f64::INFINITY;
    }
    h.model.relax_integrality();
    h.model.sense = Sense::Minimize;
    for c in &mut h.model.columns {
        c.cost = 0.0;
    }
    let costs: Vec<_> = h
        .symbols()
        .filter_map(|(s, col)| match s {
            Symbol::HourlySurplus(_) | Symbol::BidSurplus(_) => Some((col, 1.0)),
            Symbol::ResourcePrice(m) => Some((col, instance.network.resources[m].capacity)),
            _ => None,
        })
        .collect();
    for (col, w) in costs {
        h.model.columns[col.0].cost = w;
    }

    let r = backend.solve(&h.model, options)?;
    match r.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Ok(PriceSupport {
                supported: false,
                dual_objective: f64::INFINITY,
                welfare,
                duals: None,
            })
        }
        other => {
            return Err(ClearError::Numerical(format!(
                "price-support LP ended with status {other:?}"
            )))
        }
    }
    let layout = Layout::new(instance)?;
    let duals = Duals::from_columns(instance, &layout, &h, &r.primal, primal, mode);
    Ok(PriceSupport {
        supported: r.objective <= welfare + tol * welfare.abs().max(1.0),
        dual_objective: r.objective,
        welfare,
        duals: Some(duals),
    })
}

/// Optimum of the worker program for a commitment vector.
#[derive(Debug, Clone)]
pub struct WorkerOptimum {
    /// Welfare minus the price-bound penalty on nodal imbalances.
    pub objective: f64,
    pub primal: Primal,
    /// Relaxed commitments; zero wherever the tested vector rejects a bid.
    pub u: Vec<f64>,
    /// Total absolute nodal imbalance.
    pub imbalance: f64,
}

/// Maximizes welfare over the continuous relaxation of the primal rows with
/// commitments forced to zero wherever `u_star` rejects a bid.
///
/// Each nodal balance may be violated at a cost of the price bound per MW.
/// This is the exact Farkas counterpart of bounding prices to
/// `[-price_bound, price_bound]`: its optimum equals the smallest dual
/// objective over price-bounded supporting duals.
pub fn worker_program(
    instance: &Instance,
    u_star: &[bool],
    backend: &dyn Backend,
    options: &SolveOptions,
) -> Result<WorkerOptimum, ClearError> {
    let mut h = build_uwelfare(instance, None)?;
    if instance.mp_bids.iter().any(|c| c.ramp.is_some()) {
        add_ramping(&mut h, instance)?;
    }
    h.model.relax_integrality();
    for (c, &accepted) in u_star.iter().enumerate() {
        if !accepted {
            let col = h.col(Symbol::Commitment(c)).expect("commitment registered");
            h.model.set_bounds(col, 0.0, 0.0);
        }
    }
    let layout = Layout::new(instance)?;
    let pb = instance.price_bound;
    let mut slack_cols = Vec::new();
    for node in layout.nodes() {
        let row = h
            .row_id(RowKey::Balance(node.location, node.period))
            .expect("balance registered");
        let s = h.var(Symbol::ExcessSupply(node.location, node.period), 0.0, f64::INFINITY, -pb);
        let d = h.var(Symbol::ExcessDemand(node.location, node.period), 0.0, f64::INFINITY, -pb);
        h.model.add_term(row, s, 1.0);
        h.model.add_term(row, d, -1.0);
        slack_cols.push(s);
        slack_cols.push(d);
    }
    let r = backend.solve(&h.model, options)?;
    if r.status != SolveStatus::Optimal {
        return Err(ClearError::Numerical(format!(
            "worker program ended with status {:?}",
            r.status
        )));
    }
    let u = (0..instance.mp_bids.len())
        .map(|c| h.value(&r.primal, Symbol::Commitment(c)))
        .collect();
    Ok(WorkerOptimum {
        objective: r.objective,
        primal: Primal::from_values(instance, &h, &r.primal),
        u,
        imbalance: slack_cols.iter().map(|c| r.primal[c.0]).sum(),
    })
}
