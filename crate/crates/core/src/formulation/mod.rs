//! Model builders: the welfare program (optionally with fixed commitments), the
//! uniform-market feasible set with shadow costs, MarketClearing-MPC and its
//! minimum-income variant, plus ramping rows.
//!
//! Every primal inequality is stored as a `<=` row (or an equality), so that the
//! shadow prices a backend reports for a maximization are exactly the
//! non-negative dual variables attached to the rows. The balance row at
//! `(l, t)` is written `sum Q x - sum e n = 0` and its shadow price is the
//! market price.

mod ramping;

pub use ramping::add_ramping;

use crate::market::{Instance, InstanceError, Layout, MpBid};
use crate::model::{ColId, ModelHandle, RowKey, Sense, Symbol};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    /// Welfare maximization with binary commitments and no price conditions.
    Uwelfare,
    /// Welfare LP with every commitment fixed.
    UwelfareFixedU,
    /// Primal–dual feasible set with acceptance/rejection shadow costs.
    Umfs,
    /// Primal–dual MILP enforcing every MP condition.
    Mpc,
    /// MPC with fixed costs removed from the welfare and a minimum-income row.
    Mic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulationConfig {
    pub variant: Variant,
    pub ramping: bool,
    /// Bound every price to `[-price_bound, price_bound]`.
    pub price_bound_rows: bool,
    pub feasibility_tol: f64,
    /// Per-MP-bid replacement for the computed big-M.
    pub big_m_override: Option<Vec<f64>>,
    /// Commitments for [`Variant::UwelfareFixedU`].
    pub fixed_u: Option<Vec<bool>>,
}

impl FormulationConfig {
    pub fn new(variant: Variant) -> Self {
        FormulationConfig {
            variant,
            ramping: false,
            price_bound_rows: matches!(variant, Variant::Umfs | Variant::Mpc | Variant::Mic),
            feasibility_tol: 1e-6,
            big_m_override: None,
            fixed_u: None,
        }
    }

    pub fn with_ramping(mut self, ramping: bool) -> Self {
        self.ramping = ramping;
        self
    }

    /// Turns on ramping exactly when some MP bid carries ramp limits.
    pub fn ramping_for(mut self, instance: &Instance) -> Self {
        self.ramping = instance.mp_bids.iter().any(|c| c.ramp.is_some());
        self
    }
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("variant {0:?} needs a commitment vector")]
    MissingCommitments(Variant),
    #[error("commitment vector has {got} entries for {expected} MP bids")]
    CommitmentLength { expected: usize, got: usize },
    #[error("MIC variant needs income data on MP bid '{0}'")]
    MissingMicData(String),
    #[error("big-M override has {got} entries for {expected} MP bids")]
    BigMLength { expected: usize, got: usize },
    #[error("ramp limits on buy-side MP bid '{0}'")]
    RampOnBuyBid(String),
    #[error("ramping rows already present")]
    RampingTwice,
    #[error("variant {0:?} is not built by this function")]
    WrongVariant(Variant),
}

/// Upper bound on the loss and on the missed surplus of `bid` at any prices in
/// `[-price_bound, price_bound]`: `sum |Q| (price_bound + |P|) + F`.
pub fn compute_big_m(bid: &MpBid, price_bound: f64) -> f64 {
    bid.sub_bids
        .iter()
        .map(|h| h.quantity.abs() * (price_bound + h.price.abs()))
        .sum::<f64>()
        + bid.fixed_cost
}

fn big_ms(instance: &Instance, config: &FormulationConfig) -> Result<Vec<f64>, FormulationError> {
    let n = instance.mp_bids.len();
    match &config.big_m_override {
        Some(v) if v.len() != n => Err(FormulationError::BigMLength {
            expected: n,
            got: v.len(),
        }),
        Some(v) => Ok(v.clone()),
        None => Ok(instance
            .mp_bids
            .iter()
            .map(|c| compute_big_m(c, instance.price_bound))
            .collect()),
    }
}

/// How the commitment columns are declared in the primal block.
#[derive(Debug, Clone, Copy)]
enum Commitments<'a> {
    Binary,
    Fixed(&'a [bool]),
}

/// Adds `x_i, x_hc, u_c, n_k` with rows for acceptance caps, minimum ratios,
/// nodal balances and resources. `fixed_cost` multiplies `F_c` in the objective.
fn add_primal(
    h: &mut ModelHandle,
    instance: &Instance,
    layout: &Layout,
    commitments: Commitments,
    with_fixed_cost: bool,
) {
    let mut balance: Vec<Vec<(ColId, f64)>> = vec![Vec::new(); layout.n_locations * layout.n_periods];

    for (i, bid) in instance.hourly_bids.iter().enumerate() {
        let x = h.var(Symbol::HourlyAcceptance(i), 0.0, INF, bid.price * bid.quantity);
        h.row(RowKey::HourlyCap(i), -INF, 1.0, vec![(x, 1.0)]);
        balance[layout.node_index(layout.hourly[i])].push((x, bid.quantity));
    }

    for (c, bid) in instance.mp_bids.iter().enumerate() {
        let cost = if with_fixed_cost { -bid.fixed_cost } else { 0.0 };
        let u = match commitments {
            Commitments::Binary => h.int_var(Symbol::Commitment(c), 0.0, INF, cost),
            Commitments::Fixed(_) => h.var(Symbol::Commitment(c), 0.0, INF, cost),
        };
        for (k, step) in bid.sub_bids.iter().enumerate() {
            // Non-negativity and the cap of x_hc follow from the two rows below.
            let x = h.var(Symbol::SubBidAcceptance(c, k), -INF, INF, step.price * step.quantity);
            h.row(RowKey::SubBidMax(c, k), -INF, 0.0, vec![(x, 1.0), (u, -1.0)]);
            h.row(
                RowKey::SubBidMin(c, k),
                -INF,
                0.0,
                vec![(x, -1.0), (u, step.min_ratio)],
            );
            balance[layout.node_index(layout.sub_bids[c][k])].push((x, step.quantity));
        }
        h.row(RowKey::CommitCap(c), -INF, 1.0, vec![(u, 1.0)]);
        if let Commitments::Fixed(fixed) = commitments {
            if fixed[c] {
                h.row(RowKey::FixAccepted(c), -INF, -1.0, vec![(u, -1.0)]);
            } else {
                h.row(RowKey::FixRejected(c), -INF, 0.0, vec![(u, 1.0)]);
            }
        }
    }

    for (k, terms) in layout.exports.iter().enumerate() {
        let n = h.var(Symbol::Export(k), -INF, INF, 0.0);
        for (node, e) in terms {
            balance[layout.node_index(*node)].push((n, -e));
        }
    }
    for node in layout.nodes() {
        let terms = std::mem::take(&mut balance[layout.node_index(node)]);
        h.row(RowKey::Balance(node.location, node.period), 0.0, 0.0, terms);
    }
    for (m, terms) in layout.resources.iter().enumerate() {
        let row: Vec<(ColId, f64)> = terms
            .iter()
            .map(|(k, a)| (h.col(Symbol::Export(*k)).expect("export registered"), *a))
            .collect();
        h.row(
            RowKey::ResourceCap(m),
            -INF,
            instance.network.resources[m].capacity,
            row,
        );
    }
}

/// UWELFARE. Without `fixed_u` this is a MILP with binary commitments; with it,
/// an LP whose shadow prices give the dual solution (prices, surpluses, shadow
/// costs of acceptance on `FixAccepted` rows and of rejection on `FixRejected`).
pub fn build_uwelfare(
    instance: &Instance,
    fixed_u: Option<&[bool]>,
) -> Result<ModelHandle, FormulationError> {
    let layout = Layout::new(instance)?;
    if let Some(u) = fixed_u {
        if u.len() != instance.mp_bids.len() {
            return Err(FormulationError::CommitmentLength {
                expected: instance.mp_bids.len(),
                got: u.len(),
            });
        }
    }
    let mut h = ModelHandle::new(Sense::Maximize);
    let commitments = match fixed_u {
        Some(u) => Commitments::Fixed(u),
        None => Commitments::Binary,
    };
    add_primal(&mut h, instance, &layout, commitments, true);
    Ok(h)
}

/// Builds any variant from a configuration, adding ramping rows when asked.
pub fn build(instance: &Instance, config: &FormulationConfig) -> Result<ModelHandle, FormulationError> {
    let mut h = match config.variant {
        Variant::Uwelfare => build_uwelfare(instance, None)?,
        Variant::UwelfareFixedU => {
            let u = config
                .fixed_u
                .as_deref()
                .ok_or(FormulationError::MissingCommitments(Variant::UwelfareFixedU))?;
            build_uwelfare(instance, Some(u))?
        }
        Variant::Umfs | Variant::Mpc | Variant::Mic => {
            return build_marketclearing_mpc(instance, config);
        }
    };
    if config.ramping {
        add_ramping(&mut h, instance)?;
    }
    Ok(h)
}

/// MarketClearing-MPC and its UMFS / MIC siblings: primal rows, dual rows, a
/// strong-duality row tying primal welfare to the dual objective, and the
/// variant-specific linking rows. Ramping rows are added when `config.ramping`.
pub fn build_marketclearing_mpc(
    instance: &Instance,
    config: &FormulationConfig,
) -> Result<ModelHandle, FormulationError> {
    let variant = config.variant;
    if !matches!(variant, Variant::Umfs | Variant::Mpc | Variant::Mic) {
        return Err(FormulationError::WrongVariant(variant));
    }
    if variant == Variant::Mic {
        if let Some(c) = instance.mp_bids.iter().find(|c| c.mic.is_none()) {
            return Err(FormulationError::MissingMicData(c.id.clone()));
        }
    }
    let layout = Layout::new(instance)?;
    let big_m = big_ms(instance, config)?;
    let with_fixed_cost = variant != Variant::Mic;
    let fixed_cost = |c: &MpBid| if with_fixed_cost { c.fixed_cost } else { 0.0 };

    let mut h = ModelHandle::new(Sense::Maximize);
    add_primal(&mut h, instance, &layout, Commitments::Binary, with_fixed_cost);

    let pb = instance.price_bound;
    let (plo, phi) = if config.price_bound_rows { (-pb, pb) } else { (-INF, INF) };
    for node in layout.nodes() {
        h.var(Symbol::Price(node.location, node.period), plo, phi, 0.0);
    }
    let price = |h: &ModelHandle, node: crate::market::Node| {
        h.col(Symbol::Price(node.location, node.period)).expect("price registered")
    };

    // Strong duality: welfare - (dual objective) >= 0.
    let mut duality: Vec<(ColId, f64)> = Vec::new();
    for (col, c) in h.model.columns.iter().enumerate() {
        if c.cost != 0.0 {
            duality.push((ColId(col), c.cost));
        }
    }

    for (i, bid) in instance.hourly_bids.iter().enumerate() {
        let s = h.var(Symbol::HourlySurplus(i), 0.0, INF, 0.0);
        let p = price(&h, layout.hourly[i]);
        h.row(
            RowKey::HourlyDual(i),
            bid.quantity * bid.price,
            INF,
            vec![(s, 1.0), (p, bid.quantity)],
        );
        duality.push((s, -1.0));
    }

    for (c, bid) in instance.mp_bids.iter().enumerate() {
        let mut commit_terms = Vec::new();
        for (k, step) in bid.sub_bids.iter().enumerate() {
            let smax = h.var(Symbol::SubBidMaxSurplus(c, k), 0.0, INF, 0.0);
            let smin = h.var(Symbol::SubBidMinSurplus(c, k), 0.0, INF, 0.0);
            let p = price(&h, layout.sub_bids[c][k]);
            let qp = step.quantity * step.price;
            h.row(
                RowKey::SubBidDual(c, k),
                qp,
                qp,
                vec![(smax, 1.0), (smin, -1.0), (p, step.quantity)],
            );
            commit_terms.push((smax, -1.0));
            commit_terms.push((smin, step.min_ratio));
        }
        let s_c = h.var(Symbol::BidSurplus(c), 0.0, INF, 0.0);
        duality.push((s_c, -1.0));
        let u = h.col(Symbol::Commitment(c)).expect("commitment registered");
        commit_terms.push((s_c, 1.0));
        let f = fixed_cost(bid);
        match variant {
            Variant::Umfs => {
                let dur = h.var(Symbol::RejectionCost(c), 0.0, INF, 0.0);
                let dua = h.var(Symbol::AcceptanceCost(c), 0.0, INF, 0.0);
                commit_terms.push((dur, 1.0));
                commit_terms.push((dua, -1.0));
                h.row(RowKey::CommitDual(c), -f, INF, commit_terms);
                h.row(
                    RowKey::RejectionDeactivation(c),
                    -INF,
                    big_m[c],
                    vec![(dur, 1.0), (u, big_m[c])],
                );
                h.row(
                    RowKey::AcceptanceDeactivation(c),
                    -INF,
                    0.0,
                    vec![(dua, 1.0), (u, -big_m[c])],
                );
                duality.push((dua, 1.0));
            }
            Variant::Mpc | Variant::Mic => {
                // s_c >= sum(s_max - r s_min) - F - M (1 - u)
                commit_terms.push((u, -big_m[c]));
                h.row(RowKey::CommitDual(c), -f - big_m[c], INF, commit_terms);
            }
            _ => unreachable!(),
        }
        if variant == Variant::Mic {
            // s_c - sum Q P x + sum Q V x - F~ u >= 0, the income condition with
            // its big-M equal to the start-up cost.
            let mic = bid.mic.expect("checked above");
            let mut terms = vec![(s_c, 1.0), (u, -mic.startup_cost)];
            for (k, step) in bid.sub_bids.iter().enumerate() {
                let x = h.col(Symbol::SubBidAcceptance(c, k)).expect("x registered");
                terms.push((x, step.quantity * (mic.variable_cost - step.price)));
            }
            h.row(RowKey::MinIncome(c), 0.0, INF, terms);
        }
    }

    for m in 0..layout.resources.len() {
        let v = h.var(Symbol::ResourcePrice(m), 0.0, INF, 0.0);
        duality.push((v, -instance.network.resources[m].capacity));
    }
    for (k, terms) in layout.exports.iter().enumerate() {
        let mut row = Vec::new();
        for (m, res) in layout.resources.iter().enumerate() {
            for (kk, a) in res {
                if *kk == k {
                    row.push((h.col(Symbol::ResourcePrice(m)).expect("v registered"), *a));
                }
            }
        }
        for (node, e) in terms {
            row.push((price(&h, *node), -e));
        }
        h.row(RowKey::ExportDual(k), 0.0, 0.0, row);
    }
    h.row(RowKey::StrongDuality, 0.0, INF, duality);

    if config.ramping {
        add_ramping(&mut h, instance)?;
    }
    Ok(h)
}

/// Welfare `sum P Q x - sum F u` of a primal point given as model values.
pub fn welfare(instance: &Instance, h: &ModelHandle, values: &[f64], with_fixed_cost: bool) -> f64 {
    let mut w = 0.0;
    for (i, bid) in instance.hourly_bids.iter().enumerate() {
        w += bid.price * bid.quantity * h.value(values, Symbol::HourlyAcceptance(i));
    }
    for (c, bid) in instance.mp_bids.iter().enumerate() {
        for (k, step) in bid.sub_bids.iter().enumerate() {
            w += step.price * step.quantity * h.value(values, Symbol::SubBidAcceptance(c, k));
        }
        if with_fixed_cost {
            w -= bid.fixed_cost * h.value(values, Symbol::Commitment(c));
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::toy_instance;

    #[test]
    fn big_m_examples() {
        let toy = toy_instance();
        assert_eq!(compute_big_m(&toy.mp_bids[0], 100.0), 1200.0);
        assert_eq!(compute_big_m(&toy.mp_bids[1], 100.0), 1300.0);
        let mut unit = toy.mp_bids[0].clone();
        unit.sub_bids[0].quantity = -1.0;
        unit.sub_bids[0].price = 0.0;
        unit.fixed_cost = 0.0;
        assert_eq!(compute_big_m(&unit, 1.0), 1.0);
    }

    #[test]
    fn big_m_override_is_used() {
        let toy = toy_instance();
        let mut cfg = FormulationConfig::new(Variant::Mpc);
        cfg.big_m_override = Some(vec![5.0, 6.0]);
        assert_eq!(big_ms(&toy, &cfg).unwrap(), vec![5.0, 6.0]);
        cfg.big_m_override = Some(vec![5.0]);
        assert!(matches!(big_ms(&toy, &cfg), Err(FormulationError::BigMLength { .. })));
    }

    #[test]
    fn toy_mpc_census() {
        let h = build_marketclearing_mpc(&toy_instance(), &FormulationConfig::new(Variant::Mpc)).unwrap();
        assert_eq!(h.model.num_integer(), 2);
        let count = |f: fn(&Symbol) -> bool| h.count(f);
        assert_eq!(count(|s| matches!(s, Symbol::Commitment(_))), 2);
        assert_eq!(count(|s| matches!(s, Symbol::HourlyAcceptance(_))), 2);
        assert_eq!(count(|s| matches!(s, Symbol::SubBidAcceptance(..))), 2);
        assert_eq!(count(|s| matches!(s, Symbol::Price(..))), 1);
        assert_eq!(count(|s| matches!(s, Symbol::HourlySurplus(_))), 2);
        assert_eq!(count(|s| matches!(s, Symbol::SubBidMaxSurplus(..))), 2);
        assert_eq!(count(|s| matches!(s, Symbol::SubBidMinSurplus(..))), 2);
        assert_eq!(count(|s| matches!(s, Symbol::BidSurplus(_))), 2);
        assert_eq!(count(|s| matches!(s, Symbol::ResourcePrice(_) | Symbol::Export(_))), 0);
        assert_eq!(count(|s| matches!(s, Symbol::AcceptanceCost(_) | Symbol::RejectionCost(_))), 0);
        assert_eq!(h.model.columns.len(), 15);
        let p = h.model.column(h.col(Symbol::Price(0, 0)).unwrap());
        assert_eq!((p.lower, p.upper), (-3000.0, 3000.0));
    }

    #[test]
    fn toy_mic_structure() {
        let h = build_marketclearing_mpc(&toy_instance(), &FormulationConfig::new(Variant::Mic)).unwrap();
        for c in 0..2 {
            let u = h.col(Symbol::Commitment(c)).unwrap();
            assert_eq!(h.model.column(u).cost, 0.0);
            let row = h.model.row(h.row_id(RowKey::MinIncome(c)).unwrap());
            let fixed = [100.0, 200.0][c];
            assert!(row.terms.contains(&(u, -fixed)));
        }
        assert_eq!(h.count_rows(|k| matches!(k, RowKey::MinIncome(_))), 2);
        let sd = h.model.row(h.row_id(RowKey::StrongDuality).unwrap());
        for c in 0..2 {
            let u = h.col(Symbol::Commitment(c)).unwrap();
            assert!(sd.terms.iter().all(|(col, _)| *col != u));
        }
    }

    #[test]
    fn mic_without_data_is_rejected() {
        let mut toy = toy_instance();
        toy.mp_bids[1].mic = None;
        let err = build_marketclearing_mpc(&toy, &FormulationConfig::new(Variant::Mic)).unwrap_err();
        assert!(matches!(err, FormulationError::MissingMicData(id) if id == "MP2"));
    }

    #[test]
    fn toy_umfs_structure() {
        let h = build_marketclearing_mpc(&toy_instance(), &FormulationConfig::new(Variant::Umfs)).unwrap();
        assert_eq!(h.count(|s| matches!(s, Symbol::AcceptanceCost(_))), 2);
        assert_eq!(h.count(|s| matches!(s, Symbol::RejectionCost(_))), 2);
        assert_eq!(
            h.count_rows(|k| matches!(
                k,
                RowKey::AcceptanceDeactivation(_) | RowKey::RejectionDeactivation(_)
            )),
            4
        );
    }

    #[test]
    fn fixed_u_rows_follow_commitments() {
        let h = build_uwelfare(&toy_instance(), Some(&[true, false])).unwrap();
        assert!(!h.model.is_mip());
        assert!(h.row_id(RowKey::FixAccepted(0)).is_some());
        assert!(h.row_id(RowKey::FixRejected(1)).is_some());
        assert!(h.row_id(RowKey::FixAccepted(1)).is_none());
        assert!(matches!(
            build_uwelfare(&toy_instance(), Some(&[true])),
            Err(FormulationError::CommitmentLength { .. })
        ));
    }
}
