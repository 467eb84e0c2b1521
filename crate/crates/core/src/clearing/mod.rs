//! Cleared outcomes and the paths that produce them.

mod clear;
mod support;

pub use clear::{
    clear, clear_fixed_commitments, fixed_commitment_optimum, ClearError, ClearOptions, Cleared,
    FixedOptimum,
};
pub use support::{price_support, worker_program, PriceSupport, WorkerOptimum};

use crate::market::{Instance, Layout};
use crate::model::{ModelHandle, RowKey, Symbol};
use crate::solver::SolveResult;
use serde::{Deserialize, Serialize};

/// Which objective and which conditions a solution was cleared under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClearingMode {
    /// Welfare net of fixed costs, every MP condition enforced.
    Mpc,
    /// Welfare without fixed costs, minimum-income conditions enforced.
    Mic,
    /// Welfare net of fixed costs over the primal–dual set with shadow costs.
    Umfs,
    /// Commitments imposed from outside, duals from the fixed-commitment LP.
    FixedCommitment,
}

impl ClearingMode {
    /// Whether `F_c` enters the welfare objective and the dual rows.
    pub fn charges_fixed_costs(self) -> bool {
        self != ClearingMode::Mic
    }
}

/// Primal decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primal {
    pub x_hourly: Vec<f64>,
    /// `[c][h]`.
    pub x_sub: Vec<Vec<f64>>,
    pub u: Vec<bool>,
    pub n: Vec<f64>,
}

/// Dual values. Node-indexed vectors are `[location][period]`, ramp prices
/// are `[c][t]` over consecutive period pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Duals {
    pub prices: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub s_hourly: Vec<f64>,
    pub s_max: Vec<Vec<f64>>,
    pub s_min: Vec<Vec<f64>>,
    pub s_bid: Vec<f64>,
    pub du_accept: Vec<f64>,
    pub du_reject: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_up: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_down: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingSolution {
    pub mode: ClearingMode,
    pub primal: Primal,
    /// Missing only for outcomes that never carried prices.
    pub duals: Option<Duals>,
    /// Objective of the clearing mode: net of fixed costs except in MIC mode.
    pub welfare: f64,
    /// `sum P Q x`, before any fixed cost.
    pub gross_welfare: f64,
}

impl Primal {
    pub fn from_values(instance: &Instance, h: &ModelHandle, values: &[f64]) -> Self {
        let n_exports = instance.network.export_vars.len();
        Primal {
            x_hourly: (0..instance.hourly_bids.len())
                .map(|i| h.value(values, Symbol::HourlyAcceptance(i)))
                .collect(),
            x_sub: instance
                .mp_bids
                .iter()
                .enumerate()
                .map(|(c, b)| {
                    (0..b.sub_bids.len())
                        .map(|k| h.value(values, Symbol::SubBidAcceptance(c, k)))
                        .collect()
                })
                .collect(),
            u: (0..instance.mp_bids.len())
                .map(|c| h.value(values, Symbol::Commitment(c)) > 0.5)
                .collect(),
            n: (0..n_exports).map(|k| h.value(values, Symbol::Export(k))).collect(),
        }
    }

    /// `sum P Q x` over hourly and MP steps.
    pub fn gross_welfare(&self, instance: &Instance) -> f64 {
        let hourly: f64 = instance
            .hourly_bids
            .iter()
            .zip(&self.x_hourly)
            .map(|(b, x)| b.price * b.quantity * x)
            .sum();
        let sub: f64 = instance
            .mp_bids
            .iter()
            .zip(&self.x_sub)
            .flat_map(|(c, xs)| c.sub_bids.iter().zip(xs).map(|(s, x)| s.price * s.quantity * x))
            .sum();
        hourly + sub
    }

    pub fn fixed_costs(&self, instance: &Instance) -> f64 {
        instance
            .mp_bids
            .iter()
            .zip(&self.u)
            .filter(|(_, &u)| u)
            .map(|(c, _)| c.fixed_cost)
            .sum()
    }

    pub fn welfare(&self, instance: &Instance, mode: ClearingMode) -> f64 {
        let gross = self.gross_welfare(instance);
        if mode.charges_fixed_costs() {
            gross - self.fixed_costs(instance)
        } else {
            gross
        }
    }
}

/// Right-hand side of the commitment dual row,
/// `sum (s_max - r s_min) + sum_t (RU g_up + RD g_down) - F`.
pub fn commitment_rhs(instance: &Instance, duals: &Duals, c: usize, mode: ClearingMode) -> f64 {
    let bid = &instance.mp_bids[c];
    let mut rhs: f64 = bid
        .sub_bids
        .iter()
        .enumerate()
        .map(|(k, s)| duals.s_max[c][k] - s.min_ratio * duals.s_min[c][k])
        .sum();
    if let (Some(ramp), Some(gu), Some(gd)) = (bid.ramp, &duals.g_up, &duals.g_down) {
        rhs += gu[c].iter().map(|g| ramp.ru * g).sum::<f64>();
        rhs += gd[c].iter().map(|g| ramp.rd * g).sum::<f64>();
    }
    if mode.charges_fixed_costs() {
        rhs -= bid.fixed_cost;
    }
    rhs
}

fn node_matrix(layout: &Layout, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..layout.n_locations)
        .map(|l| (0..layout.n_periods).map(|t| f(l, t)).collect())
        .collect()
}

fn ramp_matrix(
    instance: &Instance,
    layout: &Layout,
    present: bool,
    f: impl Fn(usize, usize) -> f64,
) -> Option<Vec<Vec<f64>>> {
    present.then(|| {
        instance
            .mp_bids
            .iter()
            .enumerate()
            .map(|(c, b)| match b.ramp {
                Some(_) => (0..layout.n_periods.saturating_sub(1)).map(|t| f(c, t)).collect(),
                None => Vec::new(),
            })
            .collect()
    })
}

impl Duals {
    /// Reads dual-side columns of a primal–dual model. Shadow costs absent from
    /// the model are zero for acceptance and, for rejection, the smallest value
    /// satisfying the commitment dual row.
    pub fn from_columns(
        instance: &Instance,
        layout: &Layout,
        h: &ModelHandle,
        values: &[f64],
        primal: &Primal,
        mode: ClearingMode,
    ) -> Self {
        let has_ramp = h.row_keys().any(|(k, _)| matches!(k, RowKey::RampUp(..)));
        let mut d = Duals {
            prices: node_matrix(layout, |l, t| h.value(values, Symbol::Price(l, t))),
            v: (0..layout.resources.len())
                .map(|m| h.value(values, Symbol::ResourcePrice(m)))
                .collect(),
            s_hourly: (0..instance.hourly_bids.len())
                .map(|i| h.value(values, Symbol::HourlySurplus(i)))
                .collect(),
            s_max: per_step(instance, |c, k| h.value(values, Symbol::SubBidMaxSurplus(c, k))),
            s_min: per_step(instance, |c, k| h.value(values, Symbol::SubBidMinSurplus(c, k))),
            s_bid: (0..instance.mp_bids.len())
                .map(|c| h.value(values, Symbol::BidSurplus(c)))
                .collect(),
            du_accept: (0..instance.mp_bids.len())
                .map(|c| h.value(values, Symbol::AcceptanceCost(c)))
                .collect(),
            du_reject: vec![0.0; instance.mp_bids.len()],
            g_up: ramp_matrix(instance, layout, has_ramp, |c, t| {
                h.value(values, Symbol::RampUpPrice(c, t))
            }),
            g_down: ramp_matrix(instance, layout, has_ramp, |c, t| {
                h.value(values, Symbol::RampDownPrice(c, t))
            }),
        };
        let explicit = h.col(Symbol::RejectionCost(0)).is_some();
        for c in 0..instance.mp_bids.len() {
            d.du_reject[c] = if explicit {
                h.value(values, Symbol::RejectionCost(c))
            } else if primal.u[c] {
                0.0
            } else {
                (commitment_rhs(instance, &d, c, mode) - d.s_bid[c]).max(0.0)
            };
        }
        d
    }

    /// Reads the shadow prices of a fixed-commitment LP.
    pub fn from_row_duals(instance: &Instance, layout: &Layout, h: &ModelHandle, result: &SolveResult) -> Self {
        let dual = |key: RowKey| h.row_id(key).and_then(|r| result.dual(r)).unwrap_or(0.0);
        let has_ramp = h.row_keys().any(|(k, _)| matches!(k, RowKey::RampUp(..)));
        Duals {
            prices: node_matrix(layout, |l, t| dual(RowKey::Balance(l, t))),
            v: (0..layout.resources.len()).map(|m| dual(RowKey::ResourceCap(m))).collect(),
            s_hourly: (0..instance.hourly_bids.len())
                .map(|i| dual(RowKey::HourlyCap(i)))
                .collect(),
            s_max: per_step(instance, |c, k| dual(RowKey::SubBidMax(c, k))),
            s_min: per_step(instance, |c, k| dual(RowKey::SubBidMin(c, k))),
            s_bid: (0..instance.mp_bids.len())
                .map(|c| dual(RowKey::CommitCap(c)))
                .collect(),
            du_accept: (0..instance.mp_bids.len())
                .map(|c| dual(RowKey::FixAccepted(c)))
                .collect(),
            du_reject: (0..instance.mp_bids.len())
                .map(|c| dual(RowKey::FixRejected(c)))
                .collect(),
            g_up: ramp_matrix(instance, layout, has_ramp, |c, t| dual(RowKey::RampUp(c, t))),
            g_down: ramp_matrix(instance, layout, has_ramp, |c, t| dual(RowKey::RampDown(c, t))),
        }
    }

    pub fn price(&self, node: crate::market::Node) -> f64 {
        self.prices[node.location][node.period]
    }
}

fn per_step(instance: &Instance, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    instance
        .mp_bids
        .iter()
        .enumerate()
        .map(|(c, b)| (0..b.sub_bids.len()).map(|k| f(c, k)).collect())
        .collect()
}

impl ClearingSolution {
    pub fn new(instance: &Instance, mode: ClearingMode, primal: Primal, duals: Option<Duals>) -> Self {
        let gross_welfare = primal.gross_welfare(instance);
        let welfare = primal.welfare(instance, mode);
        ClearingSolution {
            mode,
            primal,
            duals,
            welfare,
            gross_welfare,
        }
    }

    /// Price at `(location, period)` positions, if the solution carries duals.
    pub fn price(&self, location: usize, period: usize) -> Option<f64> {
        self.duals.as_ref().map(|d| d.prices[location][period])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("solution serialization is infallible")
    }
}
