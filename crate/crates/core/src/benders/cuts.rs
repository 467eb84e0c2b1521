use super::{BendersError, WorkerOutcome};
use crate::clearing::Primal;
use crate::market::Instance;
use crate::model::{ModelHandle, Symbol};
use crate::solver::LazyCut;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    /// `W(x,u) >= W# - sum M_c u#_c (1 - u_c)`.
    Classical,
    /// Excludes exactly the tested commitment vector.
    NoGood,
    /// `sum_{accepted} (1 - u_c) >= 1`, valid everywhere when generated at a
    /// master optimum.
    StrengthenedGlobal,
    /// Same row, valid only below the branch-and-bound node that produced it.
    StrengthenedLocal,
}

/// Where the rejected incumbent came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutOrigin {
    /// Optimal solution of the master program.
    MasterOptimum,
    /// Integer point met at a branch-and-bound node.
    NodeIncumbent,
}

/// A Benders cut as `sum coef * symbol >= lower` over master columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub kind: CutKind,
    pub origin: CutOrigin,
    /// Commitments accepted and rejected by the incumbent that was cut off.
    pub accepted: Vec<usize>,
    pub rejected: Vec<usize>,
    pub terms: Vec<(Symbol, f64)>,
    pub lower: f64,
}

impl CutRecord {
    pub fn is_global(&self) -> bool {
        self.kind != CutKind::StrengthenedLocal
    }

    pub fn activity(&self, primal: &Primal) -> f64 {
        self.terms
            .iter()
            .map(|&(s, a)| {
                a * match s {
                    Symbol::HourlyAcceptance(i) => primal.x_hourly[i],
                    Symbol::SubBidAcceptance(c, k) => primal.x_sub[c][k],
                    Symbol::Commitment(c) => f64::from(u8::from(primal.u[c])),
                    Symbol::Export(k) => primal.n[k],
                    _ => 0.0,
                }
            })
            .sum()
    }

    /// Amount by which `primal` violates the cut; zero when satisfied.
    pub fn violation(&self, _instance: &Instance, primal: &Primal) -> f64 {
        (self.lower - self.activity(primal)).max(0.0)
    }

    /// Whether the cut admits `primal` up to `tol` (relative to the row scale).
    pub fn admits(&self, primal: &Primal, tol: f64) -> bool {
        self.lower - self.activity(primal) <= tol * self.lower.abs().max(1.0)
    }

    /// Whether the cut excludes the commitment vector `u` for every `x`; only
    /// meaningful for the combinatorial kinds.
    pub fn excludes_commitments(&self, u: &[bool]) -> bool {
        let act: f64 = self
            .terms
            .iter()
            .map(|&(s, a)| match s {
                Symbol::Commitment(c) if u[c] => a,
                _ => 0.0,
            })
            .sum();
        act < self.lower - 1e-9
    }

    pub fn to_lazy_cut(&self, master: &ModelHandle, index: usize) -> LazyCut {
        LazyCut {
            name: format!("{:?}_{index}", self.kind).to_lowercase(),
            terms: self
                .terms
                .iter()
                .map(|&(s, a)| (master.col(s).expect("cut symbol in master"), a))
                .collect(),
            lower: self.lower,
            upper: f64::INFINITY,
            local: !self.is_global(),
        }
    }
}

/// Builds one cut for an incumbent that failed the worker test.
///
/// A globally valid strengthened cut relies on the incumbent being a master
/// optimum and is refused for node incumbents; use the local kind there.
pub fn generate_cut(
    instance: &Instance,
    big_m: &[f64],
    kind: CutKind,
    outcome: &WorkerOutcome,
    u_star: &[bool],
    origin: CutOrigin,
) -> Result<CutRecord, BendersError> {
    if kind == CutKind::StrengthenedGlobal && origin != CutOrigin::MasterOptimum {
        return Err(BendersError::StrengthenedOutOfScope);
    }
    let accepted: Vec<usize> = (0..u_star.len()).filter(|&c| u_star[c]).collect();
    let rejected: Vec<usize> = (0..u_star.len()).filter(|&c| !u_star[c]).collect();
    let (terms, lower) = match kind {
        CutKind::NoGood => {
            let mut terms: Vec<_> = accepted.iter().map(|&c| (Symbol::Commitment(c), -1.0)).collect();
            terms.extend(rejected.iter().map(|&c| (Symbol::Commitment(c), 1.0)));
            (terms, 1.0 - accepted.len() as f64)
        }
        CutKind::StrengthenedGlobal | CutKind::StrengthenedLocal => (
            accepted.iter().map(|&c| (Symbol::Commitment(c), -1.0)).collect(),
            1.0 - accepted.len() as f64,
        ),
        CutKind::Classical => {
            let WorkerOutcome::Infeasible { worker, .. } = outcome else {
                return Err(BendersError::ClassicalNeedsWorkerOptimum);
            };
            let mut terms = Vec::new();
            for (i, b) in instance.hourly_bids.iter().enumerate() {
                terms.push((Symbol::HourlyAcceptance(i), b.price * b.quantity));
            }
            let mut lower = worker.objective;
            for (c, bid) in instance.mp_bids.iter().enumerate() {
                for (k, s) in bid.sub_bids.iter().enumerate() {
                    terms.push((Symbol::SubBidAcceptance(c, k), s.price * s.quantity));
                }
                let m_u = big_m[c] * worker.u[c];
                terms.push((Symbol::Commitment(c), -bid.fixed_cost - m_u));
                lower -= m_u;
            }
            (terms, lower)
        }
    };
    Ok(CutRecord {
        kind,
        origin,
        accepted,
        rejected,
        terms,
        lower,
    })
}
