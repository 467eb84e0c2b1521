use crate::clearing::{fixed_commitment_optimum, price_support, worker_program, ClearError, ClearingMode};
use crate::market::Instance;
use crate::solver::{Backend, SolveOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Enumeration guard: `2^20` fixed-commitment LPs is the practical ceiling.
pub const ORACLE_MAX_BIDS: usize = 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "{n} MP bids means 2^{n} combinations; the oracle enumerates at most {limit} bids. \
         Use a direct MPC clear or Benders for larger instances"
    )]
    TooManyBids { n: usize, limit: usize },
    #[error("the oracle runs in MPC or MIC mode, not {0:?}")]
    Mode(ClearingMode),
    #[error(transparent)]
    Clear(#[from] ClearError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub u: Vec<bool>,
    /// `None` when the fixed-commitment LP is infeasible.
    pub welfare: Option<f64>,
    pub mp_feasible: bool,
    /// Smallest dual objective of the price-support LP (`+inf` if none).
    pub support_objective: f64,
    /// Worker-program optimum for the same vector (MPC mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker_objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub mode: ClearingMode,
    pub best: Option<Vec<bool>>,
    pub best_welfare: Option<f64>,
    /// Ordered by combination index: bit `c` of the index is `u_c`.
    pub records: Vec<OracleRecord>,
}

impl OracleReport {
    pub fn record(&self, u: &[bool]) -> Option<&OracleRecord> {
        self.records.iter().find(|r| r.u == u)
    }

    /// Every combination reaching the best welfare within `tol` (relative).
    pub fn optimal_set(&self, tol: f64) -> Vec<&OracleRecord> {
        let Some(best) = self.best_welfare else { return Vec::new() };
        self.records
            .iter()
            .filter(|r| r.mp_feasible)
            .filter(|r| r.welfare.is_some_and(|w| (w - best).abs() <= tol * best.abs().max(1.0)))
            .collect()
    }
}

fn decode(index: usize, n: usize) -> Vec<bool> {
    (0..n).map(|c| index >> c & 1 == 1).collect()
}

/// Enumerates every commitment vector, solves its fixed-commitment LP and
/// tests whether supporting prices exist. Welfare is net of fixed costs in
/// MPC mode and gross in MIC mode. Combinations run in parallel; the report is
/// ordered by combination index.
pub fn brute_force_oracle(
    instance: &Instance,
    mode: ClearingMode,
    backend: &(dyn Backend + Sync),
    options: &SolveOptions,
    tol: f64,
) -> Result<OracleReport, OracleError> {
    if !matches!(mode, ClearingMode::Mpc | ClearingMode::Mic) {
        return Err(OracleError::Mode(mode));
    }
    let n = instance.mp_bids.len();
    if n > ORACLE_MAX_BIDS {
        return Err(OracleError::TooManyBids {
            n,
            limit: ORACLE_MAX_BIDS,
        });
    }
    let records = (0..1usize << n)
        .into_par_iter()
        .map(|index| -> Result<OracleRecord, OracleError> {
            let u = decode(index, n);
            let Some(opt) = fixed_commitment_optimum(instance, &u, backend, options)? else {
                return Ok(OracleRecord {
                    u,
                    welfare: None,
                    mp_feasible: false,
                    support_objective: f64::INFINITY,
                    worker_objective: None,
                });
            };
            let support = price_support(instance, &opt.primal, mode, backend, options, tol)?;
            let worker_objective = match mode {
                ClearingMode::Mpc => Some(worker_program(instance, &u, backend, options)?.objective),
                _ => None,
            };
            Ok(OracleRecord {
                welfare: Some(opt.primal.welfare(instance, mode)),
                mp_feasible: support.supported,
                support_objective: support.dual_objective,
                worker_objective,
                u,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut best: Option<(f64, &OracleRecord)> = None;
    for r in records.iter().filter(|r| r.mp_feasible) {
        let w = r.welfare.expect("feasible combinations have a welfare");
        if best.map_or(true, |(b, _)| w > b + tol * b.abs().max(1.0)) {
            best = Some((w, r));
        }
    }
    Ok(OracleReport {
        mode,
        best: best.map(|(_, r)| r.u.clone()),
        best_welfare: best.map(|(w, _)| w),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_uses_bit_order() {
        assert_eq!(decode(0b101, 3), vec![true, false, true]);
        assert_eq!(decode(0, 2), vec![false, false]);
    }
}
