use super::VerifyError;
use crate::clearing::ClearingSolution;
use crate::market::{Instance, Layout};
use serde::{Deserialize, Serialize};

/// Money flows of one MP bid at the clearing prices.
///
/// Signs follow the seller's view: `revenue = sum (-Q x) pi` and
/// `marginal_cost = sum (-Q x) P`, so for a buy bid revenue is minus the
/// payment and marginal cost is minus the utility. `profit` is then
/// `revenue - marginal_cost - fixed_cost` for either side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitRow {
    pub bid: String,
    pub accepted: bool,
    pub revenue: f64,
    pub marginal_cost: f64,
    pub fixed_cost: f64,
    pub profit: f64,
    /// Start-up plus variable cost under the bid's income condition, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mic_cost: Option<f64>,
    /// `revenue - mic_cost`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mic_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub rows: Vec<ProfitRow>,
}

impl ProfitReport {
    pub fn row(&self, bid: &str) -> Option<&ProfitRow> {
        self.rows.iter().find(|r| r.bid == bid)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization is infallible")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "bid",
            "accepted",
            "revenue",
            "marginal_cost",
            "fixed_cost",
            "profit",
            "mic_cost",
            "mic_margin",
        ])
        .expect("in-memory write");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.bid.clone(),
                r.accepted.to_string(),
                r.revenue.to_string(),
                r.marginal_cost.to_string(),
                r.fixed_cost.to_string(),
                r.profit.to_string(),
                opt(r.mic_cost),
                opt(r.mic_margin),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Per-bid revenue, costs and profit. The fixed cost is always charged to
/// accepted bids here, whatever the clearing mode left out of its objective.
pub fn profit_report(instance: &Instance, solution: &ClearingSolution) -> Result<ProfitReport, VerifyError> {
    let layout = Layout::new(instance)?;
    let duals = solution
        .duals
        .as_ref()
        .ok_or(VerifyError::MissingDuals(solution.mode))?;
    let rows = instance
        .mp_bids
        .iter()
        .enumerate()
        .map(|(c, bid)| {
            let accepted = solution.primal.u[c];
            let mut revenue = 0.0;
            let mut marginal_cost = 0.0;
            let mut volume = 0.0;
            for (k, s) in bid.sub_bids.iter().enumerate() {
                let q = -s.quantity * solution.primal.x_sub[c][k];
                revenue += q * duals.price(layout.sub_bids[c][k]);
                marginal_cost += q * s.price;
                volume += q;
            }
            let fixed_cost = if accepted { bid.fixed_cost } else { 0.0 };
            let mic_cost = bid.mic.map(|m| {
                if accepted {
                    m.startup_cost + volume * m.variable_cost
                } else {
                    0.0
                }
            });
            // `+ 0.0` turns a negative zero into a plain zero for printing.
            ProfitRow {
                bid: bid.id.clone(),
                accepted,
                revenue: revenue + 0.0,
                marginal_cost: marginal_cost + 0.0,
                fixed_cost,
                profit: revenue - marginal_cost - fixed_cost + 0.0,
                mic_margin: mic_cost.map(|m| revenue - m + 0.0),
                mic_cost,
            }
        })
        .collect();
    Ok(ProfitReport { rows })
}
