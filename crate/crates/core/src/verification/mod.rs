//! Equilibrium checks on cleared solutions, the brute-force oracle and
//! per-bid profit tables.

mod oracle;
mod profit;

pub use oracle::{brute_force_oracle, OracleError, OracleRecord, OracleReport, ORACLE_MAX_BIDS};
pub use profit::{profit_report, ProfitReport, ProfitRow};

use crate::clearing::{commitment_rhs, ClearingMode, ClearingSolution, Duals, Primal};
use crate::market::{Instance, InstanceError, Layout};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("solution carries no dual values; {0:?} solutions need prices and surpluses")]
    MissingDuals(ClearingMode),
    #[error("ramped bids need ramp prices in the dual block")]
    MissingRampDuals,
    #[error("solution does not match the instance: {0}")]
    Dimension(String),
}

/// One evaluated condition family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Largest residual over all items, each divided by `max(1, magnitude of
    /// the terms involved)`.
    pub max_residual: f64,
    pub passed: bool,
    /// Indices (bid, node or row positions, per check) of failing items.
    pub offending: Vec<usize>,
    pub evaluated: usize,
}

/// A rejected MP bid that would have made money at the clearing prices.
/// Allowed; reported for information only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadoxicalRejection {
    pub bid: usize,
    pub id: String,
    pub potential_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub mode: ClearingMode,
    pub tol: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub paradoxical_rejections: Vec<ParadoxicalRejection>,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization is infallible")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "max_residual", "passed", "evaluated", "offending"])
            .expect("in-memory write");
        for c in &self.checks {
            let offending: Vec<String> = c.offending.iter().map(usize::to_string).collect();
            w.write_record([
                c.name.clone(),
                format!("{:e}", c.max_residual),
                c.passed.to_string(),
                c.evaluated.to_string(),
                offending.join(";"),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

struct Acc {
    name: &'static str,
    tol: f64,
    max: f64,
    offending: Vec<usize>,
    evaluated: usize,
}

impl Acc {
    fn new(name: &'static str, tol: f64) -> Self {
        Acc {
            name,
            tol,
            max: 0.0,
            offending: Vec::new(),
            evaluated: 0,
        }
    }

    /// Records `raw` (already non-negative) against the largest term magnitude.
    fn push(&mut self, index: usize, raw: f64, scale: f64) {
        let r = raw / scale.abs().max(1.0);
        self.evaluated += 1;
        if !(r <= self.tol) {
            if !self.offending.contains(&index) {
                self.offending.push(index);
            }
        }
        if r > self.max || r.is_nan() {
            self.max = r;
        }
    }

    /// A pass/fail condition that has no natural residual.
    fn flag(&mut self, index: usize, ok: bool, residual: f64) {
        self.evaluated += 1;
        if !ok && !self.offending.contains(&index) {
            self.offending.push(index);
        }
        if !ok {
            self.max = self.max.max(residual.max(self.tol * 2.0));
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name.to_string(),
            max_residual: self.max,
            passed: self.offending.is_empty(),
            offending: self.offending,
            evaluated: self.evaluated,
        }
    }
}

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_dimensions(instance: &Instance, layout: &Layout, p: &Primal, d: Option<&Duals>) -> Result<(), VerifyError> {
    let n_c = instance.mp_bids.len();
    let steps_ok = |v: &Vec<Vec<f64>>| {
        v.len() == n_c && v.iter().zip(&instance.mp_bids).all(|(x, c)| x.len() == c.sub_bids.len())
    };
    let mut bad = Vec::new();
    if p.x_hourly.len() != instance.hourly_bids.len() {
        bad.push("x_hourly");
    }
    if !steps_ok(&p.x_sub) {
        bad.push("x_sub");
    }
    if p.u.len() != n_c {
        bad.push("u");
    }
    if p.n.len() != instance.network.export_vars.len() {
        bad.push("n");
    }
    if let Some(d) = d {
        if d.prices.len() != layout.n_locations || d.prices.iter().any(|r| r.len() != layout.n_periods) {
            bad.push("prices");
        }
        if d.v.len() != layout.resources.len() {
            bad.push("v");
        }
        if d.s_hourly.len() != instance.hourly_bids.len() {
            bad.push("s_hourly");
        }
        if !steps_ok(&d.s_max) {
            bad.push("s_max");
        }
        if !steps_ok(&d.s_min) {
            bad.push("s_min");
        }
        for (name, v) in [("s_bid", &d.s_bid), ("du_accept", &d.du_accept), ("du_reject", &d.du_reject)] {
            if v.len() != n_c {
                bad.push(name);
            }
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(VerifyError::Dimension(format!("wrong length for {}", bad.join(", "))))
    }
}

/// Output of a bid at each period position.
fn outputs(instance: &Instance, layout: &Layout, p: &Primal, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; layout.n_periods];
    for (k, s) in instance.mp_bids[c].sub_bids.iter().enumerate() {
        out[layout.sub_bids[c][k].period] += -s.quantity * p.x_sub[c][k];
    }
    out
}

/// Ramp price terms attached to step `k` of bid `c`:
/// `Q (g_down(t-1) - g_up(t-1)) + Q (g_up(t) - g_down(t))`.
fn ramp_step_term(instance: &Instance, layout: &Layout, d: &Duals, c: usize, k: usize) -> f64 {
    let (Some(gu), Some(gd)) = (&d.g_up, &d.g_down) else {
        return 0.0;
    };
    if gu[c].is_empty() {
        return 0.0;
    }
    let q = instance.mp_bids[c].sub_bids[k].quantity;
    let t = layout.sub_bids[c][k].period;
    let mut term = 0.0;
    if t >= 1 {
        term += q * (gd[c][t - 1] - gu[c][t - 1]);
    }
    if t < gu[c].len() {
        term += q * (gu[c][t] - gd[c][t]);
    }
    term
}

/// `sum_h (Q P - Q pi) x` minus the fixed cost when the mode charges it.
pub fn bid_profit(instance: &Instance, layout: &Layout, sol: &ClearingSolution, duals: &Duals, c: usize) -> f64 {
    let bid = &instance.mp_bids[c];
    let margin: f64 = bid
        .sub_bids
        .iter()
        .enumerate()
        .map(|(k, s)| s.quantity * (s.price - duals.price(layout.sub_bids[c][k])) * sol.primal.x_sub[c][k])
        .sum();
    if sol.mode.charges_fixed_costs() && sol.primal.u[c] {
        margin - bid.fixed_cost
    } else {
        margin
    }
}

/// Evaluates every equilibrium condition applicable to the solution's mode.
///
/// Residuals are scaled by the magnitude of the terms they combine; a check
/// passes when every scaled residual is at most `tol`. The in/at/out-of-the-
/// money classification of hourly bids uses `tol` as the band on `|P - pi|`.
pub fn verify(instance: &Instance, sol: &ClearingSolution, tol: f64) -> Result<VerificationReport, VerifyError> {
    let layout = Layout::new(instance)?;
    let d = sol.duals.as_ref().ok_or(VerifyError::MissingDuals(sol.mode))?;
    let p = &sol.primal;
    check_dimensions(instance, &layout, p, Some(d))?;
    let ramped = instance.mp_bids.iter().any(|c| c.ramp.is_some());
    if ramped && (d.g_up.is_none() || d.g_down.is_none()) {
        return Err(VerifyError::MissingRampDuals);
    }
    let mode = sol.mode;
    let uf = |c: usize| f64::from(u8::from(p.u[c]));
    let mut checks = Vec::new();

    // Primal rows.
    let mut acc = Acc::new("primal-bounds", tol);
    for (i, &x) in p.x_hourly.iter().enumerate() {
        acc.push(i, (-x).max(x - 1.0).max(0.0), 1.0);
    }
    let n_h = p.x_hourly.len();
    for (c, bid) in instance.mp_bids.iter().enumerate() {
        for (k, s) in bid.sub_bids.iter().enumerate() {
            let x = p.x_sub[c][k];
            acc.push(n_h + c, (x - uf(c)).max(s.min_ratio * uf(c) - x).max(0.0), 1.0);
        }
    }
    checks.push(acc.finish());

    let mut acc = Acc::new("balance", tol);
    let mut net = vec![vec![0.0; layout.n_periods]; layout.n_locations];
    let mut mag = net.clone();
    for (i, b) in instance.hourly_bids.iter().enumerate() {
        let n = layout.hourly[i];
        net[n.location][n.period] += b.quantity * p.x_hourly[i];
        mag[n.location][n.period] += (b.quantity * p.x_hourly[i]).abs();
    }
    for (c, bid) in instance.mp_bids.iter().enumerate() {
        for (k, s) in bid.sub_bids.iter().enumerate() {
            let n = layout.sub_bids[c][k];
            net[n.location][n.period] += s.quantity * p.x_sub[c][k];
            mag[n.location][n.period] += (s.quantity * p.x_sub[c][k]).abs();
        }
    }
    for (k, terms) in layout.exports.iter().enumerate() {
        for &(n, e) in terms {
            net[n.location][n.period] -= e * p.n[k];
            mag[n.location][n.period] += (e * p.n[k]).abs();
        }
    }
    for l in 0..layout.n_locations {
        for t in 0..layout.n_periods {
            acc.push(l * layout.n_periods + t, net[l][t].abs(), mag[l][t]);
        }
    }
    checks.push(acc.finish());

    let mut acc = Acc::new("network-capacity", tol);
    let flows: Vec<f64> = layout
        .resources
        .iter()
        .map(|terms| terms.iter().map(|&(k, a)| a * p.n[k]).sum())
        .collect();
    for (m, res) in instance.network.resources.iter().enumerate() {
        acc.push(m, (flows[m] - res.capacity).max(0.0), res.capacity);
    }
    checks.push(acc.finish());

    if ramped {
        let mut up = Acc::new("ramping-limits", tol);
        for (c, bid) in instance.mp_bids.iter().enumerate() {
            let Some(r) = bid.ramp else { continue };
            let out = outputs(instance, &layout, p, c);
            for t in 0..layout.n_periods.saturating_sub(1) {
                let delta = out[t + 1] - out[t];
                up.push(c, (delta - r.ru * uf(c)).max(-delta - r.rd * uf(c)).max(0.0), r.ru.max(r.rd));
            }
        }
        checks.push(up.finish());
    }

    // Dual feasibility.
    let mut acc = Acc::new("dual-signs", tol);
    let sub_duals = d.s_max.iter().chain(&d.s_min).flatten();
    let ramp_duals = d.g_up.iter().chain(&d.g_down).flatten().flatten();
    for (j, &v) in d
        .s_hourly
        .iter()
        .chain(sub_duals)
        .chain(&d.s_bid)
        .chain(&d.v)
        .chain(&d.du_accept)
        .chain(&d.du_reject)
        .chain(ramp_duals)
        .enumerate()
    {
        acc.push(j, (-v).max(0.0), 1.0);
    }
    checks.push(acc.finish());

    if mode != ClearingMode::FixedCommitment {
        let mut acc = Acc::new("price-bounds", tol);
        for l in 0..layout.n_locations {
            for t in 0..layout.n_periods {
                let pi = d.prices[l][t];
                acc.push(l * layout.n_periods + t, (pi.abs() - instance.price_bound).max(0.0), instance.price_bound);
            }
        }
        checks.push(acc.finish());
    }

    let mut acc = Acc::new("dual-hourly", tol);
    for (i, b) in instance.hourly_bids.iter().enumerate() {
        let qpi = b.quantity * d.price(layout.hourly[i]);
        let qp = b.quantity * b.price;
        acc.push(i, (qp - d.s_hourly[i] - qpi).max(0.0), amax(&[qp, qpi, d.s_hourly[i]]));
    }
    checks.push(acc.finish());

    let mut acc = Acc::new("dual-sub-bid", tol);
    let mut idx = 0;
    for (c, bid) in instance.mp_bids.iter().enumerate() {
        for (k, s) in bid.sub_bids.iter().enumerate() {
            let qpi = s.quantity * d.price(layout.sub_bids[c][k]);
            let g = ramp_step_term(instance, &layout, d, c, k);
            let lhs = d.s_max[c][k] - d.s_min[c][k] + qpi + g;
            let qp = s.quantity * s.price;
            acc.push(idx, (lhs - qp).abs(), amax(&[d.s_max[c][k], d.s_min[c][k], qpi, g, qp]));
            idx += 1;
        }
    }
    checks.push(acc.finish());

    let rhs: Vec<f64> = (0..instance.mp_bids.len())
        .map(|c| commitment_rhs(instance, d, c, mode))
        .collect();
    let mut acc = Acc::new("dual-commitment", tol);
    for c in 0..instance.mp_bids.len() {
        let lhs = d.s_bid[c] + d.du_reject[c] - d.du_accept[c];
        acc.push(c, (rhs[c] - lhs).max(0.0), amax(&[d.s_bid[c], d.du_reject[c], d.du_accept[c], rhs[c]]));
    }
    checks.push(acc.finish());

    let mut acc = Acc::new("dual-network", tol);
    for (k, terms) in layout.exports.iter().enumerate() {
        let av: Vec<f64> = layout
            .resources
            .iter()
            .enumerate()
            .flat_map(|(m, r)| r.iter().filter(|&&(kk, _)| kk == k).map(move |&(_, a)| (m, a)))
            .map(|(m, a)| a * d.v[m])
            .collect();
        let ep: Vec<f64> = terms.iter().map(|&(n, e)| e * d.price(n)).collect();
        let lhs: f64 = av.iter().sum::<f64>() - ep.iter().sum::<f64>();
        acc.push(k, lhs.abs(), amax(&av).max(amax(&ep)));
    }
    checks.push(acc.finish());

    // Complementarity.
    let mut acc = Acc::new("complementarity-hourly", tol);
    for (i, b) in instance.hourly_bids.iter().enumerate() {
        let x = p.x_hourly[i];
        let s = d.s_hourly[i];
        let reduced = s + b.quantity * d.price(layout.hourly[i]) - b.quantity * b.price;
        acc.push(i, (s * (1.0 - x)).abs(), s);
        acc.push(i, (x * reduced).abs(), amax(&[s, b.quantity * b.price]));
    }
    checks.push(acc.finish());

    let mut acc = Acc::new("complementarity-sub-bid", tol);
    let mut idx = 0;
    for (c, bid) in instance.mp_bids.iter().enumerate() {
        for (k, s) in bid.sub_bids.iter().enumerate() {
            let x = p.x_sub[c][k];
            acc.push(idx, (d.s_max[c][k] * (uf(c) - x)).abs(), d.s_max[c][k]);
            acc.push(idx, (d.s_min[c][k] * (x - s.min_ratio * uf(c))).abs(), d.s_min[c][k]);
            idx += 1;
        }
    }
    checks.push(acc.finish());

    let mut acc = Acc::new("complementarity-commitment", tol);
    for c in 0..instance.mp_bids.len() {
        let u = uf(c);
        acc.push(c, (d.s_bid[c] * (1.0 - u)).abs(), d.s_bid[c]);
        acc.push(c, (d.du_accept[c] * (1.0 - u)).abs(), d.du_accept[c]);
        acc.push(c, (d.du_reject[c] * u).abs(), d.du_reject[c]);
        let slack = d.s_bid[c] + d.du_reject[c] - d.du_accept[c] - rhs[c];
        acc.push(c, (u * slack).abs(), amax(&[d.s_bid[c], d.du_reject[c], d.du_accept[c], rhs[c]]));
    }
    checks.push(acc.finish());

    let mut acc = Acc::new("complementarity-network", tol);
    for (m, res) in instance.network.resources.iter().enumerate() {
        acc.push(m, (d.v[m] * (flows[m] - res.capacity)).abs(), d.v[m] * res.capacity.max(1.0));
    }
    checks.push(acc.finish());

    if ramped {
        let (gu, gd) = (d.g_up.as_ref().unwrap(), d.g_down.as_ref().unwrap());
        let mut acc = Acc::new("complementarity-ramping", tol);
        for (c, bid) in instance.mp_bids.iter().enumerate() {
            let Some(r) = bid.ramp else { continue };
            let out = outputs(instance, &layout, p, c);
            for t in 0..gu[c].len() {
                let delta = out[t + 1] - out[t];
                acc.push(c, (gu[c][t] * (r.ru * uf(c) - delta)).abs(), gu[c][t] * r.ru.max(1.0));
                acc.push(c, (gd[c][t] * (r.rd * uf(c) + delta)).abs(), gd[c][t] * r.rd.max(1.0));
            }
        }
        checks.push(acc.finish());
    }

    // Surplus accounting: the dual objective equals the welfare.
    let mut acc = Acc::new("surplus-accounting", tol);
    let wv: f64 = instance
        .network
        .resources
        .iter()
        .zip(&d.v)
        .map(|(r, v)| r.capacity * v)
        .sum();
    let dual_obj = d.s_hourly.iter().sum::<f64>() + d.s_bid.iter().sum::<f64>() + wv - d.du_accept.iter().sum::<f64>();
    acc.push(0, (dual_obj - sol.welfare).abs(), sol.welfare.abs().max(sol.gross_welfare.abs()));
    checks.push(acc.finish());

    let mut acc = Acc::new("welfare", tol);
    let recomputed = p.welfare(instance, mode);
    acc.push(0, (recomputed - sol.welfare).abs(), recomputed);
    acc.push(1, (p.gross_welfare(instance) - sol.gross_welfare).abs(), sol.gross_welfare);
    checks.push(acc.finish());

    // Surplus identities and money status.
    let mut acc = Acc::new("surplus-hourly", tol);
    let mut money = Acc::new("money-status-hourly", tol);
    for (i, b) in instance.hourly_bids.iter().enumerate() {
        let pi = d.price(layout.hourly[i]);
        let x = p.x_hourly[i];
        let unit = b.quantity * (b.price - pi);
        acc.push(i, (d.s_hourly[i] - unit * x).abs(), amax(&[d.s_hourly[i], b.quantity * b.price, b.quantity * pi]));
        // Band on |P - pi| in price units; the sign of Q picks the side.
        let gap = b.price - pi;
        let itm = gap.abs() > tol && unit > 0.0;
        let otm = gap.abs() > tol && unit < 0.0;
        let ok = if x >= 1.0 - tol {
            !otm
        } else if x <= tol {
            !itm
        } else {
            !itm && !otm
        };
        money.flag(i, ok, gap.abs());
    }
    checks.push(acc.finish());
    checks.push(money.finish());

    let mut acc = Acc::new("surplus-sub-bid", tol);
    let mut steps = Acc::new("money-status-sub-bid", tol);
    let mut idx = 0;
    for (c, bid) in instance.mp_bids.iter().enumerate() {
        for (k, s) in bid.sub_bids.iter().enumerate() {
            let here = idx;
            idx += 1;
            if !p.u[c] {
                continue;
            }
            let pi = d.price(layout.sub_bids[c][k]);
            let x = p.x_sub[c][k];
            let unit = s.quantity * (s.price - pi);
            let g = ramp_step_term(instance, &layout, d, c, k) * x;
            let lhs = d.s_max[c][k] - s.min_ratio * d.s_min[c][k] + g;
            acc.push(here, (lhs - unit * x).abs(), amax(&[d.s_max[c][k], d.s_min[c][k], g, s.quantity * s.price]));
            if bid.ramp.is_some() {
                continue;
            }
            let gap = s.price - pi;
            let itm = gap.abs() > tol && unit > 0.0;
            let otm = gap.abs() > tol && unit < 0.0;
            let at_min = (x - s.min_ratio).abs() <= tol;
            let at_max = x >= 1.0 - tol;
            let ok = match (at_min, at_max) {
                (true, true) => true,
                (true, false) => !itm,
                (false, true) => !otm,
                (false, false) => !itm && !otm,
            };
            steps.flag(here, ok, gap.abs());
        }
    }
    checks.push(acc.finish());
    checks.push(steps.finish());

    if ramped {
        let (gu, gd) = (d.g_up.as_ref().unwrap(), d.g_down.as_ref().unwrap());
        let mut acc = Acc::new("ramping-surplus-income", tol);
        for (c, bid) in instance.mp_bids.iter().enumerate() {
            let Some(r) = bid.ramp else { continue };
            if !p.u[c] {
                continue;
            }
            let surplus: f64 = bid
                .sub_bids
                .iter()
                .enumerate()
                .map(|(k, s)| d.s_max[c][k] - s.min_ratio * d.s_min[c][k])
                .sum();
            let ramp_terms: f64 = gu[c].iter().map(|g| r.ru * g).sum::<f64>() + gd[c].iter().map(|g| r.rd * g).sum::<f64>();
            let income: f64 = bid
                .sub_bids
                .iter()
                .enumerate()
                .map(|(k, s)| s.quantity * (s.price - d.price(layout.sub_bids[c][k])) * p.x_sub[c][k])
                .sum();
            acc.push(c, (surplus + ramp_terms - income).abs(), amax(&[surplus, ramp_terms, income]));
        }
        checks.push(acc.finish());
    }

    // MP conditions: the shadow cost of acceptance bounds the loss.
    let mut acc = Acc::new("mp-condition", tol);
    for c in 0..instance.mp_bids.len() {
        if !p.u[c] {
            continue;
        }
        let profit = bid_profit(instance, &layout, sol, d, c);
        let loss = (-profit).max(0.0);
        acc.push(c, (loss - d.du_accept[c]).max(0.0), amax(&[profit, instance.mp_bids[c].fixed_cost]));
    }
    checks.push(acc.finish());

    if matches!(mode, ClearingMode::Mpc | ClearingMode::Mic) {
        let mut acc = Acc::new("shadow-cost-acceptance-zero", tol);
        for (c, &v) in d.du_accept.iter().enumerate() {
            acc.push(c, v.abs(), 1.0);
        }
        checks.push(acc.finish());
    }

    if mode == ClearingMode::Mic {
        let mut ident = Acc::new("mic-income-identity", tol);
        let mut cond = Acc::new("mic-income-condition", tol);
        for (c, bid) in instance.mp_bids.iter().enumerate() {
            let mut income = 0.0;
            let mut bid_value = 0.0;
            let mut volume = 0.0;
            for (k, s) in bid.sub_bids.iter().enumerate() {
                let x = p.x_sub[c][k];
                income += -s.quantity * x * d.price(layout.sub_bids[c][k]);
                bid_value += s.quantity * s.price * x;
                volume += -s.quantity * x;
            }
            if bid.ramp.is_none() {
                let rhs = d.s_bid[c] - bid_value;
                ident.push(c, (income - rhs).abs(), amax(&[income, d.s_bid[c], bid_value]));
            }
            if let (true, Some(mic)) = (p.u[c], bid.mic) {
                let need = mic.startup_cost + volume * mic.variable_cost;
                cond.push(c, (need - income).max(0.0), amax(&[need, income]));
            }
        }
        checks.push(ident.finish());
        checks.push(cond.finish());
    }

    let paradoxical_rejections = instance
        .mp_bids
        .iter()
        .enumerate()
        .filter(|&(c, _)| !p.u[c])
        .filter_map(|(c, bid)| {
            let best: f64 = bid
                .sub_bids
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let unit = s.quantity * (s.price - d.price(layout.sub_bids[c][k]));
                    unit.max(unit * s.min_ratio)
                })
                .sum();
            let potential = if mode.charges_fixed_costs() { best - bid.fixed_cost } else { best };
            (potential > tol).then(|| ParadoxicalRejection {
                bid: c,
                id: bid.id.clone(),
                potential_profit: potential,
            })
        })
        .collect();

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        mode,
        tol,
        checks,
        passed,
        paradoxical_rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acc_scales_residuals() {
        let mut a = Acc::new("x", 1e-6);
        a.push(0, 1e-4, 1000.0);
        a.push(1, 1e-7, 0.0);
        let c = a.finish();
        assert!(c.passed);
        assert!((c.max_residual - 1e-7).abs() < 1e-12);

        let mut a = Acc::new("x", 1e-6);
        a.push(3, 1e-3, 10.0);
        a.push(3, 1e-3, 10.0);
        let c = a.finish();
        assert!(!c.passed);
        assert_eq!(c.offending, vec![3]);
        assert_eq!(c.evaluated, 2);
    }

    #[test]
    fn nan_residual_fails() {
        let mut a = Acc::new("x", 1e-6);
        a.push(0, f64::NAN, 1.0);
        assert!(!a.finish().passed);
    }

    #[test]
    fn flag_failure_reports_above_tol() {
        let mut a = Acc::new("x", 1e-6);
        a.flag(2, false, 0.0);
        let c = a.finish();
        assert!(!c.passed);
        assert!(c.max_residual > 1e-6);
    }
}
