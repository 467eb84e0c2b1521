use super::Instance;
use serde::Serialize;
use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    ZeroQuantity,
    MinRatioOutOfRange,
    MixedSignMpBid,
    EmptyMpBid,
    UnknownLocation,
    UnknownPeriod,
    UnknownExportVar,
    DuplicateId,
    NegativeFixedCost,
    NegativeStartupCost,
    NegativeRampLimit,
    RampOnBuyBid,
    NonFiniteValue,
    NonPositivePriceBound,
    EmptyNetwork,
}

impl Rule {
    pub fn description(self) -> &'static str {
        match self {
            Rule::ZeroQuantity => "zero quantity",
            Rule::MinRatioOutOfRange => "min_ratio out of [0,1]",
            Rule::MixedSignMpBid => "mixed-sign MP bid",
            Rule::EmptyMpBid => "MP bid without sub-bids",
            Rule::UnknownLocation => "unknown location",
            Rule::UnknownPeriod => "unknown period",
            Rule::UnknownExportVar => "unknown export variable",
            Rule::DuplicateId => "duplicate id",
            Rule::NegativeFixedCost => "negative fixed cost",
            Rule::NegativeStartupCost => "negative start-up cost",
            Rule::NegativeRampLimit => "negative ramp limit",
            Rule::RampOnBuyBid => "ramp limits on a buy-side MP bid",
            Rule::NonFiniteValue => "non-finite number",
            Rule::NonPositivePriceBound => "price bound must be positive",
            Rule::EmptyNetwork => "network needs at least one location and one period",
        }
    }
}

/// A broken invariant, naming the offending item.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub subject: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule.description())?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, subject: impl Into<String>, rule: Rule, detail: impl Into<String>) {
        self.0.push(Violation {
            subject: subject.into(),
            rule,
            detail: detail.into(),
        });
    }

    fn finite(&mut self, subject: &str, field: &str, value: f64) {
        if !value.is_finite() {
            self.push(subject, Rule::NonFiniteValue, field);
        }
    }
}

/// Checks every structural invariant of an instance. An empty list means valid.
pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut out = Collector(Vec::new());
    let network = &instance.network;

    if network.locations.is_empty() || network.periods.is_empty() {
        out.push("network", Rule::EmptyNetwork, "");
    }
    let locations: HashSet<&str> = network.locations.iter().map(String::as_str).collect();
    let periods: HashSet<u32> = network.periods.iter().copied().collect();
    if locations.len() != network.locations.len() {
        out.push("network", Rule::DuplicateId, "locations");
    }
    if periods.len() != network.periods.len() {
        out.push("network", Rule::DuplicateId, "periods");
    }
    if !(instance.price_bound.is_finite() && instance.price_bound > 0.0) {
        out.push(
            "price_bound",
            Rule::NonPositivePriceBound,
            format!("{}", instance.price_bound),
        );
    }

    let mut export_ids = HashSet::new();
    for k in &network.export_vars {
        let subject = format!("export var '{}'", k.id);
        if !export_ids.insert(k.id.as_str()) {
            out.push(&subject, Rule::DuplicateId, "");
        }
        for (l, t, e) in &k.coefficients {
            if !locations.contains(l.as_str()) {
                out.push(&subject, Rule::UnknownLocation, l.clone());
            }
            if !periods.contains(t) {
                out.push(&subject, Rule::UnknownPeriod, t.to_string());
            }
            out.finite(&subject, "coefficient", *e);
        }
    }
    let mut resource_ids = HashSet::new();
    for m in &network.resources {
        let subject = format!("resource '{}'", m.id);
        if !resource_ids.insert(m.id.as_str()) {
            out.push(&subject, Rule::DuplicateId, "");
        }
        out.finite(&subject, "capacity", m.capacity);
        for (k, a) in &m.coefficients {
            if !export_ids.contains(k.as_str()) {
                out.push(&subject, Rule::UnknownExportVar, k.clone());
            }
            out.finite(&subject, "coefficient", *a);
        }
    }

    let mut bid_ids = HashSet::new();
    for bid in &instance.hourly_bids {
        let subject = format!("hourly bid '{}'", bid.id);
        if !bid_ids.insert(bid.id.as_str()) {
            out.push(&subject, Rule::DuplicateId, "");
        }
        if bid.quantity == 0.0 {
            out.push(&subject, Rule::ZeroQuantity, "");
        }
        out.finite(&subject, "quantity", bid.quantity);
        out.finite(&subject, "price", bid.price);
        if !locations.contains(bid.location.as_str()) {
            out.push(&subject, Rule::UnknownLocation, bid.location.clone());
        }
        if !periods.contains(&bid.period) {
            out.push(&subject, Rule::UnknownPeriod, bid.period.to_string());
        }
    }

    for bid in &instance.mp_bids {
        let subject = format!("mp bid '{}'", bid.id);
        if !bid_ids.insert(bid.id.as_str()) {
            out.push(&subject, Rule::DuplicateId, "");
        }
        if bid.sub_bids.is_empty() {
            out.push(&subject, Rule::EmptyMpBid, "");
        }
        out.finite(&subject, "fixed_cost", bid.fixed_cost);
        if bid.fixed_cost < 0.0 {
            out.push(&subject, Rule::NegativeFixedCost, bid.fixed_cost.to_string());
        }
        for (h, step) in bid.sub_bids.iter().enumerate() {
            let field = |name: &str| format!("sub-bid {h} {name}");
            if step.quantity == 0.0 {
                out.push(&subject, Rule::ZeroQuantity, field("quantity"));
            }
            out.finite(&subject, &field("quantity"), step.quantity);
            out.finite(&subject, &field("price"), step.price);
            if !(0.0..=1.0).contains(&step.min_ratio) {
                out.push(
                    &subject,
                    Rule::MinRatioOutOfRange,
                    format!("sub-bid {h}: {}", step.min_ratio),
                );
            }
            if !locations.contains(step.location.as_str()) {
                out.push(&subject, Rule::UnknownLocation, step.location.clone());
            }
            if !periods.contains(&step.period) {
                out.push(&subject, Rule::UnknownPeriod, step.period.to_string());
            }
        }
        let sells = bid.sub_bids.iter().any(|h| h.quantity < 0.0);
        let buys = bid.sub_bids.iter().any(|h| h.quantity > 0.0);
        if sells && buys {
            out.push(&subject, Rule::MixedSignMpBid, "");
        }
        if let Some(mic) = &bid.mic {
            out.finite(&subject, "mic.startup_cost", mic.startup_cost);
            out.finite(&subject, "mic.variable_cost", mic.variable_cost);
            if mic.startup_cost < 0.0 {
                out.push(&subject, Rule::NegativeStartupCost, mic.startup_cost.to_string());
            }
        }
        if let Some(ramp) = &bid.ramp {
            out.finite(&subject, "ramp.ru", ramp.ru);
            out.finite(&subject, "ramp.rd", ramp.rd);
            if ramp.ru < 0.0 || ramp.rd < 0.0 {
                out.push(&subject, Rule::NegativeRampLimit, "");
            }
            if buys {
                out.push(&subject, Rule::RampOnBuyBid, "");
            }
        }
    }
    out.0
}
