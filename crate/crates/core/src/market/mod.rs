//! Auction instances: hourly bids, MP bids with their sub-bid curves, the abstract
//! linear network and the technical price bound.
//!
//! Quantities are signed exactly as submitted: `quantity > 0` is a buy step and
//! `quantity < 0` is a sell step. Nothing downstream flips signs.

mod document;
pub mod fixtures;
mod layout;
mod synthetic;
mod validate;

pub use fixtures::{mp_loss_instance, ramp_instance, toy_instance};
pub use layout::{Layout, Node};
pub use synthetic::{generate_synthetic, SyntheticError, SyntheticParams};
pub use validate::{validate_instance, Rule, Violation};

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Default technical price cap, in currency/MWh.
pub const DEFAULT_PRICE_BOUND: f64 = 3000.0;

/// One step of a classical (unconditional) bid curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HourlyBid {
    pub id: String,
    pub location: String,
    pub period: u32,
    /// MW; positive for demand, negative for supply.
    pub quantity: f64,
    /// Limit price in currency/MWh.
    pub price: f64,
}

/// One step of a curve attached to an MP bid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpSubBid {
    pub location: String,
    pub period: u32,
    pub quantity: f64,
    pub price: f64,
    /// Minimum accepted fraction when the parent bid is committed.
    pub min_ratio: f64,
}

/// Minimum-income data in the style of complex orders: a start-up cost and an
/// ad-hoc variable cost, both only used by the income condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicData {
    pub startup_cost: f64,
    pub variable_cost: f64,
}

/// Load-gradient limits of a plant, in MW per period step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampLimits {
    pub ru: f64,
    pub rd: f64,
}

/// A conditionally accepted bid: all of its sub-bids are executed only when the
/// bid is committed, and a committed bid must satisfy its minimum-profit (sell)
/// or maximum-payment (buy) condition at the clearing prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpBid {
    pub id: String,
    pub sub_bids: Vec<MpSubBid>,
    pub fixed_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mic: Option<MicData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<RampLimits>,
}

impl MpBid {
    /// True when every sub-bid sells (negative quantity).
    pub fn is_sell(&self) -> bool {
        self.sub_bids.iter().all(|h| h.quantity < 0.0)
    }

    pub fn is_buy(&self) -> bool {
        self.sub_bids.iter().all(|h| h.quantity > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportVar {
    pub id: String,
    /// `(location, period, e)` triples: MW injected at `(location, period)` per unit of the variable.
    pub coefficients: Vec<(String, u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resource {
    pub id: String,
    /// `(export_var, a)` pairs.
    pub coefficients: Vec<(String, f64)>,
    pub capacity: f64,
}

/// Abstract linear network: nodal balances are linear combinations of export
/// variables, and resources bound linear combinations of those variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub locations: Vec<String>,
    pub periods: Vec<u32>,
    pub export_vars: Vec<ExportVar>,
    pub resources: Vec<Resource>,
}

impl Network {
    /// One location, the given periods, no export variables.
    pub fn single_node(location: &str, periods: impl IntoIterator<Item = u32>) -> Self {
        Network {
            locations: vec![location.to_string()],
            periods: periods.into_iter().collect(),
            export_vars: Vec::new(),
            resources: Vec::new(),
        }
    }
}

/// A full auction input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "document::InstanceDocument", into = "document::InstanceDocument")]
pub struct Instance {
    pub hourly_bids: Vec<HourlyBid>,
    pub mp_bids: Vec<MpBid>,
    pub network: Network,
    pub price_bound: f64,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance document")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Instance {
    pub fn from_json_str(text: &str) -> Result<Self, InstanceError> {
        let instance: Instance = serde_json::from_str(text)?;
        let violations = validate_instance(&instance);
        if violations.is_empty() {
            Ok(instance)
        } else {
            Err(InstanceError::Invalid(violations))
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization is infallible")
    }

    pub fn num_mp_bids(&self) -> usize {
        self.mp_bids.len()
    }
}
