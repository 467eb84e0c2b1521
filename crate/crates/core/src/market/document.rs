use super::{ExportVar, HourlyBid, Instance, MpBid, Network, Resource};
use serde::{Deserialize, Serialize};

/// On-disk layout of an instance: network fields are flattened to the top level.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct InstanceDocument {
    locations: Vec<String>,
    periods: Vec<u32>,
    #[serde(default)]
    export_vars: Vec<ExportVar>,
    #[serde(default)]
    resources: Vec<Resource>,
    #[serde(default)]
    hourly_bids: Vec<HourlyBid>,
    #[serde(default)]
    mp_bids: Vec<MpBid>,
    #[serde(default = "default_price_bound")]
    price_bound: f64,
}

fn default_price_bound() -> f64 {
    super::DEFAULT_PRICE_BOUND
}

impl From<InstanceDocument> for Instance {
    fn from(doc: InstanceDocument) -> Self {
        Instance {
            hourly_bids: doc.hourly_bids,
            mp_bids: doc.mp_bids,
            network: Network {
                locations: doc.locations,
                periods: doc.periods,
                export_vars: doc.export_vars,
                resources: doc.resources,
            },
            price_bound: doc.price_bound,
        }
    }
}

impl From<Instance> for InstanceDocument {
    fn from(instance: Instance) -> Self {
        InstanceDocument {
            locations: instance.network.locations,
            periods: instance.network.periods,
            export_vars: instance.network.export_vars,
            resources: instance.network.resources,
            hourly_bids: instance.hourly_bids,
            mp_bids: instance.mp_bids,
            price_bound: instance.price_bound,
        }
    }
}
