use super::{validate_instance, Instance, InstanceError};
use std::collections::HashMap;

/// A `(location, period)` pair resolved to positions in the network lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub location: usize,
    pub period: usize,
}

/// Index-resolved view of a validated instance. Periods keep the order of
/// `network.periods`; ramping couples consecutive entries of that list.
#[derive(Debug, Clone)]
pub struct Layout {
    pub n_locations: usize,
    pub n_periods: usize,
    pub hourly: Vec<Node>,
    pub sub_bids: Vec<Vec<Node>>,
    /// Per export variable: `(node, e)` terms.
    pub exports: Vec<Vec<(Node, f64)>>,
    /// Per resource: `(export variable, a)` terms.
    pub resources: Vec<Vec<(usize, f64)>>,
}

impl Layout {
    pub fn new(instance: &Instance) -> Result<Self, InstanceError> {
        let violations = validate_instance(instance);
        if !violations.is_empty() {
            return Err(InstanceError::Invalid(violations));
        }
        let net = &instance.network;
        let loc: HashMap<&str, usize> = net
            .locations
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let per: HashMap<u32, usize> = net.periods.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let node = |l: &str, t: u32| Node {
            location: loc[l],
            period: per[&t],
        };
        let kidx: HashMap<&str, usize> = net
            .export_vars
            .iter()
            .enumerate()
            .map(|(i, k)| (k.id.as_str(), i))
            .collect();

        Ok(Layout {
            n_locations: net.locations.len(),
            n_periods: net.periods.len(),
            hourly: instance
                .hourly_bids
                .iter()
                .map(|b| node(&b.location, b.period))
                .collect(),
            sub_bids: instance
                .mp_bids
                .iter()
                .map(|c| c.sub_bids.iter().map(|h| node(&h.location, h.period)).collect())
                .collect(),
            exports: net
                .export_vars
                .iter()
                .map(|k| {
                    k.coefficients
                        .iter()
                        .map(|(l, t, e)| (node(l, *t), *e))
                        .collect()
                })
                .collect(),
            resources: net
                .resources
                .iter()
                .map(|m| m.coefficients.iter().map(|(k, a)| (kidx[k.as_str()], *a)).collect())
                .collect(),
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.n_locations)
            .flat_map(move |l| (0..self.n_periods).map(move |t| Node { location: l, period: t }))
    }

    pub fn node_index(&self, node: Node) -> usize {
        node.location * self.n_periods + node.period
    }
}
