//! Seeded random instances shaped like an exchange day: per-period plant curves
//! whose first step is a must-run block at the plant's variable cost, elastic
//! demand per node, and an ATC-style line between neighbouring locations.

use super::{
    ExportVar, HourlyBid, Instance, MicData, MpBid, MpSubBid, Network, Resource, DEFAULT_PRICE_BOUND,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum acceptance ratio carried by the first step of every plant curve.
pub const FIRST_STEP_MIN_RATIO: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub n_mp: usize,
    pub steps_per_curve: usize,
    pub n_periods: usize,
    pub n_locations: usize,
    pub atc_capacity: f64,
    /// Multiplies every fixed / start-up cost draw.
    pub cost_scale: f64,
    /// Hourly demand steps per location and period.
    pub demand_steps: usize,
    /// Hourly supply steps per location and period.
    pub supply_steps: usize,
    /// Fraction of MP bids generated on the buy side (maximum-payment bids).
    pub buy_mp_share: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n_mp: 4,
            steps_per_curve: 2,
            n_periods: 2,
            n_locations: 2,
            atc_capacity: 10.0,
            cost_scale: 1.0,
            demand_steps: 1,
            supply_steps: 1,
            buy_mp_share: 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("parameter {0} must be positive")]
    NonPositive(&'static str),
    #[error("parameters produce no demand")]
    NoDemand,
    #[error("parameters produce no supply")]
    NoSupply,
}

/// Deterministic in `(seed, params)`.
pub fn generate_synthetic(seed: u64, params: &SyntheticParams) -> Result<Instance, SyntheticError> {
    if params.n_periods == 0 {
        return Err(SyntheticError::NonPositive("n_periods"));
    }
    if params.n_locations == 0 {
        return Err(SyntheticError::NonPositive("n_locations"));
    }
    if params.n_mp > 0 && params.steps_per_curve == 0 {
        return Err(SyntheticError::NonPositive("steps_per_curve"));
    }
    if !(params.atc_capacity >= 0.0 && params.atc_capacity.is_finite()) {
        return Err(SyntheticError::NonPositive("atc_capacity"));
    }
    if !(params.cost_scale > 0.0 && params.cost_scale.is_finite()) {
        return Err(SyntheticError::NonPositive("cost_scale"));
    }
    let n_buy_mp = (params.n_mp as f64 * params.buy_mp_share.clamp(0.0, 1.0)).round() as usize;
    let n_sell_mp = params.n_mp - n_buy_mp;
    if params.demand_steps == 0 && n_buy_mp == 0 {
        return Err(SyntheticError::NoDemand);
    }
    if params.supply_steps == 0 && n_sell_mp == 0 {
        return Err(SyntheticError::NoSupply);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locations: Vec<String> = (1..=params.n_locations).map(|l| format!("L{l}")).collect();
    let periods: Vec<u32> = (1..=params.n_periods as u32).collect();
    let network = atc_chain(&locations, &periods, params.atc_capacity);

    // Typical plant output per location, used to size the hourly curves.
    let plants_per_location = params.n_mp as f64 / params.n_locations as f64;
    let typical_node_capacity = 12.0 * plants_per_location.max(0.5);

    let mut hourly_bids = Vec::new();
    for loc in &locations {
        for &t in &periods {
            let profile: f64 = rng.gen_range(0.6..1.4);
            let mut price: f64 = rng.gen_range(60.0..120.0);
            for j in 0..params.demand_steps {
                let q = profile * typical_node_capacity / params.demand_steps as f64
                    * rng.gen_range(0.7..1.3);
                hourly_bids.push(HourlyBid {
                    id: format!("D_{loc}_{t}_{j}"),
                    location: loc.clone(),
                    period: t,
                    quantity: round2(q),
                    price: round2(price),
                });
                price *= rng.gen_range(0.5..0.9);
            }
            let mut price: f64 = rng.gen_range(15.0..45.0);
            for j in 0..params.supply_steps {
                let q = rng.gen_range(2.0..6.0);
                hourly_bids.push(HourlyBid {
                    id: format!("S_{loc}_{t}_{j}"),
                    location: loc.clone(),
                    period: t,
                    quantity: -round2(q),
                    price: round2(price),
                });
                price += rng.gen_range(5.0..20.0);
            }
        }
    }

    let mut mp_bids = Vec::new();
    for c in 0..params.n_mp {
        let buy = c >= n_sell_mp;
        let loc = &locations[rng.gen_range(0..locations.len())];
        let mut sub_bids = Vec::new();
        let (anchor_price, fixed_cost) = if buy {
            (rng.gen_range(60.0..110.0), rng.gen_range(20.0..150.0))
        } else {
            (rng.gen_range(10.0..40.0), rng.gen_range(50.0..400.0))
        };
        let anchor_price = round2(anchor_price);
        for &t in &periods {
            let mut price = anchor_price;
            for s in 0..params.steps_per_curve {
                let (q, ratio) = if s == 0 {
                    (rng.gen_range(4.0..12.0), FIRST_STEP_MIN_RATIO)
                } else {
                    price += if buy {
                        -rng.gen_range(2.0..8.0)
                    } else {
                        rng.gen_range(2.0..8.0)
                    };
                    (rng.gen_range(2.0..6.0), 0.0)
                };
                let q = round2(q);
                sub_bids.push(MpSubBid {
                    location: loc.clone(),
                    period: t,
                    quantity: if buy { q } else { -q },
                    price: round2(price),
                    min_ratio: ratio,
                });
            }
        }
        let fixed_cost = round2(fixed_cost * params.cost_scale);
        mp_bids.push(MpBid {
            id: format!("{}{c}", if buy { "MPB" } else { "MP" }),
            sub_bids,
            fixed_cost,
            mic: (!buy).then_some(MicData {
                startup_cost: fixed_cost,
                variable_cost: anchor_price,
            }),
            ramp: None,
        });
    }

    Ok(Instance {
        hourly_bids,
        mp_bids,
        network,
        price_bound: DEFAULT_PRICE_BOUND,
    })
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// One export variable per direction, link and period; each is bounded by the
/// ATC capacity and kept non-negative through a zero-capacity resource.
fn atc_chain(locations: &[String], periods: &[u32], capacity: f64) -> Network {
    let mut export_vars = Vec::new();
    let mut resources = Vec::new();
    for pair in locations.windows(2) {
        for (from, to) in [(&pair[0], &pair[1]), (&pair[1], &pair[0])] {
            for &t in periods {
                let id = format!("F_{from}_{to}_{t}");
                export_vars.push(ExportVar {
                    id: id.clone(),
                    coefficients: vec![(from.clone(), t, -1.0), (to.clone(), t, 1.0)],
                });
                resources.push(Resource {
                    id: format!("ATC_{from}_{to}_{t}"),
                    coefficients: vec![(id.clone(), 1.0)],
                    capacity,
                });
                resources.push(Resource {
                    id: format!("NONNEG_{from}_{to}_{t}"),
                    coefficients: vec![(id, -1.0)],
                    capacity: 0.0,
                });
            }
        }
    }
    Network {
        locations: locations.to_vec(),
        periods: periods.to_vec(),
        export_vars,
        resources,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::validate_instance;

    #[test]
    fn deterministic_in_seed() {
        let p = SyntheticParams::default();
        assert_eq!(generate_synthetic(1, &p).unwrap(), generate_synthetic(1, &p).unwrap());
        assert_ne!(generate_synthetic(1, &p).unwrap(), generate_synthetic(2, &p).unwrap());
    }

    #[test]
    fn first_step_of_every_curve_has_ratio_point_six() {
        let p = SyntheticParams {
            steps_per_curve: 3,
            n_periods: 4,
            ..Default::default()
        };
        let inst = generate_synthetic(7, &p).unwrap();
        assert!(validate_instance(&inst).is_empty());
        for c in &inst.mp_bids {
            let anchor = c.mic.unwrap().variable_cost;
            for curve in c.sub_bids.chunks(p.steps_per_curve) {
                assert_eq!(curve[0].min_ratio, FIRST_STEP_MIN_RATIO);
                assert_eq!(curve[0].price, anchor);
                assert!(curve.windows(2).all(|w| w[1].price > w[0].price));
                assert!(curve[1..].iter().all(|s| s.min_ratio == 0.0));
                assert!(curve.iter().all(|s| s.period == curve[0].period));
            }
        }
    }

    #[test]
    fn two_locations_get_atc_links() {
        let inst = generate_synthetic(3, &SyntheticParams::default()).unwrap();
        // two directions x two periods
        assert_eq!(inst.network.export_vars.len(), 4);
        assert_eq!(inst.network.resources.len(), 8);
        let single = generate_synthetic(
            3,
            &SyntheticParams {
                n_locations: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(single.network.export_vars.is_empty());
    }

    #[test]
    fn empty_sides_rejected() {
        let no_demand = SyntheticParams {
            demand_steps: 0,
            ..Default::default()
        };
        assert_eq!(generate_synthetic(1, &no_demand), Err(SyntheticError::NoDemand));
        let no_supply = SyntheticParams {
            n_mp: 0,
            supply_steps: 0,
            ..Default::default()
        };
        assert_eq!(generate_synthetic(1, &no_supply), Err(SyntheticError::NoSupply));
        let zero_periods = SyntheticParams {
            n_periods: 0,
            ..Default::default()
        };
        assert!(generate_synthetic(1, &zero_periods).is_err());
    }

    #[test]
    fn buy_side_share_produces_buy_bids() {
        let p = SyntheticParams {
            buy_mp_share: 0.5,
            ..Default::default()
        };
        let inst = generate_synthetic(5, &p).unwrap();
        assert!(validate_instance(&inst).is_empty());
        assert_eq!(inst.mp_bids.iter().filter(|c| c.is_buy()).count(), 2);
        assert!(inst.mp_bids.iter().filter(|c| c.is_buy()).all(|c| c.mic.is_none()));
    }
}
