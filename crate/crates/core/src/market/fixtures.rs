//! Small hand-built instances used as golden cases throughout the crate.

use super::{HourlyBid, Instance, MicData, MpBid, MpSubBid, Network, RampLimits, DEFAULT_PRICE_BOUND};

fn hourly(id: &str, location: &str, period: u32, quantity: f64, price: f64) -> HourlyBid {
    HourlyBid {
        id: id.into(),
        location: location.into(),
        period,
        quantity,
        price,
    }
}

fn step(location: &str, period: u32, quantity: f64, price: f64, min_ratio: f64) -> MpSubBid {
    MpSubBid {
        location: location.into(),
        period,
        quantity,
        price,
        min_ratio,
    }
}

/// Two demand steps and two identical plants that differ only by start-up cost.
///
/// Clearing both plants drives the price to 10 and neither recovers its start-up
/// cost; committing only the cheaper one clears at 50 with welfare 300.
/// Each plant also carries income-condition data (start-up cost equal to its fixed
/// cost, variable cost 10) so the same instance can be cleared in MIC mode.
pub fn toy_instance() -> Instance {
    let plant = |id: &str, fixed_cost: f64| MpBid {
        id: id.into(),
        sub_bids: vec![step("L1", 1, -10.0, 10.0, 0.0)],
        fixed_cost,
        mic: Some(MicData {
            startup_cost: fixed_cost,
            variable_cost: 10.0,
        }),
        ramp: None,
    };
    Instance {
        hourly_bids: vec![
            hourly("D1", "L1", 1, 11.0, 50.0),
            hourly("D2", "L1", 1, 14.0, 10.0),
        ],
        mp_bids: vec![plant("MP1", 100.0), plant("MP2", 200.0)],
        network: Network::single_node("L1", [1]),
        price_bound: DEFAULT_PRICE_BOUND,
    }
}

/// One demand step, a cheap hourly supply step and one fully indivisible plant.
///
/// Committing the plant needs a price of at least 20 to cover its costs, but any
/// price above 10 would force the hourly supply to be fully accepted, which
/// leaves no room for the plant. The plant is therefore paradoxically rejected:
/// welfare 200 at price 50.
pub fn mp_loss_instance() -> Instance {
    Instance {
        hourly_bids: vec![
            hourly("D1", "L1", 1, 10.0, 50.0),
            hourly("S", "L1", 1, -5.0, 10.0),
        ],
        mp_bids: vec![MpBid {
            id: "MP1".into(),
            sub_bids: vec![step("L1", 1, -10.0, 10.0, 1.0)],
            fixed_cost: 100.0,
            mic: None,
            ramp: None,
        }],
        network: Network::single_node("L1", [1]),
        price_bound: DEFAULT_PRICE_BOUND,
    }
}

/// A single 10 MW plant over two periods with demand 2 MW then 10 MW, both at
/// 50. With `ramp_up = 5` the plant can only reach 7 MW in the second period.
pub fn ramp_instance(ramp_up: f64, ramp_down: f64) -> Instance {
    Instance {
        hourly_bids: vec![
            hourly("D1", "L1", 1, 2.0, 50.0),
            hourly("D2", "L1", 2, 10.0, 50.0),
        ],
        mp_bids: vec![MpBid {
            id: "G1".into(),
            sub_bids: vec![step("L1", 1, -10.0, 10.0, 0.0), step("L1", 2, -10.0, 10.0, 0.0)],
            fixed_cost: 0.0,
            mic: None,
            ramp: Some(RampLimits {
                ru: ramp_up,
                rd: ramp_down,
            }),
        }],
        network: Network::single_node("L1", [1, 2]),
        price_bound: DEFAULT_PRICE_BOUND,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_matches_table_values() {
        let inst = toy_instance();
        assert_eq!(inst.hourly_bids.len(), 2);
        assert_eq!(inst.mp_bids.len(), 2);
        let d: Vec<(f64, f64)> = inst.hourly_bids.iter().map(|b| (b.quantity, b.price)).collect();
        assert_eq!(d, vec![(11.0, 50.0), (14.0, 10.0)]);
        let fixed: Vec<f64> = inst.mp_bids.iter().map(|c| c.fixed_cost).collect();
        assert_eq!(fixed, vec![100.0, 200.0]);
        for c in &inst.mp_bids {
            assert_eq!(c.sub_bids.len(), 1);
            assert_eq!(c.sub_bids[0].quantity, -10.0);
            assert_eq!(c.sub_bids[0].price, 10.0);
            assert_eq!(c.sub_bids[0].min_ratio, 0.0);
        }
        assert_eq!(inst.price_bound, 3000.0);
        assert_eq!(inst.network.locations.len(), 1);
        assert!(inst.network.resources.is_empty());
    }
}
