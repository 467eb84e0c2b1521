use super::FormulationError;
use crate::market::{Instance, Layout};
use crate::model::{ModelHandle, RowKey, Symbol};

/// Adds load-gradient rows for every MP bid carrying ramp limits.
///
/// For each consecutive pair of periods `(t, t+1)` in network order:
///
/// ```text
/// out(t+1) - out(t) <= RU u   [g_up(c,t)]
/// out(t) - out(t+1) <= RD u   [g_down(c,t)]
/// ```
///
/// where `out(t) = sum -Q x` over the bid's steps at `t`. When the model carries
/// dual rows, the `x_hc` rows gain the matching `g` terms and the commitment
/// surplus row gains `RU g_up + RD g_down`.
pub fn add_ramping(h: &mut ModelHandle, instance: &Instance) -> Result<(), FormulationError> {
    if h.row_keys().any(|(k, _)| matches!(k, RowKey::RampUp(..) | RowKey::RampDown(..))) {
        return Err(FormulationError::RampingTwice);
    }
    let layout = Layout::new(instance)?;
    let with_duals = h.row_id(RowKey::StrongDuality).is_some();
    let pairs = layout.n_periods.saturating_sub(1);

    for (c, bid) in instance.mp_bids.iter().enumerate() {
        let Some(ramp) = bid.ramp else { continue };
        if !bid.is_sell() {
            return Err(FormulationError::RampOnBuyBid(bid.id.clone()));
        }
        let u = h.col(Symbol::Commitment(c)).expect("commitment registered");
        for t in 0..pairs {
            let mut up = vec![(u, -ramp.ru)];
            let mut down = vec![(u, -ramp.rd)];
            for (k, step) in bid.sub_bids.iter().enumerate() {
                let period = layout.sub_bids[c][k].period;
                let x = h.col(Symbol::SubBidAcceptance(c, k)).expect("x registered");
                if period == t + 1 {
                    up.push((x, -step.quantity));
                    down.push((x, step.quantity));
                } else if period == t {
                    up.push((x, step.quantity));
                    down.push((x, -step.quantity));
                }
            }
            h.row(RowKey::RampUp(c, t), f64::NEG_INFINITY, 0.0, up);
            h.row(RowKey::RampDown(c, t), f64::NEG_INFINITY, 0.0, down);
        }

        if !with_duals {
            continue;
        }
        let g: Vec<_> = (0..pairs)
            .map(|t| {
                (
                    h.var(Symbol::RampUpPrice(c, t), 0.0, f64::INFINITY, 0.0),
                    h.var(Symbol::RampDownPrice(c, t), 0.0, f64::INFINITY, 0.0),
                )
            })
            .collect();
        for (k, step) in bid.sub_bids.iter().enumerate() {
            let period = layout.sub_bids[c][k].period;
            let row = h.row_id(RowKey::SubBidDual(c, k)).expect("dual row registered");
            let q = step.quantity;
            if period >= 1 {
                let (gu, gd) = g[period - 1];
                h.model.add_term(row, gu, -q);
                h.model.add_term(row, gd, q);
            }
            if period < pairs {
                let (gu, gd) = g[period];
                h.model.add_term(row, gu, q);
                h.model.add_term(row, gd, -q);
            }
        }
        let row = h.row_id(RowKey::CommitDual(c)).expect("commit row registered");
        for &(gu, gd) in &g {
            h.model.add_term(row, gu, -ramp.ru);
            h.model.add_term(row, gd, -ramp.rd);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{build_marketclearing_mpc, build_uwelfare, FormulationConfig, Variant};
    use crate::market::ramp_instance;

    #[test]
    fn primal_rows_per_period_pair() {
        let inst = ramp_instance(5.0, 5.0);
        let mut h = build_uwelfare(&inst, None).unwrap();
        add_ramping(&mut h, &inst).unwrap();
        let up = h.model.row(h.row_id(RowKey::RampUp(0, 0)).unwrap());
        let x1 = h.col(Symbol::SubBidAcceptance(0, 0)).unwrap();
        let x2 = h.col(Symbol::SubBidAcceptance(0, 1)).unwrap();
        let u = h.col(Symbol::Commitment(0)).unwrap();
        // 10 x2 - 10 x1 - 5 u <= 0
        assert!(up.terms.contains(&(x2, 10.0)));
        assert!(up.terms.contains(&(x1, -10.0)));
        assert!(up.terms.contains(&(u, -5.0)));
        assert!(matches!(add_ramping(&mut h, &inst), Err(FormulationError::RampingTwice)));
    }

    #[test]
    fn dual_rows_gain_ramp_prices() {
        let inst = ramp_instance(5.0, 5.0);
        let cfg = FormulationConfig::new(Variant::Mpc).with_ramping(true);
        let h = build_marketclearing_mpc(&inst, &cfg).unwrap();
        let gu = h.col(Symbol::RampUpPrice(0, 0)).unwrap();
        let gd = h.col(Symbol::RampDownPrice(0, 0)).unwrap();
        let first = h.model.row(h.row_id(RowKey::SubBidDual(0, 0)).unwrap());
        let second = h.model.row(h.row_id(RowKey::SubBidDual(0, 1)).unwrap());
        // step at t: +Q g_up(t) - Q g_down(t); step at t+1: -Q g_up(t) + Q g_down(t)
        assert!(first.terms.contains(&(gu, -10.0)) && first.terms.contains(&(gd, 10.0)));
        assert!(second.terms.contains(&(gu, 10.0)) && second.terms.contains(&(gd, -10.0)));
        let commit = h.model.row(h.row_id(RowKey::CommitDual(0)).unwrap());
        assert!(commit.terms.contains(&(gu, -5.0)) && commit.terms.contains(&(gd, -5.0)));
    }
}
