use approx::assert_abs_diff_eq;
use mpclear::benders::{solve_benders, BendersMode, BendersOptions, CutPolicy};
use mpclear::clearing::{clear, clear_fixed_commitments, ClearOptions, ClearingMode, ClearingSolution};
use mpclear::market::{mp_loss_instance, ramp_instance, toy_instance, Instance};
use mpclear::solver::{BranchAndCut, HighsBackend, SolveOptions};
use mpclear::verification::{brute_force_oracle, profit_report, verify, OracleError, VerifyError};

const TOL: f64 = 1e-6;

fn clear_mode(inst: &Instance, mode: ClearingMode) -> ClearingSolution {
    clear(inst, mode, &HighsBackend, &ClearOptions::default())
        .unwrap()
        .solution
        .unwrap()
}

fn assert_verified(inst: &Instance, sol: &ClearingSolution, tol: f64) {
    let report = verify(inst, sol, tol).unwrap();
    let failed: Vec<_> = report.failed().map(|c| (&c.name, c.max_residual, &c.offending)).collect();
    assert!(report.passed, "failed checks: {failed:?}");
}

#[test]
fn toy_mpc_optimum_passes_every_check() {
    let toy = toy_instance();
    let sol = clear_mode(&toy, ClearingMode::Mpc);
    let report = verify(&toy, &sol, TOL).unwrap();
    assert!(report.passed, "{:?}", report.failed().collect::<Vec<_>>());
    for name in [
        "balance",
        "dual-hourly",
        "dual-sub-bid",
        "dual-commitment",
        "complementarity-hourly",
        "complementarity-commitment",
        "surplus-accounting",
        "surplus-hourly",
        "surplus-sub-bid",
        "money-status-hourly",
        "mp-condition",
        "shadow-cost-acceptance-zero",
    ] {
        assert!(report.check(name).is_some(), "missing check {name}");
    }
    // MP1: revenue 500 against marginal cost 100 plus fixed cost 100.
    let table = profit_report(&toy, &sol).unwrap();
    let mp1 = table.row("MP1").unwrap();
    assert_abs_diff_eq!(mp1.revenue, 500.0, epsilon = TOL);
    assert_abs_diff_eq!(mp1.marginal_cost + mp1.fixed_cost, 200.0, epsilon = TOL);
    assert_abs_diff_eq!(mp1.profit, 300.0, epsilon = TOL);
}

#[test]
fn price_off_by_one_breaks_at_the_money_status() {
    let toy = toy_instance();
    let mut sol = clear_mode(&toy, ClearingMode::Mpc);
    sol.duals.as_mut().unwrap().prices[0][0] = 49.0;
    let report = verify(&toy, &sol, TOL).unwrap();
    assert!(!report.passed);
    let money = report.check("money-status-hourly").unwrap();
    assert!(!money.passed);
    // D1 is fractionally executed and must be at the money.
    assert!(money.offending.contains(&0));
}

#[test]
fn missing_duals_is_structural() {
    let toy = toy_instance();
    let mut sol = clear_mode(&toy, ClearingMode::Mpc);
    sol.duals = None;
    assert!(matches!(verify(&toy, &sol, TOL), Err(VerifyError::MissingDuals(_))));
    assert!(profit_report(&toy, &sol).is_err());
}

#[test]
fn wrong_dimensions_are_structural() {
    let toy = toy_instance();
    let mut sol = clear_mode(&toy, ClearingMode::Mpc);
    sol.primal.x_hourly.pop();
    assert!(matches!(verify(&toy, &sol, TOL), Err(VerifyError::Dimension(_))));
}

#[test]
fn toy_mic_income_identity_holds() {
    let toy = toy_instance();
    let sol = clear_mode(&toy, ClearingMode::Mic);
    let report = verify(&toy, &sol, TOL).unwrap();
    assert!(report.passed, "{:?}", report.failed().collect::<Vec<_>>());
    assert!(report.check("mic-income-identity").unwrap().max_residual <= TOL);
    assert!(report.check("mic-income-condition").unwrap().passed);
    let table = profit_report(&toy, &sol).unwrap();
    let accepted: Vec<_> = table.rows.iter().filter(|r| r.accepted).collect();
    assert_eq!(accepted.len(), 1);
    assert!(accepted[0].mic_margin.unwrap() >= -TOL);
}

#[test]
fn every_clearing_path_verifies() {
    let bc = BranchAndCut::new(HighsBackend);
    for inst in [toy_instance(), mp_loss_instance(), ramp_instance(5.0, 5.0)] {
        for mode in [ClearingMode::Mpc, ClearingMode::Umfs] {
            assert_verified(&inst, &clear_mode(&inst, mode), 1e-5);
        }
        for (mode, backend) in [
            (BendersMode::Iterative, &HighsBackend as &dyn mpclear::solver::Backend),
            (BendersMode::Callback, &bc),
        ] {
            let r = solve_benders(&inst, mode, CutPolicy::StrengthenedPlusNogood, backend, &BendersOptions::default())
                .unwrap();
            assert_verified(&inst, &r.solution.unwrap(), 1e-5);
        }
    }
    let toy = toy_instance();
    assert_verified(&toy, &clear_mode(&toy, ClearingMode::Mic), 1e-5);
}

#[test]
fn forced_dual_acceptance_shows_losses() {
    let toy = toy_instance();
    let sol = clear_fixed_commitments(&toy, &[true, true], &HighsBackend, &SolveOptions::default())
        .unwrap()
        .unwrap();
    assert_abs_diff_eq!(sol.price(0, 0).unwrap(), 10.0, epsilon = TOL);
    let report = verify(&toy, &sol, TOL).unwrap();
    assert!(report.passed, "{:?}", report.failed().collect::<Vec<_>>());
    let table = profit_report(&toy, &sol).unwrap();
    assert_abs_diff_eq!(table.rows[0].profit, -100.0, epsilon = TOL);
    assert_abs_diff_eq!(table.rows[1].profit, -200.0, epsilon = TOL);
}

#[test]
fn rejected_bid_row_is_zero() {
    let toy = toy_instance();
    let sol = clear_mode(&toy, ClearingMode::Mpc);
    let mp2 = profit_report(&toy, &sol).unwrap().row("MP2").unwrap().clone();
    assert!(!mp2.accepted);
    for v in [mp2.revenue, mp2.marginal_cost, mp2.fixed_cost, mp2.profit] {
        assert_eq!(v, 0.0);
    }
}

#[test]
fn mp_loss_rejection_is_paradoxical_but_legal() {
    let inst = mp_loss_instance();
    let sol = clear_mode(&inst, ClearingMode::Mpc);
    let report = verify(&inst, &sol, TOL).unwrap();
    assert!(report.passed);
    assert_eq!(report.paradoxical_rejections.len(), 1);
    assert!(report.paradoxical_rejections[0].potential_profit > 0.0);
}

#[test]
fn ramp_surplus_identity_is_tight() {
    let inst = ramp_instance(5.0, 5.0);
    let sol = clear_mode(&inst, ClearingMode::Mpc);
    let report = verify(&inst, &sol, TOL).unwrap();
    assert!(report.passed, "{:?}", report.failed().collect::<Vec<_>>());
    assert!(report.check("ramping-surplus-income").unwrap().max_residual <= 1e-6);
    assert!(report.check("complementarity-ramping").unwrap().passed);
}

#[test]
fn oracle_toy_mpc() {
    let toy = toy_instance();
    let rep = brute_force_oracle(&toy, ClearingMode::Mpc, &HighsBackend, &SolveOptions::default(), TOL).unwrap();
    assert_eq!(rep.records.len(), 4);
    assert_eq!(rep.best.as_deref(), Some(&[true, false][..]));
    assert_abs_diff_eq!(rep.best_welfare.unwrap(), 300.0, epsilon = TOL);
    assert!(!rep.record(&[true, true]).unwrap().mp_feasible);
    let mp2 = rep.record(&[false, true]).unwrap();
    assert!(mp2.mp_feasible);
    assert_abs_diff_eq!(mp2.welfare.unwrap(), 200.0, epsilon = TOL);
    // Worker optimum and price-support minimum agree on every vector.
    for r in &rep.records {
        assert_abs_diff_eq!(r.worker_objective.unwrap(), r.support_objective, epsilon = 1e-6);
    }
}

#[test]
fn oracle_toy_mic_accepts_either_bid() {
    let toy = toy_instance();
    let rep = brute_force_oracle(&toy, ClearingMode::Mic, &HighsBackend, &SolveOptions::default(), TOL).unwrap();
    assert_abs_diff_eq!(rep.best_welfare.unwrap(), 400.0, epsilon = TOL);
    let best: Vec<_> = rep.optimal_set(TOL).iter().map(|r| r.u.clone()).collect();
    assert!(best.contains(&vec![true, false]));
    assert!(best.contains(&vec![false, true]));
}

#[test]
fn oracle_mp_loss() {
    let inst = mp_loss_instance();
    let rep = brute_force_oracle(&inst, ClearingMode::Mpc, &HighsBackend, &SolveOptions::default(), TOL).unwrap();
    assert_eq!(rep.best.as_deref(), Some(&[false][..]));
    assert_abs_diff_eq!(rep.best_welfare.unwrap(), 200.0, epsilon = TOL);
    assert!(!rep.record(&[true]).unwrap().mp_feasible);
}

#[test]
fn oracle_refuses_large_instances_and_other_modes() {
    let mut inst = toy_instance();
    let template = inst.mp_bids[0].clone();
    for j in 0..20 {
        let mut b = template.clone();
        b.id = format!("X{j}");
        inst.mp_bids.push(b);
    }
    let err = brute_force_oracle(&inst, ClearingMode::Mpc, &HighsBackend, &SolveOptions::default(), TOL).unwrap_err();
    assert!(matches!(err, OracleError::TooManyBids { n: 22, .. }));
    assert!(err.to_string().contains("Benders"));
    let err = brute_force_oracle(&toy_instance(), ClearingMode::Umfs, &HighsBackend, &SolveOptions::default(), TOL)
        .unwrap_err();
    assert!(matches!(err, OracleError::Mode(_)));
}

#[test]
fn reports_serialize() {
    let toy = toy_instance();
    let sol = clear_mode(&toy, ClearingMode::Mpc);
    let report = verify(&toy, &sol, TOL).unwrap();
    let json = report.to_json();
    assert_eq!(json["passed"], true);
    assert!(json["checks"].as_array().unwrap().len() > 10);
    let csv = report.to_csv();
    assert!(csv.starts_with("check,max_residual,passed,evaluated,offending"));
    assert_eq!(csv.lines().count(), report.checks.len() + 1);
    let table = profit_report(&toy, &sol).unwrap();
    assert!(table.to_csv().starts_with("bid,accepted,revenue,marginal_cost,fixed_cost,profit"));
    assert_eq!(table.to_json()["rows"].as_array().unwrap().len(), 2);
}
