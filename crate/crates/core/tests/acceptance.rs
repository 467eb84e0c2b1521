//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use mpclear::benders::{solve_benders, BendersMode, BendersOptions, BendersResult, CutPolicy};
use mpclear::clearing::{clear, fixed_commitment_optimum, ClearOptions, ClearingMode, ClearingSolution};
use mpclear::market::{generate_synthetic, mp_loss_instance, ramp_instance, toy_instance, Instance, SyntheticParams};
use mpclear::solver::{Backend, BranchAndCut, HighsBackend, SolveOptions, SolveStatus};
use mpclear::verification::{brute_force_oracle, profit_report, verify};
use std::time::{Duration, Instant};

/// Absolute tolerance for hand-derived golden values.
const ABS_TOL: f64 = 1e-6;
/// Relative tolerance for welfare agreement between methods.
const REL_TOL: f64 = 1e-5;
/// Verification tolerance.
const VERIFY_TOL: f64 = 1e-5;
/// Tolerance used to decide MP feasibility during enumeration.
const ORACLE_TOL: f64 = 1e-6;
const CORPUS_SIZE: u64 = 50;
const BENCH_SEEDS: u64 = 10;

type Outcome = Result<String, String>;

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> String + '_ {
    move |e| format!("{context}: {e}")
}

/// Random instances with at most 4 MP bids, 8 sub-bids and 8 hourly bids over
/// 2 periods and 2 locations.
fn corpus() -> Vec<(String, Instance)> {
    (0..CORPUS_SIZE)
        .map(|seed| {
            let n_mp = 1 + (seed % 4) as usize;
            let steps = if n_mp * 2 * 2 <= 8 { 2 } else { 1 };
            let params = SyntheticParams {
                n_mp,
                steps_per_curve: steps,
                n_periods: 2,
                n_locations: 2,
                demand_steps: 1,
                supply_steps: 1,
                ..SyntheticParams::default()
            };
            (format!("seed-{seed}"), generate_synthetic(seed, &params).expect("generator"))
        })
        .collect()
}

fn corpus_bounds_hold(corpus: &[(String, Instance)]) -> Result<(), String> {
    for (name, inst) in corpus {
        let sub: usize = inst.mp_bids.iter().map(|b| b.sub_bids.len()).sum();
        ensure(
            inst.mp_bids.len() <= 4 && sub <= 8 && inst.hourly_bids.len() <= 8,
            || {
                format!(
                    "{name} exceeds corpus bounds: {} MP bids, {sub} sub-bids, {} hourly bids",
                    inst.mp_bids.len(),
                    inst.hourly_bids.len()
                )
            },
        )?;
        ensure(
            inst.network.periods.len() == 2 && inst.network.locations.len() == 2,
            || format!("{name} is not 2 periods x 2 locations"),
        )?;
    }
    Ok(())
}

fn mpc(inst: &Instance) -> Result<Option<ClearingSolution>, String> {
    Ok(clear(inst, ClearingMode::Mpc, &HighsBackend, &ClearOptions::default())
        .map_err(err("mpc clear"))?
        .solution)
}

fn benders(inst: &Instance, mode: BendersMode, policy: CutPolicy) -> Result<BendersResult, String> {
    let opts = BendersOptions::default();
    let r = match mode {
        BendersMode::Iterative => solve_benders(inst, mode, policy, &HighsBackend, &opts),
        BendersMode::Callback => solve_benders(inst, mode, policy, &BranchAndCut::new(HighsBackend), &opts),
    };
    r.map_err(err("benders"))
}

fn verified(name: &str, inst: &Instance, sol: &ClearingSolution) -> Result<(), String> {
    let report = verify(inst, sol, VERIFY_TOL).map_err(err(name))?;
    let failed: Vec<_> = report.failed().map(|c| c.name.as_str()).collect();
    ensure(report.passed, || format!("{name} fails {failed:?}"))
}

/// Solutions collected by criteria 1-4 for the verification pass.
#[derive(Default)]
struct Produced {
    solutions: Vec<(String, Instance, ClearingSolution)>,
}

impl Produced {
    fn push(&mut self, name: String, inst: &Instance, sol: &ClearingSolution) {
        self.solutions.push((name, inst.clone(), sol.clone()));
    }
}

fn toy_mpc(produced: &mut Produced) -> Outcome {
    let inst = toy_instance();
    let start = Instant::now();
    let sol = mpc(&inst)?.ok_or("toy has no MPC solution")?;
    let profit = profit_report(&inst, &sol).map_err(err("profit table"))?;
    let elapsed = start.elapsed();
    produced.push("toy/mpc".into(), &inst, &sol);

    let price = sol.price(0, 0).ok_or("no price")?;
    ensure((sol.welfare - 300.0).abs() <= ABS_TOL, || format!("welfare {}", sol.welfare))?;
    ensure((price - 50.0).abs() <= ABS_TOL, || format!("price {price}"))?;
    ensure(sol.primal.u == [true, false], || format!("commitments {:?}", sol.primal.u))?;

    // MP1 sells its full 10 MW at the clearing price.
    let mp1 = profit.row("MP1").ok_or("no MP1 row")?;
    let sold = -inst.mp_bids[0].sub_bids[0].quantity * sol.primal.x_sub[0][0];
    let revenue = price * sold;
    let costs = inst.mp_bids[0].sub_bids[0].price * sold + inst.mp_bids[0].fixed_cost;
    for (label, got, want) in [
        ("revenue", mp1.revenue, 500.0),
        ("costs", mp1.marginal_cost + mp1.fixed_cost, 200.0),
        ("profit", mp1.profit, 300.0),
        ("revenue (recomputed)", mp1.revenue, revenue),
        ("profit (recomputed)", mp1.profit, revenue - costs),
    ] {
        ensure((got - want).abs() <= ABS_TOL, || format!("MP1 {label} {got} != {want}"))?;
    }
    let mp2 = profit.row("MP2").ok_or("no MP2 row")?;
    ensure(
        !mp2.accepted && mp2.revenue == 0.0 && mp2.profit == 0.0,
        || format!("MP2 row {mp2:?}"),
    )?;
    ensure(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"))?;
    Ok(format!("welfare 300, price 50, MP1 profit 300, {:.3}s", elapsed.as_secs_f64()))
}

fn toy_mic(produced: &mut Produced) -> Outcome {
    let inst = toy_instance();
    let start = Instant::now();
    let sol = clear(&inst, ClearingMode::Mic, &HighsBackend, &ClearOptions::default())
        .map_err(err("mic clear"))?
        .solution
        .ok_or("toy has no MIC solution")?;
    let elapsed = start.elapsed();
    produced.push("toy/mic".into(), &inst, &sol);

    ensure((sol.welfare - 400.0).abs() <= ABS_TOL, || format!("welfare {}", sol.welfare))?;
    let accepted: Vec<usize> = (0..sol.primal.u.len()).filter(|&c| sol.primal.u[c]).collect();
    ensure(accepted.len() == 1, || format!("accepted {accepted:?}"))?;
    let c = accepted[0];
    let bid = &inst.mp_bids[c];
    let mic = bid.mic.as_ref().ok_or("toy bid lacks income data")?;
    ensure(mic.variable_cost == 10.0, || format!("variable cost {}", mic.variable_cost))?;
    // Income at clearing prices covers start-up plus variable cost of the output.
    let mut income = 0.0;
    let mut output = 0.0;
    for (h, s) in bid.sub_bids.iter().enumerate() {
        let q = -s.quantity * sol.primal.x_sub[c][h];
        let l = inst.network.locations.iter().position(|x| *x == s.location).unwrap();
        let t = inst.network.periods.iter().position(|&p| p == s.period).unwrap();
        income += sol.price(l, t).ok_or("no price")? * q;
        output += q;
    }
    let required = mic.startup_cost + mic.variable_cost * output;
    ensure(income >= required - ABS_TOL, || {
        format!("{}: income {income} < {required}", bid.id)
    })?;
    let report = verify(&inst, &sol, ABS_TOL).map_err(err("verify"))?;
    let cond = report.check("mic-income-condition").ok_or("no income check")?;
    ensure(cond.passed, || format!("income check residual {}", cond.max_residual))?;
    ensure(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"))?;
    Ok(format!(
        "welfare 400, {} accepted, income {income} >= {required}, {:.3}s",
        bid.id,
        elapsed.as_secs_f64()
    ))
}

fn oracle_equivalence(corpus: &[(String, Instance)], produced: &mut Produced) -> Outcome {
    corpus_bounds_hold(corpus)?;
    let start = Instant::now();
    let mut feasible = 0;
    for (name, inst) in corpus {
        let oracle = brute_force_oracle(inst, ClearingMode::Mpc, &HighsBackend, &SolveOptions::default(), ORACLE_TOL)
            .map_err(err(name))?;
        let sol = mpc(inst)?;
        match (&sol, oracle.best_welfare) {
            (Some(s), Some(b)) => {
                ensure(rel_close(s.welfare, b), || format!("{name}: mpc {} vs oracle {b}", s.welfare))?;
                feasible += 1;
            }
            (None, None) => {}
            (s, b) => return Err(format!("{name}: mpc {:?} vs oracle {b:?}", s.as_ref().map(|s| s.welfare))),
        }
        if let Some(s) = sol {
            produced.push(format!("{name}/mpc"), inst, &s);
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("runtime {elapsed:?}"))?;
    Ok(format!(
        "{} instances ({feasible} feasible) match enumeration, {:.1}s",
        corpus.len(),
        elapsed.as_secs_f64()
    ))
}

fn method_equivalence(corpus: &[(String, Instance)], produced: &mut Produced) -> Outcome {
    let mut cases: Vec<(String, Instance)> = corpus.to_vec();
    cases.push(("toy".into(), toy_instance()));
    cases.push(("mp-loss".into(), mp_loss_instance()));
    let mut callback_runs = 0;
    for (name, inst) in &cases {
        let direct = mpc(inst)?;
        for mode in [BendersMode::Iterative, BendersMode::Callback] {
            let r = benders(inst, mode, CutPolicy::StrengthenedPlusNogood)?;
            if mode == BendersMode::Callback && r.stats.fallback.is_none() {
                callback_runs += 1;
            }
            match (&r.solution, &direct) {
                (Some(b), Some(d)) => ensure(rel_close(b.welfare, d.welfare), || {
                    format!("{name} {mode:?}: benders {} vs mpc {}", b.welfare, d.welfare)
                })?,
                (None, None) => {}
                (b, d) => {
                    return Err(format!(
                        "{name} {mode:?}: benders {:?} vs mpc {:?}",
                        b.as_ref().map(|s| s.welfare),
                        d.as_ref().map(|s| s.welfare)
                    ))
                }
            }
            if let Some(s) = &r.solution {
                produced.push(format!("{name}/benders-{mode:?}"), inst, s);
            }
            if name == "mp-loss" {
                let w = r.solution.as_ref().map(|s| s.welfare);
                ensure(w.is_some_and(|w| (w - 200.0).abs() <= ABS_TOL), || {
                    format!("mp-loss {mode:?} welfare {w:?}")
                })?;
                ensure(r.stats.cuts.strengthened() == 1, || {
                    format!("mp-loss {mode:?} strengthened cuts {}", r.stats.cuts.strengthened())
                })?;
            }
        }
    }
    // The enumerated optimum of mp-loss confirms the golden value.
    let oracle = brute_force_oracle(
        &mp_loss_instance(),
        ClearingMode::Mpc,
        &HighsBackend,
        &SolveOptions::default(),
        ORACLE_TOL,
    )
    .map_err(err("mp-loss oracle"))?;
    ensure(oracle.best_welfare.is_some_and(|w| (w - 200.0).abs() <= ABS_TOL), || {
        format!("mp-loss oracle {:?}", oracle.best_welfare)
    })?;
    Ok(format!(
        "{} instances x 2 modes agree ({callback_runs} with lazy callbacks), mp-loss: 1 strengthened cut, welfare 200",
        cases.len()
    ))
}

fn verification_suite(produced: &Produced) -> Outcome {
    for (name, inst, sol) in &produced.solutions {
        verified(name, inst, sol)?;
    }
    Ok(format!("{} solutions verify at {VERIFY_TOL:e}", produced.solutions.len()))
}

fn ramping() -> Outcome {
    let inst = ramp_instance(5.0, 10.0);
    let sol = mpc(&inst)?.ok_or("ramp instance has no solution")?;
    let output: Vec<f64> = inst.mp_bids[0]
        .sub_bids
        .iter()
        .zip(&sol.primal.x_sub[0])
        .map(|(s, x)| -s.quantity * x)
        .collect();
    ensure(
        (output[0] - 2.0).abs() <= ABS_TOL && (output[1] - 7.0).abs() <= ABS_TOL,
        || format!("output {output:?}"),
    )?;
    // 9 MWh served at 50, produced at 10.
    ensure((sol.welfare - 360.0).abs() <= ABS_TOL, || format!("welfare {}", sol.welfare))?;
    let oracle = brute_force_oracle(&inst, ClearingMode::Mpc, &HighsBackend, &SolveOptions::default(), ORACLE_TOL)
        .map_err(err("ramp oracle"))?;
    ensure(oracle.best_welfare.is_some_and(|w| (w - 360.0).abs() <= ABS_TOL), || {
        format!("oracle {:?}", oracle.best_welfare)
    })?;
    let report = verify(&inst, &sol, ABS_TOL).map_err(err("verify"))?;
    let ident = report.check("ramping-surplus-income").ok_or("no ramping identity check")?;
    ensure(ident.passed && ident.max_residual <= ABS_TOL, || {
        format!("ramping identity residual {}", ident.max_residual)
    })?;
    ensure(report.passed, || format!("ramp solution fails {:?}", report.failed().map(|c| &c.name).collect::<Vec<_>>()))?;

    let loose = mpc(&ramp_instance(10.0, 10.0))?.ok_or("non-binding ramp has no solution")?;
    let mut free = ramp_instance(10.0, 10.0);
    free.mp_bids[0].ramp = None;
    let unramped = mpc(&free)?.ok_or("unramped instance has no solution")?;
    ensure(loose.welfare == unramped.welfare, || {
        format!("non-binding ramp {} vs no ramp {}", loose.welfare, unramped.welfare)
    })?;
    Ok(format!(
        "output (2, 7), welfare 360, identity residual {:e}, non-binding {} == {}",
        ident.max_residual, loose.welfare, unramped.welfare
    ))
}

/// Gap as the bench command prints it.
fn gap_column(gap: f64) -> String {
    if gap.is_finite() {
        format!("{:.2}", gap * 100.0 + 0.0)
    } else {
        "inf".into()
    }
}

fn bench_substitute() -> Outcome {
    let params = SyntheticParams::default();
    let mut rows = 0;
    for seed in 0..BENCH_SEEDS {
        let inst = generate_synthetic(seed, &params).map_err(err("generator"))?;
        let direct = clear(&inst, ClearingMode::Mpc, &HighsBackend, &ClearOptions::default()).map_err(err("mpc"))?;
        ensure(gap_column(direct.gap) == "0.00", || format!("seed {seed} mpc gap {}", direct.gap))?;
        let base = direct.solution.as_ref().map(|s| s.welfare);
        for mode in [BendersMode::Iterative, BendersMode::Callback] {
            let r = benders(&inst, mode, CutPolicy::StrengthenedPlusNogood)?;
            ensure(r.status == SolveStatus::Optimal || r.status == SolveStatus::Infeasible, || {
                format!("seed {seed} {mode:?} status {:?}", r.status)
            })?;
            ensure(gap_column(r.gap) == "0.00", || format!("seed {seed} {mode:?} gap {}", r.gap))?;
            let w = r.solution.as_ref().map(|s| s.welfare);
            ensure(
                match (w, base) {
                    (Some(a), Some(b)) => rel_close(a, b),
                    (None, None) => true,
                    _ => false,
                },
                || format!("seed {seed} {mode:?} welfare {w:?} vs mpc {base:?}"),
            )?;
            rows += 1;
        }
    }
    Ok(format!("{BENCH_SEEDS} seeds: {rows} Benders runs with gap 0.00 and matching welfare"))
}

fn cut_soundness(corpus: &[(String, Instance)]) -> Outcome {
    let mut cases: Vec<(String, Instance)> = corpus.to_vec();
    cases.push(("toy".into(), toy_instance()));
    cases.push(("mp-loss".into(), mp_loss_instance()));
    let opts = SolveOptions::default();
    let bc = BranchAndCut::new(HighsBackend);
    let runs: [(BendersMode, CutPolicy, &dyn Backend); 4] = [
        (BendersMode::Iterative, CutPolicy::StrengthenedPlusNogood, &HighsBackend),
        (BendersMode::Iterative, CutPolicy::NogoodOnly, &HighsBackend),
        (BendersMode::Iterative, CutPolicy::ClassicalOnly, &HighsBackend),
        (BendersMode::Callback, CutPolicy::StrengthenedPlusNogood, &bc),
    ];
    let (mut cuts, mut checks) = (0usize, 0usize);
    for (name, inst) in &cases {
        if inst.mp_bids.len() > 4 {
            continue;
        }
        let oracle =
            brute_force_oracle(inst, ClearingMode::Mpc, &HighsBackend, &opts, ORACLE_TOL).map_err(err(name))?;
        let mut feasible_points = Vec::new();
        for rec in oracle.records.iter().filter(|r| r.mp_feasible) {
            let fixed = fixed_commitment_optimum(inst, &rec.u, &HighsBackend, &opts)
                .map_err(err(name))?
                .ok_or_else(|| format!("{name}: MP-feasible {:?} has no primal", rec.u))?;
            feasible_points.push((rec.u.clone(), fixed.primal));
        }
        for (mode, policy, backend) in runs {
            let r = solve_benders(inst, mode, policy, backend, &BendersOptions::default()).map_err(err(name))?;
            for cut in r.cuts.iter().filter(|c| c.is_global()) {
                cuts += 1;
                for (u, primal) in &feasible_points {
                    checks += 1;
                    ensure(cut.admits(primal, ORACLE_TOL), || {
                        format!("{name} {mode:?}/{policy:?}: {:?} cut excludes MP-feasible {u:?}", cut.kind)
                    })?;
                }
            }
        }
    }
    Ok(format!("{cuts} global cuts checked against every MP-feasible vector ({checks} pairs)"))
}

fn main() {
    let corpus = corpus();
    let mut produced = Produced::default();
    let results: Vec<(&str, Outcome)> = vec![
        ("toy MPC clearing and profit table", toy_mpc(&mut produced)),
        ("toy MIC clearing and income condition", toy_mic(&mut produced)),
        ("direct MPC equals enumeration", oracle_equivalence(&corpus, &mut produced)),
        ("Benders equals direct MPC", method_equivalence(&corpus, &mut produced)),
        ("every produced solution verifies", verification_suite(&produced)),
        ("ramping limits", ramping()),
        ("bench on synthetic seeds", bench_substitute()),
        ("global cuts are sound", cut_soundness(&corpus)),
    ];
    let mut failures = 0;
    for (i, (label, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {label}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {} FAIL  {label}: {why}", i + 1);
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
