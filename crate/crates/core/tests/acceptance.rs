//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines always reach the console.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use gaseq_core::analytics::{consumer_surplus, price_decomposition, RegionMap};
use gaseq_core::calibration::{adjust_reference_sales, calibrate, CalibrationBounds, CalibrationOptions};
use gaseq_core::io::{
    build_report, load_model, load_model_file, load_updates, parse_model_file, read_report, rederive_aggregates,
    write_report, ModelFile,
};
use gaseq_core::lcp::{brute_force_lcp, solve_fb_newton, solve_lemke, LcpProblem, SolverOptions};
use gaseq_core::market::{check_equilibrium, solve_model, InvariantTolerances, MarketModel};
use gaseq_core::scenario::{
    build_horizon, build_plan, compare, run_plan, ExpansionKind, RunCode, RunOutcome, SimulationPlan, YearUpdate,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn lcp_oracle_equivalence() -> Outcome {
    let mut rng = common::rng(2024);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let d = rng.gen_range(1..=10);
        let (m, q) = common::random_spd(&mut rng, d);
        let p = LcpProblem::new(m, q).map_err(|e| e.to_string())?;
        let oracle = brute_force_lcp(&p, &opts()).map_err(|e| e.to_string())?;
        let lemke = solve_lemke(&p, &opts()).map_err(|e| e.to_string())?;
        let newton = solve_fb_newton(&p, &vec![0.0; d], &opts()).map_err(|e| e.to_string())?;
        ensure(oracle.is_solved() && lemke.is_solved() && newton.is_solved(), || {
            format!("problem {k}: {} / {} / {}", oracle.status, lemke.status, newton.status)
        })?;
        let gap = (&lemke.z - &oracle.z).amax().max((&newton.z - &oracle.z).amax());
        worst = worst.max(gap);
        ensure(gap <= 1e-6, || format!("problem {k} (d={d}) differs by {gap:.3e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("200 problems, max gap {worst:.2e}, {secs:.2} s"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn analytic_market_oracles() -> Outcome {
    let cases: [(&str, f64, f64); 3] = [
        ("monopoly", 200.0 / 3.0, 500.0),
        ("competitive", 400.0 / 3.0, 100.0),
        ("duopoly", 400.0 / 9.0, 1100.0 / 3.0),
    ];
    let mut worst: f64 = 0.0;
    for (name, q, lambda) in cases {
        let model = common::model(name);
        let sol = solve_model(&model, &opts()).map_err(|e| e.to_string())?;
        for f in 0..model.traders.len() {
            let e = rel(sol.sales[[f, 0, 0]], q);
            worst = worst.max(e);
            ensure(e <= 1e-6, || format!("{name}: q = {} expected {q}", sol.sales[[f, 0, 0]]))?;
        }
        let e = rel(sol.price[[0, 0]], lambda);
        worst = worst.max(e);
        ensure(e <= 1e-6, || format!("{name}: λ = {} expected {lambda}", sol.price[[0, 0]]))?;
    }
    Ok(format!("monopoly, competitive, duopoly; max rel error {worst:.2e}"))
}

fn invariant_suite() -> Outcome {
    let mut checked = Vec::new();
    for name in common::EQUILIBRIUM_FIXTURES {
        let model = common::any_model(name);
        let sol = solve_model(&model, &opts()).map_err(|e| format!("{name}: {e}"))?;
        let v = check_equilibrium(&model, &sol, &InvariantTolerances::default());
        ensure(v.is_empty(), || format!("{name}: {}", v[0]))?;
        checked.push(name);
    }
    ensure(checked.len() >= 6 && checked.contains(&"two_node"), || "too few fixtures".into())?;
    Ok(format!("{} fixtures: {}", checked.len(), checked.join(", ")))
}

fn calibration_roundtrip() -> Outcome {
    let file = load_model_file(common::fixture_path("calib5.json")).map_err(|e| e.to_string())?;
    let model = file.model();
    let (nodes, traders, periods) = (model.nodes.len(), model.traders.len(), model.periods.len());
    ensure((nodes, traders, periods) == (5, 3, 2), || format!("fixture is {nodes}/{traders}/{periods}"))?;
    let start = Instant::now();
    let mut data = file.calibration.ok_or("calib5 has no calibration data")?;
    data.adjusted_sales = Some(adjust_reference_sales(&data, &model).sales);
    let bounds = CalibrationBounds::from_data(&model, &data).map_err(|e| e.to_string())?;
    let r = calibrate(&model, &data, &bounds, &CalibrationOptions::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let dev = r.metrics.consumption.max_rel;
    ensure(dev <= 0.025, || format!("max relative consumption deviation {dev:.4}"))?;
    ensure(bounds.contains(&r.params), || "parameters outside their bounds".into())?;
    ensure(secs < 30.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max rel consumption deviation {:.2}%, {secs:.2} s", dev * 100.0))
}

fn expected_code(kind: ExpansionKind) -> RunCode {
    match kind {
        ExpansionKind::Regas => RunCode::R,
        ExpansionKind::Storage => RunCode::S,
        ExpansionKind::Pipeline => RunCode::A,
    }
}

fn check_plan(plan: &SimulationPlan, k: usize) -> Result<(), String> {
    ensure(plan.runs.len() == k + 5, || format!("k={k}: {} runs", plan.runs.len()))?;
    let all: Vec<usize> = (0..k).collect();
    for run in &plan.runs {
        let m = &run.mask;
        let (code, consumer, supply, exps, reference): (RunCode, bool, bool, Vec<usize>, Option<usize>) = match run.id {
            0 => (RunCode::Reference, false, false, vec![], None),
            1 => (RunCode::C, true, false, vec![], Some(0)),
            2 => (RunCode::PL, false, true, vec![], Some(0)),
            3 => (RunCode::PLC, true, true, vec![], Some(0)),
            i if i < k + 4 => (expected_code(plan.update.expansions[i - 4].kind), true, true, vec![i - 4], Some(3)),
            _ => (RunCode::RSA, true, true, all.clone(), Some(3)),
        };
        ensure(
            run.code == code && m.consumer == consumer && m.supply == supply && m.expansions == exps && run.reference == reference,
            || format!("k={k}: run {} is {:?} {:?} ref {:?}", run.id, run.code, run.mask, run.reference),
        )?;
    }
    Ok(())
}

fn protocol_conformance() -> Outcome {
    let model = common::model("desk10");
    let full = common::updates("desk10_updates").remove(0);
    for k in [0usize, 2, 8] {
        let mut u = full.clone();
        u.expansions.truncate(k);
        let plan = build_plan(&model, &u).map_err(|e| e.to_string())?;
        check_plan(&plan, k)?;
    }
    let calib = YearUpdate { calibration_year: true, ..full };
    let plan = build_plan(&model, &calib).map_err(|e| e.to_string())?;
    let run = &plan.runs[0];
    ensure(plan.runs.len() == 1 && run.code == RunCode::RsaPlc && run.reference.is_none(), || {
        format!("calibration year plan has {} runs", plan.runs.len())
    })?;
    ensure(run.mask.consumer && run.mask.supply && run.mask.expansions.len() == 15, || "calibration run mask".into())?;
    Ok("k ∈ {0, 2, 8} give 5, 7, 13 runs; calibration year gives 1".into())
}

fn decomposition_closure() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut service_profit: f64 = 0.0;
    let mut trader_profit: f64 = 0.0;
    let mut count = 0;
    for name in common::EQUILIBRIUM_FIXTURES {
        let model = common::any_model(name);
        let sol = solve_model(&model, &opts()).map_err(|e| format!("{name}: {e}"))?;
        for (n, _) in model.consumer_nodes() {
            for t in 0..model.periods.len() {
                if sol.consumption[[n, t]] <= 1e-9 {
                    continue;
                }
                let c = price_decomposition(&model, &sol, n, t).map_err(|e| format!("{name}: {e}"))?;
                let gap = (c.total() - c.price).abs();
                worst = worst.max(gap);
                ensure(gap <= 1e-6, || format!("{name}: node {n} period {t} off by {gap:.3e}"))?;
                if name == "congested" {
                    service_profit = service_profit.max(c.service_profit);
                }
                if name == "monopoly" {
                    trader_profit = trader_profit.max(c.trader_profit);
                }
                count += 1;
            }
        }
    }
    ensure(service_profit > 1.0, || format!("congested service_profit {service_profit}"))?;
    ensure(trader_profit > 1.0, || format!("monopoly trader_profit {trader_profit}"))?;
    Ok(format!(
        "{count} markets, max gap {worst:.2e} k€/mcm; congestion rent {service_profit:.1}, trader margin {trader_profit:.1}"
    ))
}

fn simulate(model: &MarketModel, updates: &[YearUpdate]) -> Result<Vec<(SimulationPlan, BTreeMap<usize, RunOutcome>)>, String> {
    build_horizon(model, updates)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|plan| {
            let out = run_plan(&plan, &opts(), 1).map_err(|e| e.to_string())?;
            Ok((plan, out))
        })
        .collect()
}

fn welfare_identities() -> Outcome {
    let mut deltas = 0;
    for (model_name, updates_name) in [
        ("desk10", "desk10_updates"),
        ("new_source", "new_source_updates"),
        ("tap_tanap", "tap_tanap_updates"),
        ("two_node", "updates_ky2"),
    ] {
        let model = common::model(model_name);
        let regions = RegionMap::from_model(&model);
        for (plan, out) in simulate(&model, &common::updates(updates_name))? {
            for run in &plan.runs {
                let Some(r) = run.reference else { continue };
                let d = compare(&out[&run.id], &out[&r], &regions).map_err(|e| e.to_string())?;
                let e1 = (d.sw_eu - (d.cs_eu + d.ps_eu)).abs();
                let e2 = (d.sw_total - (d.cs_eu + d.ps_total)).abs();
                ensure(e1 <= 1e-9 && e2 <= 1e-9, || format!("{model_name} run {}: {e1:.2e} {e2:.2e}", run.id))?;
                deltas += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for name in common::EQUILIBRIUM_FIXTURES {
        let model = common::any_model(name);
        let sol = solve_model(&model, &opts()).map_err(|e| e.to_string())?;
        for (n, node) in model.consumer_nodes() {
            for (t, p) in model.periods.iter().enumerate() {
                let s = sol.consumption[[n, t]];
                let closed = -node.demand[t].slope * s * s / 2.0 * p.duration / 1000.0;
                let cs = consumer_surplus(&model, &sol, n, t).per_period;
                let e = if closed == 0.0 { cs.abs() } else { rel(cs, closed) };
                worst = worst.max(e);
                ensure(e <= 1e-9, || format!("{name}: CS {cs} vs {closed}"))?;
            }
        }
    }
    Ok(format!("{deltas} delta reports; CS closed form max rel error {worst:.2e}"))
}

fn directional_checks() -> Outcome {
    let model = common::model("new_source");
    let regions = RegionMap::from_model(&model);
    let years = simulate(&model, &common::updates("new_source_updates"))?;
    let (plan, out) = &years[0];
    let run = plan.runs.iter().find(|r| r.code == RunCode::A).ok_or("no pipeline run")?;
    let d = compare(&out[&run.id], &out[&run.reference.unwrap()], &regions).map_err(|e| e.to_string())?;
    for c in ["C1", "C2"] {
        ensure(d.countries[c].cs > 0.0, || format!("ΔCS at {c} is {}", d.countries[c].cs))?;
    }
    let incumbent = d.ps_by_trader["TI"];
    ensure(incumbent < 0.0, || format!("incumbent ΔPS is {incumbent}"))?;
    ensure(d.ps_eu < 0.0, || format!("ΔPS EU is {}", d.ps_eu))?;
    let null_years = simulate(&model, &common::updates("new_source_null"))?;
    let report = build_report(&null_years, &regions).map_err(|e| e.to_string())?;
    for row in report.rows.iter().filter(|r| r.reference.is_some()) {
        let s = row.summary.as_ref().ok_or("null run failed")?;
        let nonzero = s.countries.values().any(|c| c.cs != 0.0 || c.ps != 0.0 || c.price != 0.0 || c.consumption != 0.0);
        ensure(!nonzero && s.sw_abs_sum == 0.0, || format!("run {} is not null", row.simulation_id))?;
    }
    Ok(format!(
        "ΔCS C1 {:.1} C2 {:.1} M€/y, incumbent ΔPS {incumbent:.1} M€/y; zero expansion gives a null report",
        d.countries["C1"].cs, d.countries["C2"].cs
    ))
}

fn run_to_csv(model_path: &str, updates_path: &str) -> Result<Vec<u8>, String> {
    let model = load_model(common::fixture_path(model_path)).map_err(|e| e.to_string())?;
    let updates = load_updates(common::fixture_path(updates_path)).map_err(|e| e.to_string())?;
    let years = simulate(&model, &updates)?;
    let report = build_report(&years, &RegionMap::from_model(&model)).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_report(&report, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn throughput() -> Outcome {
    let start = Instant::now();
    let bytes = run_to_csv("desk10.json", "desk10_updates.json")?;
    let parsed = read_report(bytes.as_slice()).map_err(|e| e.to_string())?;
    let checks = rederive_aggregates(&parsed).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let model = common::model("desk10");
    ensure(model.nodes.len() == 10 && model.traders.len() == 5 && model.periods.len() == 2, || "desk10 shape".into())?;
    ensure(parsed.rows.len() == 20 && checks.len() == 20, || format!("{} rows", parsed.rows.len()))?;
    ensure(checks.iter().all(|c| c.max_abs_difference() <= 1e-9), || "aggregates differ".into())?;
    ensure(secs < 60.0, || format!("took {secs:.2} s"))?;
    Ok(format!("20 runs on 10 nodes / 5 traders / 2 periods in {secs:.2} s"))
}

fn determinism_and_round_trip() -> Outcome {
    let a = run_to_csv("desk10.json", "desk10_updates.json")?;
    let b = run_to_csv("desk10.json", "desk10_updates.json")?;
    ensure(a == b, || "reports differ between runs".into())?;
    let mut files = 0;
    for entry in std::fs::read_dir(common::fixture_path("")).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        if !text.contains("\"nodes\"") {
            continue;
        }
        let first = parse_model_file(&text, true).map_err(|e| format!("{}: {e}", path.display()))?;
        let again = parse_model_file(&first.to_json(), true).map_err(|e| e.to_string())?;
        ensure(first == again && ModelFile::from_model(&again.model()).model() == first.model(), || {
            format!("{} does not round-trip", path.display())
        })?;
        files += 1;
    }
    Ok(format!("two reports byte-identical ({} bytes); {files} model files round-trip", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("LCP oracle equivalence", lcp_oracle_equivalence),
        ("Analytic market oracles", analytic_market_oracles),
        ("Equilibrium invariant suite", invariant_suite),
        ("Calibration roundtrip", calibration_roundtrip),
        ("Protocol conformance", protocol_conformance),
        ("Decomposition closure", decomposition_closure),
        ("Welfare identities", welfare_identities),
        ("Directional scenario checks", directional_checks),
        ("Throughput", throughput),
        ("Determinism & round-trip", determinism_and_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
