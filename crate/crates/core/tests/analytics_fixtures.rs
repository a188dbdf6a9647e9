mod common;

use std::time::Instant;

use gaseq_core::analytics::{
    consumer_surplus, market_shares_and_hhi, price_decomposition, producer_surplus, welfare_summary, PeriodScope,
    RegionMap, ShareScope,
};
use gaseq_core::calibration::{adjust_reference_sales, calibrate, CalibrationBounds, CalibrationData, CalibrationOptions};
use gaseq_core::io::load_model_file;
use gaseq_core::lcp::SolverOptions;
use gaseq_core::market::{assemble_lcp, extract_solution, solve_model_from, IndexMap};
use rand::seq::SliceRandom;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn price_components_close_on_every_fixture() {
    for name in common::EQUILIBRIUM_FIXTURES {
        let model = common::any_model(name);
        let sol = gaseq_core::market::solve_model(&model, &opts()).unwrap();
        for (n, _) in model.consumer_nodes() {
            for t in 0..model.periods.len() {
                if sol.consumption[[n, t]] <= 1e-9 {
                    continue;
                }
                let c = price_decomposition(&model, &sol, n, t).unwrap();
                assert!((c.total() - c.price).abs() < 1e-6, "{name} node {n} period {t}: {c:?}");
            }
        }
    }
}

#[test]
fn consumer_surplus_has_the_closed_form() {
    for name in ["two_node", "calib5", "desk10"] {
        let model = common::model(name);
        let sol = gaseq_core::market::solve_model(&model, &opts()).unwrap();
        for (n, node) in model.consumer_nodes() {
            for t in 0..model.periods.len() {
                let s = sol.consumption[[n, t]];
                let closed = -node.demand[t].slope * s * s / 2.0 * model.periods[t].duration / 1000.0;
                let cs = consumer_surplus(&model, &sol, n, t).per_period;
                assert!((cs - closed).abs() <= 1e-9 * closed.abs().max(1.0), "{name}: {cs} vs {closed}");
            }
        }
    }
}

#[test]
fn absolute_summary_adds_up() {
    let model = common::model("desk10");
    let sol = gaseq_core::market::solve_model(&model, &opts()).unwrap();
    let s = welfare_summary(&model, &sol, None, &RegionMap::from_model(&model)).unwrap();
    let ps: f64 = (0..model.traders.len()).map(|f| producer_surplus(&model, &sol, f).annual).sum();
    assert!((s.ps_total - ps).abs() < 1e-6 * ps.abs());
    assert!((s.sw_eu - s.cs_eu - s.ps_eu).abs() < 1e-9);
    assert!((s.sw_total - s.cs_eu - s.ps_total).abs() < 1e-9);
}

#[test]
fn hhi_lies_between_bounds_on_desk10() {
    let model = common::model("desk10");
    let sol = gaseq_core::market::solve_model(&model, &opts()).unwrap();
    for (n, _) in model.consumer_nodes() {
        let m = market_shares_and_hhi(&model, &sol, ShareScope::Node(n), PeriodScope::Year).unwrap();
        let k = m.shares.len() as f64;
        assert!(m.hhi <= 10_000.0 + 1e-9 && m.hhi >= 10_000.0 / k - 1e-9, "{m:?}");
        let total: f64 = m.shares.iter().map(|s| s.1).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }
    let eu = market_shares_and_hhi(&model, &sol, ShareScope::EuAggregate, PeriodScope::Year).unwrap();
    assert!(eu.shares.iter().any(|(l, _)| l == gaseq_core::analytics::DOMESTIC_PRODUCTION));
}

/// Extraction looks variables up by identity, so the row order of the
/// index map does not matter.
#[test]
fn extraction_ignores_variable_order() {
    let model = common::model("two_node");
    let (p, index) = assemble_lcp(&model).unwrap();
    let solved = solve_model_from(&model, &opts(), None).unwrap();
    let mut order: Vec<usize> = (0..p.dim()).collect();
    order.shuffle(&mut common::rng(5));
    let vars = order.iter().map(|&i| index.var(i)).collect();
    let shuffled = IndexMap::from_vars(vars).unwrap();
    let z: Vec<f64> = order.iter().map(|&i| solved.z[i]).collect();
    let a = extract_solution(&model, &index, &solved.z).unwrap();
    let b = extract_solution(&model, &shuffled, &z).unwrap();
    assert_eq!(a, b);
    let zero = extract_solution(&model, &index, &vec![0.0; p.dim()]).unwrap();
    assert!(zero.consumption.iter().chain(zero.throughput.iter()).all(|&v| v == 0.0));
    assert!(extract_solution(&model, &index, &[0.0]).is_err());
}

#[test]
fn calib5_recovers_its_data() {
    let file = load_model_file(common::fixture_path("calib5.json")).unwrap();
    let model = file.model();
    let mut data: CalibrationData = file.calibration.unwrap();
    data.adjusted_sales = Some(adjust_reference_sales(&data, &model).sales);
    let bounds = CalibrationBounds::from_data(&model, &data).unwrap();
    let start = Instant::now();
    let r = calibrate(&model, &data, &bounds, &CalibrationOptions::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 30.0);
    assert!(r.converged);
    assert!(r.metrics.consumption.max_rel <= 0.025);
    assert!(bounds.contains(&r.params));
    assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn calibration_is_reproducible_for_a_seed() {
    let file = load_model_file(common::fixture_path("calib5.json")).unwrap();
    let model = file.model();
    let data = file.calibration.unwrap();
    let bounds = CalibrationBounds::from_data(&model, &data).unwrap();
    let opts = CalibrationOptions { seed: 9, ..Default::default() };
    let a = calibrate(&model, &data, &bounds, &opts).unwrap();
    let b = calibrate(&model, &data, &bounds, &opts).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.history, b.history);
}
