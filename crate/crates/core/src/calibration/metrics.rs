use serde::Serialize;

use super::data::{CalibrationData, CalibrationParams};
use crate::error::Result;
use crate::lcp::SolverOptions;
use crate::market::{solve_model, EquilibriumSolution, MarketModel};

/// Deviations `calibrated − reported` summarised as in a fit table.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DeviationStats {
    pub count: usize,
    /// Largest `|d|`, in the unit of the quantity.
    pub max_abs: f64,
    /// Largest `|d| / |reported|`, as a fraction.
    pub max_rel: f64,
    /// Mean of the signed deviations.
    pub mean: f64,
    /// Median of the signed deviations.
    pub median: f64,
}

impl DeviationStats {
    /// Stats over `(calibrated, reported)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut devs = Vec::new();
        let mut s = DeviationStats::default();
        for (x, r) in pairs {
            let d = x - r;
            s.max_abs = s.max_abs.max(d.abs());
            if r != 0.0 {
                s.max_rel = s.max_rel.max(d.abs() / r.abs());
            }
            devs.push(d);
        }
        s.count = devs.len();
        if devs.is_empty() {
            return s;
        }
        s.mean = devs.iter().sum::<f64>() / devs.len() as f64;
        devs.sort_by(f64::total_cmp);
        let k = devs.len();
        s.median = if k % 2 == 1 {
            devs[k / 2]
        } else {
            0.5 * (devs[k / 2 - 1] + devs[k / 2])
        };
        s
    }
}

/// Fit of a calibrated model against the reported data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationMetrics {
    /// Equilibrium consumption against `sC_data`.
    pub consumption: DeviationStats,
    /// `π*` against `piC_data`.
    pub price: DeviationStats,
    /// `η*` against `etaC_data`.
    pub elasticity: DeviationStats,
    /// Trader sales against reference sales, shortfalls only.
    pub sales: DeviationStats,
    /// How the sales statistics were aggregated.
    pub sales_weighting: &'static str,
}

/// Solve the model under `params` and report the fit.
pub fn calibration_residuals(
    model: &MarketModel,
    data: &CalibrationData,
    params: &CalibrationParams,
    solver: &SolverOptions,
) -> Result<CalibrationMetrics> {
    let calibrated = params.apply(model)?;
    let sol = solve_model(&calibrated, solver)?;
    Ok(metrics_for(&calibrated, data, params, &sol))
}

pub(crate) fn metrics_for(
    model: &MarketModel,
    data: &CalibrationData,
    params: &CalibrationParams,
    sol: &EquilibriumSolution,
) -> CalibrationMetrics {
    let mut consumption = Vec::new();
    let mut price = Vec::new();
    let mut elasticity = Vec::new();
    for (n, node) in model.consumer_nodes() {
        let id = &node.id;
        for t in 0..model.periods.len() {
            consumption.push((sol.consumption[[n, t]], data.consumption[id][t]));
            price.push((params.price[id][t], data.price[id][t]));
            elasticity.push((params.elasticity[id][t], data.elasticity[id][t]));
        }
    }
    CalibrationMetrics {
        consumption: DeviationStats::from_pairs(consumption),
        price: DeviationStats::from_pairs(price),
        elasticity: DeviationStats::from_pairs(elasticity),
        sales: DeviationStats::from_pairs(sales_pairs(model, data, sol).filter(|(x, r)| x < r)),
        sales_weighting: "unweighted",
    }
}

/// `(equilibrium sales, reference sales)` for every referenced entry.
pub(crate) fn sales_pairs<'a>(
    model: &'a MarketModel,
    data: &'a CalibrationData,
    sol: &'a EquilibriumSolution,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    data.reference_sales().iter().flat_map(move |(trader, per_node)| {
        let f = model.trader_index(trader);
        per_node.iter().flat_map(move |(node, v)| {
            let n = model.node_index(node);
            v.iter().enumerate().filter_map(move |(t, &r)| match (f, n) {
                (Some(f), Some(n)) => Some((sol.sales[[f, n, t]], r)),
                _ => None,
            })
        })
    })
}
