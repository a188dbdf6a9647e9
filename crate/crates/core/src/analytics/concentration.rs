use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::market::{EquilibriumSolution, MarketModel};

/// Label under which the EU aggregate groups gas sold in its country of
/// production.
pub const DOMESTIC_PRODUCTION: &str = "Domestic production";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShareScope {
    Node(usize),
    /// All EU consumer nodes together.
    EuAggregate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodScope {
    Period(usize),
    /// Volumes weighted by period duration.
    Year,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concentration {
    Unconcentrated,
    ModeratelyConcentrated,
    HighlyConcentrated,
}

impl fmt::Display for Concentration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Concentration::Unconcentrated => "unconcentrated",
            Concentration::ModeratelyConcentrated => "moderately concentrated",
            Concentration::HighlyConcentrated => "highly concentrated",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketShares {
    /// Supplier label and share in percent, in descending share order.
    pub shares: Vec<(String, f64)>,
    pub hhi: f64,
    pub class: Concentration,
}

/// Sum of squared percentage shares.
pub fn hhi(shares_percent: &[f64]) -> f64 {
    shares_percent.iter().map(|s| s * s).sum()
}

pub fn classify_hhi(hhi: f64) -> Concentration {
    if hhi < 1500.0 {
        Concentration::Unconcentrated
    } else if hhi <= 2500.0 {
        Concentration::ModeratelyConcentrated
    } else {
        Concentration::HighlyConcentrated
    }
}

/// Supplier shares of consumption in `scope` and their HHI.
///
/// In the EU aggregate, sales made in the trader's home country are pooled
/// as [`DOMESTIC_PRODUCTION`]; exports keep the trader's id.
pub fn market_shares_and_hhi(
    model: &MarketModel,
    sol: &EquilibriumSolution,
    scope: ShareScope,
    period: PeriodScope,
) -> Result<MarketShares> {
    let periods: Vec<(usize, f64)> = match period {
        PeriodScope::Period(t) => vec![(t, 1.0)],
        PeriodScope::Year => model.periods.iter().map(|p| p.duration).enumerate().collect(),
    };
    let nodes: Vec<usize> = match scope {
        ShareScope::Node(n) => vec![n],
        ShareScope::EuAggregate => model
            .consumer_nodes()
            .filter(|(_, n)| n.region.is_eu())
            .map(|(i, _)| i)
            .collect(),
    };
    let mut volume: BTreeMap<String, f64> = BTreeMap::new();
    for (f, trader) in model.traders.iter().enumerate() {
        let home = model
            .node_index(&trader.source)
            .map(|i| model.nodes[i].country.as_str())
            .unwrap_or_default();
        for &n in &nodes {
            let label = match scope {
                ShareScope::EuAggregate if model.nodes[n].country == home => DOMESTIC_PRODUCTION.to_string(),
                _ => trader.id.clone(),
            };
            let q: f64 = periods.iter().map(|&(t, w)| w * sol.sales[[f, n, t]]).sum();
            if q > 0.0 {
                *volume.entry(label).or_default() += q;
            }
        }
    }
    let total: f64 = volume.values().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("HHI undefined: zero total sales in scope".into()));
    }
    let mut shares: Vec<(String, f64)> = volume.into_iter().map(|(k, v)| (k, 100.0 * v / total)).collect();
    shares.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let h = hhi(&shares.iter().map(|s| s.1).collect::<Vec<_>>());
    Ok(MarketShares {
        shares,
        hhi: h,
        class: classify_hhi(h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::SolverOptions;
    use crate::market::solve_model;
    use crate::market::testing::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn hhi_examples() {
        assert_eq!(hhi(&[100.0]), 10_000.0);
        assert_eq!(hhi(&[50.0, 50.0]), 5000.0);
        assert_eq!(hhi(&[40.0, 30.0, 30.0]), 3400.0);
        assert_eq!(classify_hhi(3400.0), Concentration::HighlyConcentrated);
        assert_eq!(classify_hhi(1499.0), Concentration::Unconcentrated);
        assert_eq!(classify_hhi(2000.0), Concentration::ModeratelyConcentrated);
    }

    #[test]
    fn duopoly_shares() {
        let model = single_market(1.0, 2);
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let s = market_shares_and_hhi(&model, &sol, ShareScope::Node(0), PeriodScope::Year).unwrap();
        assert_relative_eq!(s.hhi, 5000.0, max_relative = 1e-9);
    }

    #[test]
    fn eu_aggregate_pools_home_sales() {
        let model = two_node();
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let s = market_shares_and_hhi(&model, &sol, ShareScope::EuAggregate, PeriodScope::Year).unwrap();
        // only node A is in the EU and FA is its home producer
        assert_eq!(s.shares.len(), 1);
        assert_eq!(s.shares[0].0, DOMESTIC_PRODUCTION);
    }

    #[test]
    fn zero_sales_is_undefined() {
        let model = single_market(1.0, 1);
        let mut sol = solve_model(&model, &SolverOptions::default()).unwrap();
        sol.sales.fill(0.0);
        assert!(market_shares_and_hhi(&model, &sol, ShareScope::Node(0), PeriodScope::Period(0)).is_err());
    }

    proptest! {
        #[test]
        fn hhi_bounds(raw in prop::collection::vec(0.01f64..100.0, 1..12)) {
            let total: f64 = raw.iter().sum();
            let shares: Vec<f64> = raw.iter().map(|v| 100.0 * v / total).collect();
            let h = hhi(&shares);
            let k = shares.len() as f64;
            prop_assert!(h >= 10_000.0 / k - 1e-6);
            prop_assert!(h <= 10_000.0 + 1e-6);
        }
    }
}
