use std::collections::BTreeMap;

use super::surplus::{consumer_surplus, infrastructure_rent, producer_surplus};
use crate::error::{Error, Result};
use crate::market::{Diagnostic, EquilibriumSolution, MarketModel};

/// EU membership per country code.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionMap {
    pub eu: BTreeMap<String, bool>,
}

impl RegionMap {
    /// Membership as tagged on the model's nodes.
    pub fn from_model(model: &MarketModel) -> Self {
        Self {
            eu: model
                .nodes
                .iter()
                .map(|n| (n.country.clone(), n.region.is_eu()))
                .collect(),
        }
    }

    pub fn is_eu(&self, country: &str) -> Option<bool> {
        self.eu.get(country).copied()
    }
}

/// Per-country results of one run, or their change against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryFigures {
    pub is_eu: bool,
    /// Consumer surplus, M€/y.
    pub cs: f64,
    /// Producer surplus of traders whose source lies in the country, M€/y.
    pub ps: f64,
    /// Consumption-weighted wholesale price, k€/mcm.
    pub price: f64,
    /// Duration-weighted consumption, mcm/d.
    pub consumption: f64,
}

/// Country totals of one solved run.
pub fn country_figures(
    model: &MarketModel,
    sol: &EquilibriumSolution,
    regions: &RegionMap,
) -> Result<BTreeMap<String, CountryFigures>> {
    let mut missing = Vec::new();
    let mut out: BTreeMap<String, CountryFigures> = BTreeMap::new();
    fn entry<'a>(
        out: &'a mut BTreeMap<String, CountryFigures>,
        regions: &RegionMap,
        country: &str,
        missing: &mut Vec<Diagnostic>,
    ) -> Option<&'a mut CountryFigures> {
        match regions.is_eu(country) {
            Some(is_eu) => Some(out.entry(country.to_string()).or_insert(CountryFigures {
                is_eu,
                cs: 0.0,
                ps: 0.0,
                price: 0.0,
                consumption: 0.0,
            })),
            None => {
                missing.push(Diagnostic::error(
                    format!("country {country}"),
                    "country missing from region map",
                ));
                None
            }
        }
    }
    let days = model.total_days();
    let mut price_volume: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    for (n, node) in model.consumer_nodes() {
        let Some(fig) = entry(&mut out, regions, &node.country, &mut missing) else { continue };
        let pv = price_volume.entry(node.country.clone()).or_default();
        for (t, p) in model.periods.iter().enumerate() {
            fig.cs += consumer_surplus(model, sol, n, t).per_period;
            let s = sol.consumption[[n, t]];
            fig.consumption += s * p.duration / days;
            pv.0 += sol.price[[n, t]] * s * p.duration;
            pv.1 += s * p.duration;
            pv.2 += sol.price[[n, t]] * p.duration;
        }
    }
    for (c, (pv, v, plain)) in price_volume {
        let fig = out.get_mut(&c).expect("inserted");
        let markets = model.consumer_nodes().filter(|(_, n)| n.country == c).count() as f64;
        fig.price = if v > 0.0 { pv / v } else { plain / (days * markets) };
    }
    for (f, trader) in model.traders.iter().enumerate() {
        let country = model
            .node_index(&trader.source)
            .map(|i| model.nodes[i].country.clone())
            .unwrap_or_default();
        if let Some(fig) = entry(&mut out, regions, &country, &mut missing) {
            fig.ps += producer_surplus(model, sol, f).annual;
        }
    }
    if !missing.is_empty() {
        missing.dedup();
        return Err(Error::Validation(missing));
    }
    Ok(out)
}

/// Welfare of one run, or its change against a reference run.
///
/// Consumer surplus enters the aggregates for EU countries only. Congestion
/// rents of infrastructure are not part of producer surplus and are carried
/// in `infrastructure_rent`.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareSummary {
    pub is_delta: bool,
    pub countries: BTreeMap<String, CountryFigures>,
    /// Producer surplus per trader, M€/y.
    pub ps_by_trader: BTreeMap<String, f64>,
    pub infrastructure_rent: f64,
    /// `dCS`: EU consumer surplus.
    pub cs_eu: f64,
    /// `dPS EU`
    pub ps_eu: f64,
    /// `dSW EU = dCS + dPS EU`
    pub sw_eu: f64,
    /// `dPS`: producers inside and outside the EU.
    pub ps_total: f64,
    /// `dSW = dCS + dPS`
    pub sw_total: f64,
    /// Sum of absolute country changes in EU consumer surplus.
    pub cs_abs_sum: f64,
    /// Sum of absolute country changes in welfare, EU countries.
    pub sw_eu_abs_sum: f64,
    /// Sum of absolute country changes in welfare, all countries.
    pub sw_abs_sum: f64,
}

impl WelfareSummary {
    fn from_countries(
        is_delta: bool,
        countries: BTreeMap<String, CountryFigures>,
        ps_by_trader: BTreeMap<String, f64>,
        infrastructure_rent: f64,
    ) -> Self {
        let mut s = WelfareSummary {
            is_delta,
            countries,
            ps_by_trader,
            infrastructure_rent,
            cs_eu: 0.0,
            ps_eu: 0.0,
            sw_eu: 0.0,
            ps_total: 0.0,
            sw_total: 0.0,
            cs_abs_sum: 0.0,
            sw_eu_abs_sum: 0.0,
            sw_abs_sum: 0.0,
        };
        for c in s.countries.values() {
            let cs = if c.is_eu { c.cs } else { 0.0 };
            s.cs_eu += cs;
            s.ps_total += c.ps;
            s.cs_abs_sum += cs.abs();
            s.sw_abs_sum += (cs + c.ps).abs();
            if c.is_eu {
                s.ps_eu += c.ps;
                s.sw_eu_abs_sum += (cs + c.ps).abs();
            }
        }
        s.sw_eu = s.cs_eu + s.ps_eu;
        s.sw_total = s.cs_eu + s.ps_total;
        s
    }
}

/// Welfare of `result`, as changes against `reference` when one is given
/// (positive means an increase).
pub fn welfare_summary(
    model: &MarketModel,
    result: &EquilibriumSolution,
    reference: Option<(&MarketModel, &EquilibriumSolution)>,
    regions: &RegionMap,
) -> Result<WelfareSummary> {
    let figures = country_figures(model, result, regions)?;
    let ps: BTreeMap<String, f64> = model
        .traders
        .iter()
        .enumerate()
        .map(|(f, t)| (t.id.clone(), producer_surplus(model, result, f).annual))
        .collect();
    let rent = infrastructure_rent(model, result);
    let Some((ref_model, ref_sol)) = reference else {
        return Ok(WelfareSummary::from_countries(false, figures, ps, rent));
    };
    let base = country_figures(ref_model, ref_sol, regions)?;
    if base.keys().ne(figures.keys()) {
        return Err(Error::Comparison("runs cover different country sets".into()));
    }
    let deltas = figures
        .into_iter()
        .map(|(c, r)| {
            let b = &base[&c];
            let d = CountryFigures {
                is_eu: r.is_eu,
                cs: r.cs - b.cs,
                ps: r.ps - b.ps,
                price: r.price - b.price,
                consumption: r.consumption - b.consumption,
            };
            (c, d)
        })
        .collect();
    let ref_ps: BTreeMap<String, f64> = ref_model
        .traders
        .iter()
        .enumerate()
        .map(|(f, t)| (t.id.clone(), producer_surplus(ref_model, ref_sol, f).annual))
        .collect();
    let ps_delta = ps
        .into_iter()
        .map(|(k, v)| {
            let b = ref_ps.get(&k).copied().unwrap_or(0.0);
            (k, v - b)
        })
        .collect();
    let rent_delta = rent - infrastructure_rent(ref_model, ref_sol);
    Ok(WelfareSummary::from_countries(true, deltas, ps_delta, rent_delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::SolverOptions;
    use crate::market::testing::*;
    use crate::market::{solve_model, Region};

    #[test]
    fn identical_runs_give_zero_deltas() {
        let model = two_node();
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let regions = RegionMap::from_model(&model);
        let w = welfare_summary(&model, &sol, Some((&model, &sol)), &regions).unwrap();
        assert!(w.is_delta);
        for v in [w.cs_eu, w.ps_eu, w.sw_eu, w.ps_total, w.sw_total, w.sw_abs_sum] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn identities_hold_exactly() {
        let model = two_node();
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let w = welfare_summary(&model, &sol, None, &RegionMap::from_model(&model)).unwrap();
        assert_eq!(w.sw_eu, w.cs_eu + w.ps_eu);
        assert_eq!(w.sw_total, w.cs_eu + w.ps_total);
        let eu_cs: f64 = w.countries.values().filter(|c| c.is_eu).map(|c| c.cs).sum();
        assert!((eu_cs - w.cs_eu).abs() < 1e-9);
    }

    #[test]
    fn non_eu_producers_leave_eu_surplus_untouched() {
        let mut model = single_market(1.0, 1);
        model.nodes[0].region = Region::NonEu;
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let mut other = model.clone();
        other.traders[0].market_power.insert("N".into(), vec![0.5]);
        let sol2 = solve_model(&other, &SolverOptions::default()).unwrap();
        let regions = RegionMap::from_model(&model);
        let w = welfare_summary(&other, &sol2, Some((&model, &sol)), &regions).unwrap();
        assert_eq!(w.ps_eu, 0.0);
        assert_eq!(w.sw_eu, w.cs_eu);
    }

    #[test]
    fn missing_region_is_a_validation_error() {
        let model = single_market(1.0, 1);
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let err = welfare_summary(&model, &sol, None, &RegionMap::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
