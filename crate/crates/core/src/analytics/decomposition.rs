use std::collections::{HashMap, HashSet};
use std::ops::{Add, Mul};

use crate::error::{Error, Result};
use crate::market::{ArcKind, EquilibriumSolution, MarketModel, Topology};

/// Flows at or below this are treated as unused when tracing paths.
const FLOW_EPS: f64 = 1e-9;

/// Per-unit composition of a wholesale price, k€/mcm, volume-weighted over
/// the supplying traders.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceComposition {
    pub node: usize,
    pub period: usize,
    pub price: f64,
    /// Average production cost `LINC^P + QUAC·q^P/2`.
    pub producer_cost: f64,
    /// Producer margin including production capacity rents.
    pub producer_profit: f64,
    /// Linear charges of transport, LNG and storage services.
    pub service_cost: f64,
    /// Congestion rents of those services.
    pub service_profit: f64,
    /// `λ − φ^N` at the destination.
    pub trader_profit: f64,
    /// Notes about cycles cut while tracing.
    pub diagnostics: Vec<String>,
}

impl PriceComposition {
    pub fn total(&self) -> f64 {
        self.producer_cost + self.producer_profit + self.service_cost + self.service_profit + self.trader_profit
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Parts {
    producer_cost: f64,
    producer_profit: f64,
    service_cost: f64,
    service_profit: f64,
}

impl Add for Parts {
    type Output = Parts;
    fn add(self, o: Parts) -> Parts {
        Parts {
            producer_cost: self.producer_cost + o.producer_cost,
            producer_profit: self.producer_profit + o.producer_profit,
            service_cost: self.service_cost + o.service_cost,
            service_profit: self.service_profit + o.service_profit,
        }
    }
}

impl Mul<f64> for Parts {
    type Output = Parts;
    fn mul(self, k: f64) -> Parts {
        Parts {
            producer_cost: self.producer_cost * k,
            producer_profit: self.producer_profit * k,
            service_cost: self.service_cost * k,
            service_profit: self.service_profit * k,
        }
    }
}

impl Parts {
    fn service(cost: f64, rent: f64) -> Self {
        Parts {
            service_cost: cost,
            service_profit: rent,
            ..Default::default()
        }
    }
}

/// Traces one trader's gas back through the time-expanded network: arcs
/// within a period, storage between periods.
struct Tracer<'a> {
    model: &'a MarketModel,
    sol: &'a EquilibriumSolution,
    topo: &'a Topology,
    f: usize,
    memo: HashMap<(usize, usize), Parts>,
    stack: HashSet<(usize, usize)>,
    diagnostics: Vec<String>,
}

impl Tracer<'_> {
    fn keep(&self, s: Option<usize>) -> f64 {
        s.map_or(1.0, |s| 1.0 - self.model.services[s].loss)
    }

    fn charges(&self, s: Option<usize>, t: usize) -> Parts {
        match s {
            None => Parts::default(),
            Some(s) => Parts::service(
                self.model.services[s].linc[t],
                self.sol.congestion[[s, t]] + self.sol.annual_congestion[s],
            ),
        }
    }

    fn cycle(&mut self, n: usize, t: usize, via: String) {
        self.diagnostics.push(format!(
            "cyclic flow of trader {} at {}/{} via {via}; path cut and remaining inflows rescaled",
            self.model.traders[self.f].id, self.model.nodes[n].id, self.model.periods[t].id
        ));
    }

    /// Composition of one unit of the trader's gas at node `n` in period `t`.
    fn explain(&mut self, n: usize, t: usize) -> Result<Parts> {
        if let Some(p) = self.memo.get(&(n, t)) {
            return Ok(*p);
        }
        self.stack.insert((n, t));
        let (f, topo, sol, model) = (self.f, self.topo, self.sol, self.model);
        let mut acc = Parts::default();
        let mut weight = 0.0;

        if topo.trader_source[f] == n && sol.production[[f, t]] > FLOW_EPS {
            let s = topo.producer[n].expect("validated producer");
            let keep = self.keep(Some(s));
            let q = sol.production[[f, t]];
            let spec = &model.services[s];
            let cost = (spec.linc[t] + 0.5 * spec.quac_at(t) * q) / keep;
            let value = sol.node_value[[f, n, t]];
            let w = keep * q;
            acc = acc
                + Parts {
                    producer_cost: cost,
                    producer_profit: value - cost,
                    ..Default::default()
                } * w;
            weight += w;
        }

        for &a in &topo.trader_arcs[f] {
            let q = sol.arc_flow[[f, a, t]];
            if topo.arc_to[a] != n || q <= FLOW_EPS {
                continue;
            }
            let from = topo.arc_from[a];
            if self.stack.contains(&(from, t)) {
                self.cycle(n, t, model.arcs[a].id.clone());
                continue;
            }
            let chain: Vec<Option<usize>> = match topo.arc_kind[a] {
                ArcKind::Pipeline => vec![topo.arc_service[a]],
                ArcKind::LngRoute => topo.lng_chain(a).to_vec(),
            };
            let arrive: f64 = chain.iter().map(|&s| self.keep(s)).product();
            let mut parts = self.explain(from, t)?;
            for &s in &chain {
                parts = parts + self.charges(s, t);
            }
            let w = arrive * q;
            acc = acc + parts * (w / arrive);
            weight += w;
        }

        if topo.is_storage[n] && sol.extraction[[f, n, t]] > FLOW_EPS {
            let (si, sx) = (topo.injection[n], topo.extraction[n]);
            let mut stored = Parts::default();
            let mut stored_w = 0.0;
            for t_in in 0..topo.n_periods {
                let q = sol.injection[[f, n, t_in]];
                if q <= FLOW_EPS {
                    continue;
                }
                if self.stack.contains(&(n, t_in)) {
                    self.cycle(n, t, format!("storage from {}", model.periods[t_in].id));
                    continue;
                }
                let parts = (self.explain(n, t_in)? + self.charges(si, t_in)) * (1.0 / self.keep(si));
                let w = topo.durations[t_in] * self.keep(si) * q;
                stored = stored + parts * w;
                stored_w += w;
            }
            if stored_w > 0.0 {
                let parts = (stored * (1.0 / stored_w) + self.charges(sx, t)) * (1.0 / self.keep(sx));
                let w = self.keep(sx) * sol.extraction[[f, n, t]];
                acc = acc + parts * w;
                weight += w;
            }
        }

        self.stack.remove(&(n, t));
        if weight <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "no supply path for trader {} at {}/{}",
                model.traders[f].id, model.nodes[n].id, model.periods[t].id
            )));
        }
        let parts = acc * (1.0 / weight);
        self.memo.insert((n, t), parts);
        Ok(parts)
    }
}

/// Split the price at `node` in `period` into producer cost and profit,
/// service cost and congestion rent, and trader profit.
///
/// Each supplying trader's gas is traced back to its source with
/// proportional splitting where several inflows meet; the traders are then
/// weighted by their sales.
pub fn price_decomposition(
    model: &MarketModel,
    sol: &EquilibriumSolution,
    node: usize,
    period: usize,
) -> Result<PriceComposition> {
    let topo = Topology::new(model);
    let total = sol.consumption[[node, period]];
    if total <= FLOW_EPS {
        return Err(Error::InvalidInput(format!(
            "no consumption at {}/{} to decompose",
            model.nodes[node].id, model.periods[period].id
        )));
    }
    let price = sol.price[[node, period]];
    let mut out = PriceComposition {
        node,
        period,
        price,
        producer_cost: 0.0,
        producer_profit: 0.0,
        service_cost: 0.0,
        service_profit: 0.0,
        trader_profit: 0.0,
        diagnostics: Vec::new(),
    };
    let mut weight = 0.0;
    for f in 0..model.traders.len() {
        let q = sol.sales[[f, node, period]];
        if q <= FLOW_EPS {
            continue;
        }
        let mut tracer = Tracer {
            model,
            sol,
            topo: &topo,
            f,
            memo: HashMap::new(),
            stack: HashSet::new(),
            diagnostics: Vec::new(),
        };
        let parts = tracer.explain(node, period)?;
        out.diagnostics.append(&mut tracer.diagnostics);
        out.producer_cost += q * parts.producer_cost;
        out.producer_profit += q * parts.producer_profit;
        out.service_cost += q * parts.service_cost;
        out.service_profit += q * parts.service_profit;
        out.trader_profit += q * (price - sol.node_value[[f, node, period]]);
        weight += q;
    }
    out.producer_cost /= weight;
    out.producer_profit /= weight;
    out.service_cost /= weight;
    out.service_profit /= weight;
    out.trader_profit /= weight;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::SolverOptions;
    use crate::market::solve_model;
    use crate::market::testing::*;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn monopoly_composition() {
        let model = single_market(1.0, 1);
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let c = price_decomposition(&model, &sol, 0, 0).unwrap();
        close(c.trader_profit, 400.0);
        close(c.producer_cost, 100.0);
        close(c.producer_profit, 0.0);
        close(c.service_cost + c.service_profit, 0.0);
        close(c.total(), 500.0);
    }

    #[test]
    fn competitive_pipeline_composition() {
        let model = pipeline_pair(0.0, 10.0, None);
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let c = price_decomposition(&model, &sol, 1, 0).unwrap();
        close(c.trader_profit, 0.0);
        close(c.service_cost, 10.0);
        close(c.producer_cost, 100.0);
        close(c.total(), c.price);
    }

    #[test]
    fn congested_pipeline_shows_rent() {
        let model = pipeline_pair(0.0, 10.0, Some(50.0));
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        let c = price_decomposition(&model, &sol, 1, 0).unwrap();
        assert!(c.service_profit > 1.0);
        close(c.service_profit, sol.congestion[[1, 0]]);
        close(c.total(), c.price);
    }

    #[test]
    fn two_node_closure_with_storage_and_lng() {
        let model = two_node();
        let sol = solve_model(&model, &SolverOptions::default()).unwrap();
        for n in 0..2 {
            for t in 0..2 {
                let c = price_decomposition(&model, &sol, n, t).unwrap();
                close(c.total(), c.price);
                for v in [c.producer_cost, c.producer_profit, c.service_cost, c.service_profit, c.trader_profit] {
                    assert!(v > -1e-8);
                }
            }
        }
    }

    #[test]
    fn empty_market_is_an_error() {
        let model = single_market(1.0, 1);
        let mut sol = solve_model(&model, &SolverOptions::default()).unwrap();
        sol.consumption.fill(0.0);
        assert!(price_decomposition(&model, &sol, 0, 0).is_err());
    }
}
