use std::fmt;

use super::assemble::Topology;
use super::solution::EquilibriumSolution;
use super::types::{ArcKind, MarketModel};

/// Tolerances for [`check_equilibrium`]. Each is scaled by
/// `1 + |largest term|` of the condition it guards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantTolerances {
    /// Inequalities: balances, capacities, no-arbitrage bounds.
    pub feasibility: f64,
    /// Equalities that hold on active flows and positive prices.
    pub equality: f64,
    /// A flow or price above this counts as active.
    pub activity: f64,
}

impl Default for InvariantTolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            equality: 1e-8,
            activity: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub subject: String,
    /// Signed size of the violation.
    pub amount: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at {} by {:.3e}", self.check, self.subject, self.amount)
    }
}

struct Checker<'a> {
    tol: &'a InvariantTolerances,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn at_least(&mut self, check: &'static str, subject: impl FnOnce() -> String, value: f64, scale: f64) {
        if value < -self.tol.feasibility * (1.0 + scale.abs()) {
            self.out.push(Violation { check, subject: subject(), amount: value });
        }
    }

    fn equal(&mut self, check: &'static str, subject: impl FnOnce() -> String, value: f64, scale: f64) {
        if value.abs() > self.tol.equality * (1.0 + scale.abs()) {
            self.out.push(Violation { check, subject: subject(), amount: value });
        }
    }
}

/// Re-derive the equilibrium conditions from an extracted solution and
/// report every one that fails: node balance, storage balance,
/// no-arbitrage along pipelines, LNG routes and storage, capacities, and
/// market clearing.
pub fn check_equilibrium(
    model: &MarketModel,
    sol: &EquilibriumSolution,
    tol: &InvariantTolerances,
) -> Vec<Violation> {
    let topo = Topology::new(model);
    let np = topo.n_periods;
    let act = tol.activity;
    let mut c = Checker { tol, out: Vec::new() };
    let keep = |s: Option<usize>| s.map_or(1.0, |s| 1.0 - model.services[s].loss);
    let linc = |s: Option<usize>, t: usize| s.map_or(0.0, |s| model.services[s].linc[t]);
    let fees = |s: Option<usize>, t: usize| {
        s.map_or(0.0, |s| sol.congestion[[s, t]] + sol.annual_congestion[s])
    };

    for f in 0..model.traders.len() {
        let fid = &model.traders[f].id;
        for &n in &topo.trader_nodes[f] {
            let nid = &model.nodes[n].id;
            for t in 0..np {
                // node balance
                let mut inflow = 0.0;
                let mut outflow = 0.0;
                if topo.trader_source[f] == n {
                    inflow += keep(topo.producer[n]) * sol.production[[f, t]];
                }
                if topo.is_storage[n] {
                    inflow += keep(topo.extraction[n]) * sol.extraction[[f, n, t]];
                    outflow += sol.injection[[f, n, t]];
                }
                outflow += sol.sales[[f, n, t]];
                for &a in &topo.trader_arcs[f] {
                    let q = sol.arc_flow[[f, a, t]];
                    if topo.arc_to[a] == n {
                        inflow += q * arrival_factor(model, &topo, a);
                    }
                    if topo.arc_from[a] == n {
                        outflow += q;
                    }
                }
                let surplus = inflow - outflow;
                let scale = inflow.max(outflow);
                let subject = || format!("{fid}@{nid}/{}", model.periods[t].id);
                c.at_least("node balance", subject, surplus, scale);
                let phi = sol.node_value[[f, n, t]];
                if phi > act {
                    c.equal("node balance complementarity", subject, surplus, scale);
                }
            }
        }
        // storage balance and storage no-arbitrage
        for n in topo.trader_storage(f) {
            let nid = &model.nodes[n].id;
            let (si, sx) = (topo.injection[n], topo.extraction[n]);
            let stored: f64 = (0..np)
                .map(|t| topo.durations[t] * (keep(si) * sol.injection[[f, n, t]] - sol.extraction[[f, n, t]]))
                .sum();
            let volume: f64 = (0..np)
                .map(|t| topo.durations[t] * sol.injection[[f, n, t]])
                .sum();
            c.at_least("storage balance", || format!("{fid}@{nid}"), stored, volume);
            for t_in in 0..np {
                if sol.injection[[f, n, t_in]] <= act {
                    continue;
                }
                for t_out in 0..np {
                    if sol.extraction[[f, n, t_out]] <= act {
                        continue;
                    }
                    let lhs = keep(sx) * sol.node_value[[f, n, t_out]];
                    let rhs = linc(sx, t_out)
                        + fees(sx, t_out)
                        + (linc(si, t_in) + fees(si, t_in) + sol.node_value[[f, n, t_in]]) / keep(si);
                    c.equal(
                        "storage no-arbitrage",
                        || {
                            format!(
                                "{fid}@{nid} {}->{}",
                                model.periods[t_in].id, model.periods[t_out].id
                            )
                        },
                        lhs - rhs,
                        lhs.abs().max(rhs.abs()),
                    );
                }
            }
        }
        // transport no-arbitrage
        for &a in &topo.trader_arcs[f] {
            let (from, to) = (topo.arc_from[a], topo.arc_to[a]);
            let services: Vec<Option<usize>> = match topo.arc_kind[a] {
                ArcKind::Pipeline => vec![topo.arc_service[a]],
                ArcKind::LngRoute => topo.lng_chain(a).to_vec(),
            };
            for t in 0..np {
                let cost: f64 = services.iter().map(|&s| linc(s, t) + fees(s, t)).sum();
                let arrive = arrival_factor(model, &topo, a);
                let gain = arrive * sol.node_value[[f, to, t]] - sol.node_value[[f, from, t]];
                let slack = cost - gain;
                let scale = cost.abs().max(sol.node_value[[f, to, t]].abs());
                let subject = || format!("{}@{}/{}", model.traders[f].id, model.arcs[a].id, model.periods[t].id);
                c.at_least("transport no-arbitrage", subject, slack, scale);
                if sol.arc_flow[[f, a, t]] > act {
                    c.equal("transport no-arbitrage (active)", subject, slack, scale);
                }
            }
        }
    }

    // capacities
    for (s, spec) in model.services.iter().enumerate() {
        let sid = || format!("{}@{}", spec.kind.code(), spec.at);
        for t in 0..np {
            if let Some(cap) = spec.cap_at(t) {
                let slack = cap - sol.throughput[[s, t]];
                c.at_least("capacity", || format!("{}/{}", sid(), model.periods[t].id), slack, cap);
                if slack > act {
                    c.equal(
                        "capacity fee on slack capacity",
                        || format!("{}/{}", sid(), model.periods[t].id),
                        sol.congestion[[s, t]],
                        0.0,
                    );
                }
            }
        }
        if let Some(cap) = spec.cap_annual {
            let used: f64 = (0..np).map(|t| topo.durations[t] * sol.throughput[[s, t]]).sum();
            let slack = cap - used;
            c.at_least("annual capacity", sid, slack, cap);
            if slack > act {
                c.equal("annual fee on slack capacity", sid, sol.annual_congestion[s], 0.0);
            }
        }
    }

    // market clearing
    for (n, node) in model.consumer_nodes() {
        for t in 0..np {
            let curve = &node.demand[t];
            let lambda = sol.price[[n, t]];
            let on_curve = curve.price_at(sol.consumption[[n, t]]);
            let subject = || format!("{}/{}", node.id, model.periods[t].id);
            c.at_least("market clearing", subject, lambda - on_curve, curve.intercept);
            if lambda > act {
                c.equal("market clearing (active)", subject, lambda - on_curve, curve.intercept);
            }
        }
    }
    c.out
}

/// Fraction of the departing flow on arc `a` that arrives.
pub(crate) fn arrival_factor(model: &MarketModel, topo: &Topology, a: usize) -> f64 {
    let keep = |s: Option<usize>| s.map_or(1.0, |s| 1.0 - model.services[s].loss);
    match topo.arc_kind[a] {
        ArcKind::Pipeline => keep(topo.arc_service[a]),
        ArcKind::LngRoute => topo.lng_chain(a).into_iter().map(keep).product(),
    }
}
