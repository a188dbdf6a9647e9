use super::K_PER_M;
use crate::market::{EquilibriumSolution, MarketModel, ServiceKind, Topology};

/// Consumer surplus of one market in one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumerSurplus {
    /// k€/d
    pub per_day: f64,
    /// M€ over the period.
    pub per_period: f64,
}

/// `∫₀ˢ (INT + SLP·x) dx − λ·s`, which equals `−SLP·s²/2` when the market
/// clears.
pub fn consumer_surplus(model: &MarketModel, sol: &EquilibriumSolution, node: usize, period: usize) -> ConsumerSurplus {
    let curve = &model.nodes[node].demand[period];
    let s = sol.consumption[[node, period]];
    let lambda = sol.price[[node, period]];
    let per_day = curve.intercept * s + 0.5 * curve.slope * s * s - lambda * s;
    ConsumerSurplus {
        per_day,
        per_period: per_day * model.periods[period].duration / K_PER_M,
    }
}

/// Producer surplus of the integrated producer and trading arm `f`.
///
/// All entries are M€, indexed by period; `annual` sums them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProducerSurplus {
    pub revenue: Vec<f64>,
    /// `LINC^P·q^P + QUAC·(q^P)²/2`
    pub production_cost: Vec<f64>,
    /// Linear service charges on the trader's flows.
    pub service_cost: Vec<f64>,
    /// Congestion fees paid to infrastructure (production capacity rents
    /// stay with the producer).
    pub congestion_fees: Vec<f64>,
    pub per_period: Vec<f64>,
    pub annual: f64,
}

pub fn producer_surplus(model: &MarketModel, sol: &EquilibriumSolution, trader: usize) -> ProducerSurplus {
    let topo = Topology::new(model);
    let f = trader;
    let np = topo.n_periods;
    let linc = |s: Option<usize>, t: usize| s.map_or(0.0, |s| model.services[s].linc[t]);
    let fee = |s: Option<usize>, t: usize| s.map_or(0.0, |s| sol.congestion[[s, t]] + sol.annual_congestion[s]);
    let mut out = ProducerSurplus {
        revenue: vec![0.0; np],
        production_cost: vec![0.0; np],
        service_cost: vec![0.0; np],
        congestion_fees: vec![0.0; np],
        per_period: vec![0.0; np],
        annual: 0.0,
    };
    for t in 0..np {
        let scale = topo.durations[t] / K_PER_M;
        let revenue: f64 = topo.trader_consumers[f]
            .iter()
            .map(|&n| sol.price[[n, t]] * sol.sales[[f, n, t]])
            .sum();
        let p = topo.producer[topo.trader_source[f]].expect("validated producer");
        let qp = sol.production[[f, t]];
        let production = model.services[p].linc[t] * qp + 0.5 * model.services[p].quac_at(t) * qp * qp;
        let mut service = 0.0;
        let mut fees = 0.0;
        for n in topo.trader_storage(f) {
            for (s, q) in [
                (topo.injection[n], sol.injection[[f, n, t]]),
                (topo.extraction[n], sol.extraction[[f, n, t]]),
            ] {
                service += linc(s, t) * q;
                fees += fee(s, t) * q;
            }
        }
        for &a in &topo.trader_arcs[f] {
            let q = sol.arc_flow[[f, a, t]];
            let chain = match model.arcs[a].kind {
                crate::market::ArcKind::Pipeline => vec![topo.arc_service[a]],
                crate::market::ArcKind::LngRoute => topo.lng_chain(a).to_vec(),
            };
            for s in chain {
                service += linc(s, t) * q;
                fees += fee(s, t) * q;
            }
        }
        out.revenue[t] = revenue * scale;
        out.production_cost[t] = production * scale;
        out.service_cost[t] = service * scale;
        out.congestion_fees[t] = fees * scale;
        out.per_period[t] = (revenue - production - service - fees) * scale;
    }
    out.annual = out.per_period.iter().sum();
    out
}

/// Congestion rents collected by infrastructure operators (every service
/// except production), M€/y.
pub fn infrastructure_rent(model: &MarketModel, sol: &EquilibriumSolution) -> f64 {
    let mut total = 0.0;
    for (s, spec) in model.services.iter().enumerate() {
        if spec.kind == ServiceKind::P {
            continue;
        }
        for (t, p) in model.periods.iter().enumerate() {
            let fee = sol.congestion[[s, t]] + sol.annual_congestion[s];
            total += fee * sol.throughput[[s, t]] * p.duration / K_PER_M;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::SolverOptions;
    use crate::market::solve_model;
    use crate::market::testing::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_consumer_surplus() {
        let model = single_market(1.0, 1);
        let mut sol = solve_model(&model, &SolverOptions::default()).unwrap();
        sol.consumption[[0, 0]] = 100.0;
        sol.price[[0, 0]] = 900.0 - 600.0;
        let cs = consumer_surplus(&model, &sol, 0, 0);
        assert_relative_eq!(cs.per_day, 30_000.0, max_relative = 1e-12);
        assert_relative_eq!(cs.per_period, 30_000.0 * 365.0 / 1000.0, max_relative = 1e-12);
        sol.consumption[[0, 0]] = 0.0;
        assert_eq!(consumer_surplus(&model, &sol, 0, 0).per_day, 0.0);
    }

    #[test]
    fn monopoly_versus_competition_surplus_ratio() {
        let opts = SolverOptions::default();
        let mono = solve_model(&single_market(1.0, 1), &opts).unwrap();
        let comp = solve_model(&single_market(0.0, 1), &opts).unwrap();
        let m = consumer_surplus(&single_market(1.0, 1), &mono, 0, 0).per_day;
        let c = consumer_surplus(&single_market(0.0, 1), &comp, 0, 0).per_day;
        assert_relative_eq!(m / c, 0.25, max_relative = 1e-9);
    }

    #[test]
    fn producer_surplus_oracles() {
        let opts = SolverOptions::default();
        let model = single_market(1.0, 1);
        let ps = producer_surplus(&model, &solve_model(&model, &opts).unwrap(), 0);
        assert_relative_eq!(ps.annual * 1000.0 / 365.0, 400.0 * 200.0 / 3.0, max_relative = 1e-9);

        let model = single_market(0.0, 1);
        let ps = producer_surplus(&model, &solve_model(&model, &opts).unwrap(), 0);
        assert!(ps.annual.abs() < 1e-9);

        let mut model = single_market(0.0, 1);
        model.services[0].quac = vec![2.0];
        let sol = solve_model(&model, &opts).unwrap();
        let q = sol.production[[0, 0]];
        let ps = producer_surplus(&model, &sol, 0);
        assert_relative_eq!(ps.annual, 2.0 * q * q / 2.0 * 365.0 / 1000.0, max_relative = 1e-9);
    }
}
