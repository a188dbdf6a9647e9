//! Small hand-built models shared by unit tests.

use std::collections::BTreeMap;

use super::types::*;

pub(crate) fn period(id: &str, duration: f64) -> Period {
    Period { id: id.into(), duration }
}

pub(crate) fn node(id: &str, producer: bool, consumer: bool) -> Node {
    Node {
        id: id.into(),
        country: id.into(),
        region: Region::EuWest,
        has_producer: producer,
        has_consumer: consumer,
        has_storage: false,
        has_liquefaction: false,
        has_regas: false,
        demand: Vec::new(),
    }
}

pub(crate) fn service(kind: ServiceKind, at: &str, linc: Vec<f64>) -> ServiceSpec {
    ServiceSpec {
        kind,
        at: at.into(),
        linc,
        quac: Vec::new(),
        loss: 0.0,
        cap: None,
        cap_annual: None,
    }
}

pub(crate) fn trader(id: &str, source: &str, nodes: &[&str], consumers: &[&str], theta: f64, np: usize) -> Trader {
    Trader {
        id: id.into(),
        source: source.into(),
        nodes: nodes.iter().map(|s| s.to_string()).collect(),
        consumers: consumers.iter().map(|s| s.to_string()).collect(),
        arcs: None,
        market_power: consumers
            .iter()
            .map(|c| (c.to_string(), vec![theta; np]))
            .collect::<BTreeMap<_, _>>(),
    }
}

pub(crate) fn curve(intercept: f64, slope: f64) -> DemandCurve {
    DemandCurve { intercept, slope, anchor: None }
}

/// One node, `traders` symmetric traders sharing the producer, one period.
pub(crate) fn single_market(theta: f64, traders: usize) -> MarketModel {
    let mut n = node("N", true, true);
    n.demand = vec![curve(900.0, -6.0)];
    MarketModel {
        periods: vec![period("year", 365.0)],
        nodes: vec![n],
        arcs: vec![],
        services: vec![service(ServiceKind::P, "N", vec![100.0])],
        traders: (0..traders)
            .map(|i| trader(&format!("F{}", i + 1), "N", &["N"], &["N"], theta, 1))
            .collect(),
    }
}

/// Producer node `S` feeding consumer node `D` through one pipeline.
pub(crate) fn pipeline_pair(theta: f64, linc_a: f64, cap: Option<f64>) -> MarketModel {
    let mut d = node("D", false, true);
    d.demand = vec![curve(900.0, -6.0)];
    let mut a = service(ServiceKind::A, "S-D", vec![linc_a]);
    a.cap = cap.map(|c| vec![c]);
    MarketModel {
        periods: vec![period("year", 365.0)],
        nodes: vec![node("S", true, false), d],
        arcs: vec![Arc { id: "S-D".into(), from: "S".into(), to: "D".into(), kind: ArcKind::Pipeline }],
        services: vec![service(ServiceKind::P, "S", vec![100.0]), a],
        traders: vec![trader("F", "S", &["S", "D"], &["D"], theta, 1)],
    }
}

/// The two-node network with storage, a pipeline and an LNG route, two
/// traders and two seasons.
pub(crate) fn two_node() -> MarketModel {
    let mut a = node("A", true, true);
    a.has_liquefaction = true;
    a.demand = vec![curve(600.0, -4.0), curve(700.0, -4.0)];
    let mut b = node("B", true, true);
    b.has_storage = true;
    b.has_regas = true;
    b.region = Region::NonEu;
    b.demand = vec![curve(800.0, -3.0), curve(1000.0, -3.0)];
    let mut inj = service(ServiceKind::I, "B", vec![5.0, 5.0]);
    inj.loss = 0.01;
    let mut liq = service(ServiceKind::L, "A", vec![20.0, 20.0]);
    liq.loss = 0.05;
    let mut ship = service(ServiceKind::B, "A-B-lng", vec![10.0, 10.0]);
    ship.loss = 0.02;
    let mut pipe = service(ServiceKind::A, "A-B", vec![15.0, 15.0]);
    pipe.cap = Some(vec![40.0, 40.0]);
    MarketModel {
        periods: vec![period("summer", 183.0), period("winter", 182.0)],
        nodes: vec![a, b],
        arcs: vec![
            Arc { id: "A-B".into(), from: "A".into(), to: "B".into(), kind: ArcKind::Pipeline },
            Arc { id: "A-B-lng".into(), from: "A".into(), to: "B".into(), kind: ArcKind::LngRoute },
        ],
        services: vec![
            service(ServiceKind::P, "A", vec![100.0, 100.0]),
            service(ServiceKind::P, "B", vec![200.0, 230.0]),
            inj,
            service(ServiceKind::X, "B", vec![5.0, 5.0]),
            liq,
            ship,
            service(ServiceKind::R, "B", vec![8.0, 8.0]),
            pipe,
        ],
        traders: vec![
            trader("FA", "A", &["A", "B"], &["A", "B"], 0.6, 2),
            trader("FB", "B", &["B"], &["B"], 0.3, 2),
        ],
    }
}
