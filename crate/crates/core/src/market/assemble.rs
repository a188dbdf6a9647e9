//! Assembly of the market model into one LCP.
//!
//! Every variable of the equilibrium is paired with exactly one row:
//!
//! | variable        | row                                                     |
//! |-----------------|---------------------------------------------------------|
//! | `q^P[f,t]`      | marginal production cost ≥ value at the source node     |
//! | `q^I[f,n,t]`    | injection cost + node value ≥ storage value             |
//! | `q^X[f,n,t]`    | extraction cost + storage value ≥ node value            |
//! | `q^A[f,a,t]`    | pipeline cost + origin value ≥ destination value        |
//! | `q^B[f,a,t]`    | liquefaction + shipping + regas cost, as above          |
//! | `q^C[f,n,t]`    | node value ≥ perceived marginal revenue                 |
//! | `φ^N[f,n,t]`    | per-trader node balance                                 |
//! | `φ^S[f,n]`      | annual storage balance                                  |
//! | `α[z,t]`        | per-period capacity                                     |
//! | `α^T[z]`        | annual capacity                                         |
//! | `λ[n,t]`        | market clearing on the inverse demand curve             |
//!
//! Losses scale the arriving side of a flow. A flow row carries the dual of
//! its arrival node with the same `(1 − loss)` factor, so after scaling each
//! period's rows by its duration and each clearing row by `1/|slope|` the
//! matrix is the sum of a positive semidefinite and a skew-symmetric part.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::types::{ArcKind, MarketModel, ServiceKind};
use super::validate::validate_model;
use crate::error::{Error, Result};
use crate::lcp::LcpProblem;

/// Identity of one LCP variable (and of its paired row).
///
/// Indices refer to `MarketModel::{traders, nodes, arcs, services, periods}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Production { trader: usize, period: usize },
    Injection { trader: usize, node: usize, period: usize },
    Extraction { trader: usize, node: usize, period: usize },
    Pipeline { trader: usize, arc: usize, period: usize },
    Lng { trader: usize, arc: usize, period: usize },
    Sales { trader: usize, node: usize, period: usize },
    NodeValue { trader: usize, node: usize, period: usize },
    StorageValue { trader: usize, node: usize },
    Congestion { service: usize, period: usize },
    AnnualCongestion { service: usize },
    Price { node: usize, period: usize },
}

impl Var {
    /// Human-readable label using the model's ids.
    pub fn label(&self, model: &MarketModel) -> String {
        let f = |i: usize| model.traders[i].id.as_str();
        let n = |i: usize| model.nodes[i].id.as_str();
        let a = |i: usize| model.arcs[i].id.as_str();
        let t = |i: usize| model.periods[i].id.as_str();
        let z = |i: usize| {
            let s = &model.services[i];
            format!("{}@{}", s.kind.code(), s.at)
        };
        match *self {
            Var::Production { trader, period } => format!("q^P[{},{}]", f(trader), t(period)),
            Var::Injection { trader, node, period } => {
                format!("q^I[{},{},{}]", f(trader), n(node), t(period))
            }
            Var::Extraction { trader, node, period } => {
                format!("q^X[{},{},{}]", f(trader), n(node), t(period))
            }
            Var::Pipeline { trader, arc, period } => {
                format!("q^A[{},{},{}]", f(trader), a(arc), t(period))
            }
            Var::Lng { trader, arc, period } => format!("q^B[{},{},{}]", f(trader), a(arc), t(period)),
            Var::Sales { trader, node, period } => {
                format!("q^C[{},{},{}]", f(trader), n(node), t(period))
            }
            Var::NodeValue { trader, node, period } => {
                format!("phi^N[{},{},{}]", f(trader), n(node), t(period))
            }
            Var::StorageValue { trader, node } => format!("phi^S[{},{}]", f(trader), n(node)),
            Var::Congestion { service, period } => format!("alpha[{},{}]", z(service), t(period)),
            Var::AnnualCongestion { service } => format!("alpha^T[{}]", z(service)),
            Var::Price { node, period } => format!("lambda[{},{}]", n(node), t(period)),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Bidirectional map between LCP positions and variable identities.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    vars: Vec<Var>,
    lookup: HashMap<Var, usize>,
}

impl IndexMap {
    pub fn from_vars(vars: Vec<Var>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(vars.len());
        for (i, v) in vars.iter().enumerate() {
            if lookup.insert(*v, i).is_some() {
                return Err(Error::Assembly(format!("duplicate variable identity {v}")));
            }
        }
        Ok(Self { vars, lookup })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn index(&self, var: &Var) -> Option<usize> {
        self.lookup.get(var).copied()
    }

    pub fn var(&self, i: usize) -> Var {
        self.vars[i]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Index-resolved view of a validated model.
#[derive(Debug, Clone)]
pub struct Topology {
    pub n_periods: usize,
    pub durations: Vec<f64>,
    pub arc_from: Vec<usize>,
    pub arc_to: Vec<usize>,
    pub arc_kind: Vec<ArcKind>,
    /// Service on each arc (A or B).
    pub arc_service: Vec<Option<usize>>,
    /// Per node: services P, I, X, L, R.
    pub producer: Vec<Option<usize>>,
    pub injection: Vec<Option<usize>>,
    pub extraction: Vec<Option<usize>>,
    pub liquefaction: Vec<Option<usize>>,
    pub regas: Vec<Option<usize>>,
    pub is_storage: Vec<bool>,
    pub trader_source: Vec<usize>,
    pub trader_nodes: Vec<Vec<usize>>,
    pub trader_consumers: Vec<Vec<usize>>,
    pub trader_arcs: Vec<Vec<usize>>,
    /// `theta[f][n][t]`, zero where trader `f` does not serve `n`.
    pub theta: Vec<Vec<Vec<f64>>>,
}

impl Topology {
    /// Resolve ids to indices. The model must already be valid.
    pub fn new(model: &MarketModel) -> Self {
        let nn = model.nodes.len();
        let np = model.periods.len();
        let node = |id: &str| model.node_index(id).expect("validated node id");
        let per_node = |kind: ServiceKind| -> Vec<Option<usize>> {
            model
                .nodes
                .iter()
                .map(|n| model.service_index(kind, &n.id))
                .collect()
        };
        let arc_service = model
            .arcs
            .iter()
            .map(|a| {
                let kind = match a.kind {
                    ArcKind::Pipeline => ServiceKind::A,
                    ArcKind::LngRoute => ServiceKind::B,
                };
                model.service_index(kind, &a.id)
            })
            .collect();
        let theta = model
            .traders
            .iter()
            .map(|f| {
                let mut th = vec![vec![0.0; np]; nn];
                for c in &f.consumers {
                    let n = node(c);
                    for (t, v) in th[n].iter_mut().enumerate() {
                        *v = f.theta(c, t);
                    }
                }
                th
            })
            .collect();
        Self {
            n_periods: np,
            durations: model.periods.iter().map(|p| p.duration).collect(),
            arc_from: model.arcs.iter().map(|a| node(&a.from)).collect(),
            arc_to: model.arcs.iter().map(|a| node(&a.to)).collect(),
            arc_kind: model.arcs.iter().map(|a| a.kind).collect(),
            arc_service,
            producer: per_node(ServiceKind::P),
            injection: per_node(ServiceKind::I),
            extraction: per_node(ServiceKind::X),
            liquefaction: per_node(ServiceKind::L),
            regas: per_node(ServiceKind::R),
            is_storage: model.nodes.iter().map(|n| n.has_storage).collect(),
            trader_source: model.traders.iter().map(|f| node(&f.source)).collect(),
            trader_nodes: model
                .traders
                .iter()
                .map(|f| f.nodes.iter().map(|n| node(n)).collect())
                .collect(),
            trader_consumers: model
                .traders
                .iter()
                .map(|f| f.consumers.iter().map(|n| node(n)).collect())
                .collect(),
            trader_arcs: (0..model.traders.len()).map(|f| model.usable_arcs(f)).collect(),
            theta,
        }
    }

    /// Storage nodes reachable by trader `f`.
    pub fn trader_storage(&self, f: usize) -> impl Iterator<Item = usize> + '_ {
        self.trader_nodes[f].iter().copied().filter(|&n| self.is_storage[n])
    }

    /// Services whose capacity the LNG route `a` occupies: L at the origin,
    /// B on the route, R at the destination.
    pub fn lng_chain(&self, a: usize) -> [Option<usize>; 3] {
        [
            self.liquefaction[self.arc_from[a]],
            self.arc_service[a],
            self.regas[self.arc_to[a]],
        ]
    }
}

/// Enumerate the variables of `model` in assembly order.
fn enumerate_vars(model: &MarketModel, topo: &Topology) -> Vec<Var> {
    let np = topo.n_periods;
    let mut vars = Vec::new();
    for f in 0..model.traders.len() {
        vars.extend((0..np).map(|t| Var::Production { trader: f, period: t }));
        for n in topo.trader_storage(f) {
            for t in 0..np {
                vars.push(Var::Injection { trader: f, node: n, period: t });
                vars.push(Var::Extraction { trader: f, node: n, period: t });
            }
        }
        for &a in &topo.trader_arcs[f] {
            for t in 0..np {
                vars.push(match topo.arc_kind[a] {
                    ArcKind::Pipeline => Var::Pipeline { trader: f, arc: a, period: t },
                    ArcKind::LngRoute => Var::Lng { trader: f, arc: a, period: t },
                });
            }
        }
        for &n in &topo.trader_consumers[f] {
            vars.extend((0..np).map(|t| Var::Sales { trader: f, node: n, period: t }));
        }
        for &n in &topo.trader_nodes[f] {
            vars.extend((0..np).map(|t| Var::NodeValue { trader: f, node: n, period: t }));
        }
        for n in topo.trader_storage(f) {
            vars.push(Var::StorageValue { trader: f, node: n });
        }
    }
    for (s, spec) in model.services.iter().enumerate() {
        if spec.cap.is_some() {
            vars.extend((0..np).map(|t| Var::Congestion { service: s, period: t }));
        }
    }
    for (s, spec) in model.services.iter().enumerate() {
        if spec.cap_annual.is_some() {
            vars.push(Var::AnnualCongestion { service: s });
        }
    }
    for (n, node) in model.nodes.iter().enumerate() {
        if node.has_consumer {
            vars.extend((0..np).map(|t| Var::Price { node: n, period: t }));
        }
    }
    vars
}

struct Builder<'a> {
    index: &'a IndexMap,
    m: DMatrix<f64>,
    q: DVector<f64>,
}

impl Builder<'_> {
    fn add(&mut self, row: usize, col: Var, coef: f64) {
        let c = self.index.index(&col).expect("column enumerated");
        self.m[(row, c)] += coef;
    }

    /// Add `+1` on the congestion duals of service `s` in period `t`, if any.
    fn add_fees(&mut self, row: usize, model: &MarketModel, s: Option<usize>, t: usize) {
        let Some(s) = s else { return };
        if model.services[s].cap.is_some() {
            self.add(row, Var::Congestion { service: s, period: t }, 1.0);
        }
        if model.services[s].cap_annual.is_some() {
            self.add(row, Var::AnnualCongestion { service: s }, 1.0);
        }
    }
}

/// Build the LCP of the market equilibrium.
pub fn assemble_lcp(model: &MarketModel) -> Result<(LcpProblem, IndexMap)> {
    let errors: Vec<_> = validate_model(model).into_iter().filter(|d| d.is_error()).collect();
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    let topo = Topology::new(model);
    let index = IndexMap::from_vars(enumerate_vars(model, &topo))?;
    let d = index.len();
    let mut b = Builder {
        index: &index,
        m: DMatrix::zeros(d, d),
        q: DVector::zeros(d),
    };
    let keep = |s: Option<usize>| s.map_or(1.0, |s| 1.0 - model.services[s].loss);
    let linc = |s: Option<usize>, t: usize| s.map_or(0.0, |s| model.services[s].linc[t]);

    for i in 0..d {
        match index.var(i) {
            Var::Production { trader: f, period: t } => {
                let n = topo.trader_source[f];
                let s = topo.producer[n];
                let spec = &model.services[s.expect("validated producer")];
                b.q[i] = spec.linc[t];
                b.m[(i, i)] += spec.quac_at(t);
                b.add_fees(i, model, s, t);
                b.add(i, Var::NodeValue { trader: f, node: n, period: t }, -keep(s));
            }
            Var::Injection { trader: f, node: n, period: t } => {
                let s = topo.injection[n];
                b.q[i] = linc(s, t);
                b.add_fees(i, model, s, t);
                b.add(i, Var::NodeValue { trader: f, node: n, period: t }, 1.0);
                b.add(i, Var::StorageValue { trader: f, node: n }, -keep(s));
            }
            Var::Extraction { trader: f, node: n, period: t } => {
                let s = topo.extraction[n];
                b.q[i] = linc(s, t);
                b.add_fees(i, model, s, t);
                b.add(i, Var::NodeValue { trader: f, node: n, period: t }, -keep(s));
                b.add(i, Var::StorageValue { trader: f, node: n }, 1.0);
            }
            Var::Pipeline { trader: f, arc: a, period: t } => {
                let s = topo.arc_service[a];
                b.q[i] = linc(s, t);
                b.add_fees(i, model, s, t);
                b.add(i, Var::NodeValue { trader: f, node: topo.arc_from[a], period: t }, 1.0);
                b.add(i, Var::NodeValue { trader: f, node: topo.arc_to[a], period: t }, -keep(s));
            }
            Var::Lng { trader: f, arc: a, period: t } => {
                let chain = topo.lng_chain(a);
                let mut arrive = 1.0;
                for s in chain {
                    b.q[i] += linc(s, t);
                    b.add_fees(i, model, s, t);
                    arrive *= keep(s);
                }
                b.add(i, Var::NodeValue { trader: f, node: topo.arc_from[a], period: t }, 1.0);
                b.add(i, Var::NodeValue { trader: f, node: topo.arc_to[a], period: t }, -arrive);
            }
            Var::Sales { trader: f, node: n, period: t } => {
                let slope = model.nodes[n].demand[t].slope;
                b.m[(i, i)] += -topo.theta[f][n][t] * slope;
                b.add(i, Var::Price { node: n, period: t }, -1.0);
                b.add(i, Var::NodeValue { trader: f, node: n, period: t }, 1.0);
            }
            Var::NodeValue { trader: f, node: n, period: t } => {
                if topo.trader_source[f] == n {
                    b.add(i, Var::Production { trader: f, period: t }, keep(topo.producer[n]));
                }
                if topo.is_storage[n] {
                    b.add(i, Var::Extraction { trader: f, node: n, period: t }, keep(topo.extraction[n]));
                    b.add(i, Var::Injection { trader: f, node: n, period: t }, -1.0);
                }
                if model.nodes[n].has_consumer && topo.trader_consumers[f].contains(&n) {
                    b.add(i, Var::Sales { trader: f, node: n, period: t }, -1.0);
                }
                for &a in &topo.trader_arcs[f] {
                    let (flow, arrive) = match topo.arc_kind[a] {
                        ArcKind::Pipeline => (
                            Var::Pipeline { trader: f, arc: a, period: t },
                            keep(topo.arc_service[a]),
                        ),
                        ArcKind::LngRoute => (
                            Var::Lng { trader: f, arc: a, period: t },
                            topo.lng_chain(a).into_iter().map(keep).product(),
                        ),
                    };
                    if topo.arc_to[a] == n {
                        b.add(i, flow, arrive);
                    }
                    if topo.arc_from[a] == n {
                        b.add(i, flow, -1.0);
                    }
                }
            }
            Var::StorageValue { trader: f, node: n } => {
                let keep_in = keep(topo.injection[n]);
                for t in 0..topo.n_periods {
                    let dur = topo.durations[t];
                    b.add(i, Var::Injection { trader: f, node: n, period: t }, dur * keep_in);
                    b.add(i, Var::Extraction { trader: f, node: n, period: t }, -dur);
                }
            }
            Var::Congestion { service: s, period: t } => {
                b.q[i] = model.services[s].cap_at(t).expect("capped service");
                for v in service_flows(model, &topo, s, t) {
                    if index.index(&v).is_some() {
                        b.add(i, v, -1.0);
                    }
                }
            }
            Var::AnnualCongestion { service: s } => {
                b.q[i] = model.services[s].cap_annual.expect("annual cap");
                for t in 0..topo.n_periods {
                    let dur = topo.durations[t];
                    for v in service_flows(model, &topo, s, t) {
                        if index.index(&v).is_some() {
                            b.add(i, v, -dur);
                        }
                    }
                }
            }
            Var::Price { node: n, period: t } => {
                let curve = &model.nodes[n].demand[t];
                b.q[i] = -curve.intercept;
                b.m[(i, i)] += 1.0;
                for f in 0..model.traders.len() {
                    if topo.trader_consumers[f].contains(&n) {
                        b.add(i, Var::Sales { trader: f, node: n, period: t }, -curve.slope);
                    }
                }
            }
        }
    }

    let labels = index.vars().iter().map(|v| v.label(model)).collect();
    let problem = LcpProblem::with_labels(b.m, b.q, labels)?;
    Ok((problem, index))
}

/// Departure-side flow variables that occupy service `s` in period `t`.
///
/// Variables a trader cannot use are included; callers filter them through
/// the index map.
pub(crate) fn service_flows(model: &MarketModel, topo: &Topology, s: usize, t: usize) -> Vec<Var> {
    let spec = &model.services[s];
    let nf = model.traders.len();
    let mut out = Vec::new();
    match spec.kind {
        ServiceKind::P => {
            let n = model.node_index(&spec.at).expect("validated");
            for f in 0..nf {
                if topo.trader_source[f] == n {
                    out.push(Var::Production { trader: f, period: t });
                }
            }
        }
        ServiceKind::I | ServiceKind::X => {
            let n = model.node_index(&spec.at).expect("validated");
            for f in 0..nf {
                out.push(if spec.kind == ServiceKind::I {
                    Var::Injection { trader: f, node: n, period: t }
                } else {
                    Var::Extraction { trader: f, node: n, period: t }
                });
            }
        }
        ServiceKind::A => {
            let a = model.arc_index(&spec.at).expect("validated");
            out.extend((0..nf).map(|f| Var::Pipeline { trader: f, arc: a, period: t }));
        }
        ServiceKind::B => {
            let a = model.arc_index(&spec.at).expect("validated");
            out.extend((0..nf).map(|f| Var::Lng { trader: f, arc: a, period: t }));
        }
        ServiceKind::L | ServiceKind::R => {
            let n = model.node_index(&spec.at).expect("validated");
            for a in 0..model.arcs.len() {
                if topo.arc_kind[a] != ArcKind::LngRoute {
                    continue;
                }
                let end = if spec.kind == ServiceKind::L {
                    topo.arc_from[a]
                } else {
                    topo.arc_to[a]
                };
                if end == n {
                    out.extend((0..nf).map(|f| Var::Lng { trader: f, arc: a, period: t }));
                }
            }
        }
    }
    out
}
