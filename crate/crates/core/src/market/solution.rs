use ndarray::{Array1, Array2, Array3};

use super::assemble::{service_flows, IndexMap, Topology, Var};
use super::types::MarketModel;
use crate::error::{Error, Result};
use crate::lcp::{LcpSolution, SolveStatus};

/// Structured equilibrium: flows in mcm/d, duals in k€/mcm.
///
/// Entries for combinations a trader cannot use stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    /// `q^P[f, t]`, drawn at the trader's source node.
    pub production: Array2<f64>,
    /// `q^I[f, n, t]`
    pub injection: Array3<f64>,
    /// `q^X[f, n, t]`
    pub extraction: Array3<f64>,
    /// Departure-side arc flow `[f, arc, t]`: `q^A` on pipelines, `q^B` on
    /// LNG routes.
    pub arc_flow: Array3<f64>,
    /// `q^C[f, n, t]`
    pub sales: Array3<f64>,
    /// `φ^N[f, n, t]`
    pub node_value: Array3<f64>,
    /// `φ^S[f, n]`
    pub storage_value: Array2<f64>,
    /// `α[z, t]`
    pub congestion: Array2<f64>,
    /// `α^T[z]`
    pub annual_congestion: Array1<f64>,
    /// `λ[n, t]`
    pub price: Array2<f64>,
    /// `s^C[n, t] = Σ_f q^C[f, n, t]`
    pub consumption: Array2<f64>,
    /// `s^Z[z, t]`: departure-side throughput of each service.
    pub throughput: Array2<f64>,
    pub status: SolveStatus,
    pub feasibility_residual: f64,
    pub complementarity_residual: f64,
}

impl EquilibriumSolution {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }

    /// Pipeline flow `q^A[f, a, t]` (zero on LNG routes).
    pub fn pipeline_flow(&self, model: &MarketModel, f: usize, a: usize, t: usize) -> f64 {
        match model.arcs[a].kind {
            super::ArcKind::Pipeline => self.arc_flow[[f, a, t]],
            super::ArcKind::LngRoute => 0.0,
        }
    }

    /// LNG flow `q^B[f, a, t]` (zero on pipelines).
    pub fn lng_flow(&self, model: &MarketModel, f: usize, a: usize, t: usize) -> f64 {
        match model.arcs[a].kind {
            super::ArcKind::LngRoute => self.arc_flow[[f, a, t]],
            super::ArcKind::Pipeline => 0.0,
        }
    }
}

/// Map an LCP vector back onto named equilibrium quantities.
///
/// Aggregates (`consumption`, `throughput`) are recomputed from the flows.
pub fn extract_solution(model: &MarketModel, index: &IndexMap, z: &[f64]) -> Result<EquilibriumSolution> {
    extract_with_status(model, index, z, SolveStatus::Solved, 0.0, 0.0)
}

pub(crate) fn extract_lcp(model: &MarketModel, index: &IndexMap, sol: &LcpSolution) -> Result<EquilibriumSolution> {
    extract_with_status(
        model,
        index,
        sol.z.as_slice(),
        sol.status,
        sol.feasibility_residual,
        sol.complementarity_residual,
    )
}

fn extract_with_status(
    model: &MarketModel,
    index: &IndexMap,
    z: &[f64],
    status: SolveStatus,
    feasibility_residual: f64,
    complementarity_residual: f64,
) -> Result<EquilibriumSolution> {
    if z.len() != index.len() {
        return Err(Error::InvalidInput(format!(
            "solution vector has length {}, index map has {} entries",
            z.len(),
            index.len()
        )));
    }
    let nf = model.traders.len();
    let nn = model.nodes.len();
    let na = model.arcs.len();
    let ns = model.services.len();
    let np = model.periods.len();
    let mut s = EquilibriumSolution {
        production: Array2::zeros((nf, np)),
        injection: Array3::zeros((nf, nn, np)),
        extraction: Array3::zeros((nf, nn, np)),
        arc_flow: Array3::zeros((nf, na, np)),
        sales: Array3::zeros((nf, nn, np)),
        node_value: Array3::zeros((nf, nn, np)),
        storage_value: Array2::zeros((nf, nn)),
        congestion: Array2::zeros((ns, np)),
        annual_congestion: Array1::zeros(ns),
        price: Array2::zeros((nn, np)),
        consumption: Array2::zeros((nn, np)),
        throughput: Array2::zeros((ns, np)),
        status,
        feasibility_residual,
        complementarity_residual,
    };
    for (i, &v) in z.iter().enumerate() {
        match index.var(i) {
            Var::Production { trader, period } => s.production[[trader, period]] = v,
            Var::Injection { trader, node, period } => s.injection[[trader, node, period]] = v,
            Var::Extraction { trader, node, period } => s.extraction[[trader, node, period]] = v,
            Var::Pipeline { trader, arc, period } | Var::Lng { trader, arc, period } => {
                s.arc_flow[[trader, arc, period]] = v
            }
            Var::Sales { trader, node, period } => s.sales[[trader, node, period]] = v,
            Var::NodeValue { trader, node, period } => s.node_value[[trader, node, period]] = v,
            Var::StorageValue { trader, node } => s.storage_value[[trader, node]] = v,
            Var::Congestion { service, period } => s.congestion[[service, period]] = v,
            Var::AnnualCongestion { service } => s.annual_congestion[service] = v,
            Var::Price { node, period } => s.price[[node, period]] = v,
        }
    }
    for n in 0..nn {
        for t in 0..np {
            s.consumption[[n, t]] = (0..nf).map(|f| s.sales[[f, n, t]]).sum();
        }
    }
    let topo = Topology::new(model);
    for z in 0..ns {
        for t in 0..np {
            s.throughput[[z, t]] = service_flows(model, &topo, z, t)
                .iter()
                .map(|v| flow_value(&s, v))
                .sum();
        }
    }
    Ok(s)
}

/// Value of a flow variable in an extracted solution.
pub(crate) fn flow_value(s: &EquilibriumSolution, v: &Var) -> f64 {
    match *v {
        Var::Production { trader, period } => s.production[[trader, period]],
        Var::Injection { trader, node, period } => s.injection[[trader, node, period]],
        Var::Extraction { trader, node, period } => s.extraction[[trader, node, period]],
        Var::Pipeline { trader, arc, period } | Var::Lng { trader, arc, period } => {
            s.arc_flow[[trader, arc, period]]
        }
        Var::Sales { trader, node, period } => s.sales[[trader, node, period]],
        _ => 0.0,
    }
}
