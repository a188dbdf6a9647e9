use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Arc, ArcKind, DemandAnchor, DemandCurve, Diagnostic, MarketModel, ServiceKind, ServiceSpec};

/// New demand anchors for the simulated year.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConsumerUpdate {
    /// Anchor demand `sC*` per node and period, mcm/d.
    #[serde(default)]
    pub demand: BTreeMap<String, Vec<f64>>,
    /// Anchor price `π*` per node and period, k€/mcm.
    #[serde(default)]
    pub price: BTreeMap<String, Vec<f64>>,
    /// Growth factor applied to `π*` of nodes without an explicit price,
    /// e.g. `0.0023` for one year at 0.23 %.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_growth: Option<f64>,
}

/// Production and liquefaction capacities of the simulated year.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SupplyUpdate {
    /// Per-period production capacity per node, mcm/d.
    #[serde(default)]
    pub production: BTreeMap<String, Vec<f64>>,
    /// Annual production capacity per node, mcm/y.
    #[serde(default)]
    pub production_annual: BTreeMap<String, f64>,
    /// Per-period liquefaction capacity per node, mcm/d.
    #[serde(default)]
    pub liquefaction: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExpansionKind {
    /// Regasification terminal.
    #[serde(rename = "R")]
    Regas,
    /// Storage site.
    #[serde(rename = "S")]
    Storage,
    /// Pipeline.
    #[serde(rename = "A")]
    Pipeline,
}

impl ExpansionKind {
    pub fn code(self) -> &'static str {
        match self {
            ExpansionKind::Regas => "R",
            ExpansionKind::Storage => "S",
            ExpansionKind::Pipeline => "A",
        }
    }
}

/// Costs of an asset that does not exist yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewAsset {
    /// Linear cost per period (injection cost for storage).
    pub linc: Vec<f64>,
    /// Extraction cost per period, storage only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction_linc: Option<Vec<f64>>,
    #[serde(default)]
    pub loss: f64,
}

/// One infrastructure project coming on line.
///
/// Capacities are added to the existing asset; an absent asset is built
/// from `new_asset` with the deltas as its capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub kind: ExpansionKind,
    /// Node of a terminal or storage site; start node of a pipeline.
    pub location: String,
    /// End node of a pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    /// Added per-period capacity in mcm/d: send-out, pipeline, or storage
    /// injection.
    #[serde(default)]
    pub capacity: f64,
    /// Added storage extraction capacity, mcm/d.
    #[serde(default)]
    pub extraction: f64,
    /// Added annual capacity in mcm/y; the working-gas volume for storage.
    #[serde(default)]
    pub volume: f64,
    /// Allows negative deltas.
    #[serde(default)]
    pub decommission: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_asset: Option<NewAsset>,
}

/// Capacities before and after applying an expansion, for reporting. For
/// storage the three slots are injection, extraction and volume; otherwise
/// only the first two (per-period and annual) are used.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CapacityChange {
    pub original: [f64; 3],
    pub added: [f64; 3],
}

/// Everything that changes between one year and the next.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct YearUpdate {
    pub year: i32,
    /// Calibration years are simulated once, with every update applied.
    #[serde(default)]
    pub calibration_year: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consumer: Option<ConsumerUpdate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply: Option<SupplyUpdate>,
    #[serde(default)]
    pub expansions: Vec<Expansion>,
}

impl Expansion {
    /// Identity of the touched asset, used to reject duplicates.
    pub fn asset_key(&self) -> (ExpansionKind, String, Option<String>) {
        (self.kind, self.location.clone(), self.to.clone())
    }

    fn service_kinds(&self) -> &'static [ServiceKind] {
        match self.kind {
            ExpansionKind::Regas => &[ServiceKind::R],
            ExpansionKind::Storage => &[ServiceKind::I, ServiceKind::X],
            ExpansionKind::Pipeline => &[ServiceKind::A],
        }
    }

    fn pipeline_arc(&self, model: &MarketModel) -> Option<usize> {
        let to = self.to.as_deref()?;
        model
            .arcs
            .iter()
            .position(|a| a.kind == ArcKind::Pipeline && a.from == self.location && a.to == to)
    }

    /// Problems resolving this expansion against `model`.
    pub fn check(&self, model: &MarketModel) -> Vec<Diagnostic> {
        let subject = format!("expansion {} at {}", self.kind.code(), self.location);
        let mut out = Vec::new();
        let Some(n) = model.node_index(&self.location) else {
            out.push(Diagnostic::error(&subject, format!("unknown node {}", self.location)));
            return out;
        };
        let deltas = [self.capacity, self.extraction, self.volume];
        if deltas.iter().any(|d| !d.is_finite()) {
            out.push(Diagnostic::error(&subject, "capacity deltas must be finite"));
        }
        if !self.decommission && deltas.iter().any(|&d| d < 0.0) {
            out.push(Diagnostic::error(&subject, "negative capacity delta without decommission flag"));
        }
        let np = model.periods.len();
        if let Some(a) = &self.new_asset {
            if a.linc.len() != np || a.extraction_linc.as_ref().is_some_and(|v| v.len() != np) {
                out.push(Diagnostic::error(&subject, format!("new asset costs need {np} periods")));
            }
        }
        let exists = match self.kind {
            ExpansionKind::Pipeline => match self.to.as_deref() {
                None => {
                    out.push(Diagnostic::error(&subject, "pipeline expansion needs an end node"));
                    return out;
                }
                Some(to) if model.node_index(to).is_none() => {
                    out.push(Diagnostic::error(&subject, format!("unknown node {to}")));
                    return out;
                }
                Some(to) if to == self.location => {
                    out.push(Diagnostic::error(&subject, "pipeline starts and ends at the same node"));
                    return out;
                }
                Some(_) => self.pipeline_arc(model).is_some(),
            },
            ExpansionKind::Regas => model.nodes[n].has_regas,
            ExpansionKind::Storage => model.nodes[n].has_storage,
        };
        if !exists && self.new_asset.is_none() {
            out.push(Diagnostic::error(&subject, "asset does not exist and no new_asset costs are given"));
        }
        out
    }

    /// Apply to `model` in place and return the reported capacities.
    pub fn apply(&self, model: &mut MarketModel) -> Result<CapacityChange> {
        let errors = self.check(model);
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        let np = model.periods.len();
        let n = model.node_index(&self.location).expect("checked");
        let at = match self.kind {
            ExpansionKind::Pipeline => match self.pipeline_arc(model) {
                Some(a) => model.arcs[a].id.clone(),
                None => {
                    let to = self.to.clone().expect("checked");
                    let mut id = format!("{}-{}", self.location, to);
                    while model.arc_index(&id).is_some() {
                        id.push('\'');
                    }
                    // explicit arc lists pick the new pipeline up like the default rule would
                    for t in &mut model.traders {
                        if let Some(arcs) = &mut t.arcs {
                            if t.nodes.contains(&self.location) && t.nodes.contains(&to) {
                                arcs.push(id.clone());
                            }
                        }
                    }
                    model.arcs.push(Arc {
                        id: id.clone(),
                        from: self.location.clone(),
                        to,
                        kind: ArcKind::Pipeline,
                    });
                    id
                }
            },
            _ => self.location.clone(),
        };
        match self.kind {
            ExpansionKind::Regas => model.nodes[n].has_regas = true,
            ExpansionKind::Storage => model.nodes[n].has_storage = true,
            ExpansionKind::Pipeline => {}
        }
        let mut change = CapacityChange::default();
        // slots: per-period capacity (injection for storage), extraction, annual
        let annual_slot = if self.kind == ExpansionKind::Storage { 2 } else { 1 };
        for &kind in self.service_kinds() {
            let s = match model.service_index(kind, &at) {
                Some(s) => s,
                None => {
                    let a = self.new_asset.as_ref().expect("checked");
                    let linc = if kind == ServiceKind::X {
                        a.extraction_linc.clone().unwrap_or_else(|| a.linc.clone())
                    } else {
                        a.linc.clone()
                    };
                    model.services.push(ServiceSpec {
                        kind,
                        at: at.clone(),
                        linc,
                        quac: Vec::new(),
                        loss: if kind == ServiceKind::X { 0.0 } else { a.loss },
                        cap: Some(vec![0.0; np]),
                        cap_annual: None,
                    });
                    model.services.len() - 1
                }
            };
            let spec = &mut model.services[s];
            let (slot, delta) = if kind == ServiceKind::X {
                (1, self.extraction)
            } else {
                (0, self.capacity)
            };
            change.original[slot] = spec.cap.as_ref().map_or(0.0, |c| c[0]);
            change.added[slot] = delta;
            match spec.cap.as_mut() {
                Some(cap) => cap.iter_mut().for_each(|c| *c = (*c + delta).max(0.0)),
                None if delta != 0.0 => {
                    log::warn!("{}@{} has no per-period capacity; delta ignored", kind.code(), at)
                }
                None => {}
            }
            if kind != ServiceKind::X {
                change.original[annual_slot] = spec.cap_annual.unwrap_or(0.0);
                change.added[annual_slot] = self.volume;
                if self.volume != 0.0 {
                    spec.cap_annual = Some((spec.cap_annual.unwrap_or(0.0) + self.volume).max(0.0));
                }
            }
        }
        Ok(change)
    }
}

impl ConsumerUpdate {
    pub fn apply(&self, model: &mut MarketModel) -> Result<()> {
        for node in model.nodes.iter_mut().filter(|n| n.has_consumer) {
            let demand = self.demand.get(&node.id);
            let price = self.price.get(&node.id);
            if demand.is_none() && price.is_none() && self.price_growth.is_none() {
                continue;
            }
            for (t, curve) in node.demand.iter_mut().enumerate() {
                let Some(a) = curve.anchor else {
                    return Err(Error::InvalidInput(format!(
                        "consumer update needs an anchored demand curve at {}",
                        node.id
                    )));
                };
                let pick = |v: Option<&Vec<f64>>, what: &str| -> Result<Option<f64>> {
                    match v {
                        None => Ok(None),
                        Some(v) => v.get(t).copied().map(Some).ok_or_else(|| {
                            Error::InvalidInput(format!("{what} update for {} lacks period {t}", node.id))
                        }),
                    }
                };
                let new_price = match pick(price, "price")? {
                    Some(p) => p,
                    None => a.price * (1.0 + self.price_growth.unwrap_or(0.0)),
                };
                *curve = DemandCurve::from_anchor(DemandAnchor {
                    demand: pick(demand, "demand")?.unwrap_or(a.demand),
                    price: new_price,
                    elasticity: a.elasticity,
                })?;
            }
        }
        Ok(())
    }
}

impl SupplyUpdate {
    pub fn apply(&self, model: &mut MarketModel) -> Result<()> {
        let np = model.periods.len();
        let mut set = |kind: ServiceKind, node: &str, cap: Option<&Vec<f64>>, annual: Option<f64>| -> Result<()> {
            let s = model.service_index(kind, node).ok_or_else(|| {
                Error::InvalidInput(format!("supply update for missing service {}@{node}", kind.code()))
            })?;
            if let Some(c) = cap {
                if c.len() != np || c.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::InvalidInput(format!(
                        "supply update for {}@{node} needs {np} non-negative capacities",
                        kind.code()
                    )));
                }
                model.services[s].cap = Some(c.clone());
            }
            if let Some(a) = annual {
                model.services[s].cap_annual = Some(a);
            }
            Ok(())
        };
        for (node, cap) in &self.production {
            set(ServiceKind::P, node, Some(cap), None)?;
        }
        for (node, &a) in &self.production_annual {
            set(ServiceKind::P, node, None, Some(a))?;
        }
        for (node, cap) in &self.liquefaction {
            set(ServiceKind::L, node, Some(cap), None)?;
        }
        Ok(())
    }
}
