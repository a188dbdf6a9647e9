use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{DemandAnchor, DemandCurve, Diagnostic, MarketModel};

/// Per trader, per consumer node, one value per period (mcm/d).
pub type SalesTable = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

/// Reported market data of the calibration year. Maps are keyed by node id
/// and hold one value per period.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CalibrationData {
    /// `sC_data`, mcm/d.
    pub consumption: BTreeMap<String, Vec<f64>>,
    /// `piC_data`, k€/mcm.
    pub price: BTreeMap<String, Vec<f64>>,
    /// `etaC_data`
    pub elasticity: BTreeMap<String, Vec<f64>>,
    /// `qC_data` per trader and node.
    #[serde(default)]
    pub sales: SalesTable,
    /// Sales made consistent by [`adjust_reference_sales`](super::adjust_reference_sales).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjusted_sales: Option<SalesTable>,
}

impl CalibrationData {
    /// Completeness and sign checks against `model`.
    pub fn validate(&self, model: &MarketModel) -> Vec<Diagnostic> {
        let np = model.periods.len();
        let mut out = Vec::new();
        for (_, node) in model.consumer_nodes() {
            let subject = format!("calibration data for {}", node.id);
            for (what, map) in [
                ("consumption", &self.consumption),
                ("price", &self.price),
                ("elasticity", &self.elasticity),
            ] {
                match map.get(&node.id) {
                    None => out.push(Diagnostic::error(&subject, format!("missing {what}"))),
                    Some(v) if v.len() != np => out.push(Diagnostic::error(
                        &subject,
                        format!("{what} has {} entries for {np} periods", v.len()),
                    )),
                    Some(v) => {
                        let bad = match what {
                            "elasticity" => v.iter().any(|&x| !(x < 0.0)),
                            _ => v.iter().any(|&x| !(x > 0.0)),
                        };
                        if bad {
                            let rule = if what == "elasticity" { "negative" } else { "positive" };
                            out.push(Diagnostic::error(&subject, format!("{what} must be {rule}")));
                        }
                    }
                }
            }
        }
        for (trader, per_node) in &self.sales {
            let subject = format!("reference sales of {trader}");
            if model.trader_index(trader).is_none() {
                out.push(Diagnostic::error(&subject, "unknown trader"));
            }
            for (node, v) in per_node {
                if model.node_index(node).is_none() {
                    out.push(Diagnostic::error(&subject, format!("unknown node {node}")));
                }
                if v.len() != np {
                    out.push(Diagnostic::error(&subject, format!("{node} has {} entries for {np} periods", v.len())));
                }
                if v.iter().any(|&x| !(x >= 0.0)) {
                    out.push(Diagnostic::error(&subject, "sales must be non-negative"));
                }
            }
        }
        out
    }

    /// Reference sales used as soft lower bounds: the adjusted table if
    /// present, the raw one otherwise.
    pub fn reference_sales(&self) -> &SalesTable {
        self.adjusted_sales.as_ref().unwrap_or(&self.sales)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }
}

/// Admissible ranges of the tuned parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBounds {
    pub price: BTreeMap<String, Vec<Interval>>,
    pub elasticity: BTreeMap<String, Vec<Interval>>,
    /// Per trader and consumer node.
    pub theta: BTreeMap<String, BTreeMap<String, Vec<Interval>>>,
}

impl CalibrationBounds {
    /// `π* ∈ [0.85, 1.15]·piC_data`, `η* ∈ [max(−1, η−0.2), min(−0.3, η+0.2)]`,
    /// `θ ∈ [0, 1]`.
    pub fn from_data(model: &MarketModel, data: &CalibrationData) -> Result<Self> {
        let errors = data.validate(model);
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        let mut b = CalibrationBounds {
            price: BTreeMap::new(),
            elasticity: BTreeMap::new(),
            theta: BTreeMap::new(),
        };
        for (_, node) in model.consumer_nodes() {
            let prices = &data.price[&node.id];
            b.price.insert(
                node.id.clone(),
                prices.iter().map(|&p| Interval::new(0.85 * p, 1.15 * p)).collect(),
            );
            let mut windows = Vec::new();
            for &e in &data.elasticity[&node.id] {
                let w = Interval::new((e - 0.2).max(-1.0), (e + 0.2).min(-0.3));
                if w.lo > w.hi {
                    return Err(Error::InvalidInput(format!(
                        "elasticity {e} at {} leaves an empty window [{}, {}]",
                        node.id, w.lo, w.hi
                    )));
                }
                windows.push(w);
            }
            b.elasticity.insert(node.id.clone(), windows);
        }
        let np = model.periods.len();
        for f in &model.traders {
            b.theta.insert(
                f.id.clone(),
                f.consumers
                    .iter()
                    .map(|c| (c.clone(), vec![Interval::new(0.0, 1.0); np]))
                    .collect(),
            );
        }
        Ok(b)
    }

    /// Whether every parameter lies in its interval.
    pub fn contains(&self, p: &CalibrationParams) -> bool {
        let within = |b: &BTreeMap<String, Vec<Interval>>, v: &BTreeMap<String, Vec<f64>>| {
            v.iter().all(|(k, xs)| {
                b.get(k)
                    .is_some_and(|is| is.iter().zip(xs).all(|(i, &x)| i.contains(x)))
            })
        };
        within(&self.price, &p.price)
            && within(&self.elasticity, &p.elasticity)
            && p.theta
                .iter()
                .all(|(f, m)| self.theta.get(f).is_some_and(|b| within(b, m)))
    }
}

/// The tuned quantities, plus the fixed anchor demand of every curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// Anchor demand `sC*`, held fixed during calibration.
    pub demand: BTreeMap<String, Vec<f64>>,
    /// `π*`
    pub price: BTreeMap<String, Vec<f64>>,
    /// `η*`
    pub elasticity: BTreeMap<String, Vec<f64>>,
    /// `θ` per trader and consumer node.
    pub theta: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl CalibrationParams {
    /// Start values: the model's anchors where present, the reported data
    /// otherwise, clamped into `bounds`.
    pub fn initial(model: &MarketModel, data: &CalibrationData, bounds: &CalibrationBounds) -> Self {
        let mut p = CalibrationParams {
            demand: BTreeMap::new(),
            price: BTreeMap::new(),
            elasticity: BTreeMap::new(),
            theta: BTreeMap::new(),
        };
        for (_, node) in model.consumer_nodes() {
            let id = &node.id;
            let mut demand = Vec::new();
            let mut price = Vec::new();
            let mut elasticity = Vec::new();
            for (t, curve) in node.demand.iter().enumerate() {
                let a = curve.anchor.unwrap_or(DemandAnchor {
                    demand: data.consumption[id][t],
                    price: data.price[id][t],
                    elasticity: data.elasticity[id][t],
                });
                demand.push(a.demand);
                price.push(bounds.price[id][t].clamp(a.price));
                elasticity.push(bounds.elasticity[id][t].clamp(a.elasticity));
            }
            p.demand.insert(id.clone(), demand);
            p.price.insert(id.clone(), price);
            p.elasticity.insert(id.clone(), elasticity);
        }
        for f in &model.traders {
            let tb = &bounds.theta[&f.id];
            p.theta.insert(
                f.id.clone(),
                f.consumers
                    .iter()
                    .map(|c| {
                        let v = (0..model.periods.len())
                            .map(|t| tb[c][t].clamp(f.theta(c, t)))
                            .collect();
                        (c.clone(), v)
                    })
                    .collect(),
            );
        }
        p
    }

    /// A copy of `model` with demand curves and market power replaced.
    pub fn apply(&self, model: &MarketModel) -> Result<MarketModel> {
        let mut m = model.clone();
        for node in m.nodes.iter_mut().filter(|n| n.has_consumer) {
            let (Some(d), Some(p), Some(e)) = (
                self.demand.get(&node.id),
                self.price.get(&node.id),
                self.elasticity.get(&node.id),
            ) else {
                continue;
            };
            for (t, curve) in node.demand.iter_mut().enumerate() {
                *curve = DemandCurve::from_anchor(DemandAnchor {
                    demand: d[t],
                    price: p[t],
                    elasticity: e[t],
                })?;
            }
        }
        for f in m.traders.iter_mut() {
            if let Some(theta) = self.theta.get(&f.id) {
                for (node, v) in theta {
                    f.market_power.insert(node.clone(), v.clone());
                }
            }
        }
        Ok(m)
    }
}
