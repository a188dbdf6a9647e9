use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::demand::demand_curve_from_calibration;

/// One period of the simulated year, e.g. summer or winter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub id: String,
    /// Length in days.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    EuWest,
    EuEast,
    NonEu,
}

impl Region {
    pub fn is_eu(self) -> bool {
        !matches!(self, Region::NonEu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub country: String,
    pub region: Region,
    #[serde(default)]
    pub has_producer: bool,
    #[serde(default)]
    pub has_consumer: bool,
    #[serde(default)]
    pub has_storage: bool,
    #[serde(default)]
    pub has_liquefaction: bool,
    #[serde(default)]
    pub has_regas: bool,
    /// Inverse demand per period; present exactly when `has_consumer`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub demand: Vec<DemandCurve>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    Pipeline,
    LngRoute,
}

/// Directed connection between two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub kind: ArcKind,
}

/// Service provider types. Producers are counted as a service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ServiceKind {
    /// Production
    P,
    /// Storage injection
    I,
    /// Storage extraction
    X,
    /// Liquefaction
    L,
    /// Regasification
    R,
    /// Pipeline transport
    A,
    /// LNG shipping
    B,
}

impl ServiceKind {
    pub const ALL: [ServiceKind; 7] = [
        ServiceKind::P,
        ServiceKind::I,
        ServiceKind::X,
        ServiceKind::L,
        ServiceKind::R,
        ServiceKind::A,
        ServiceKind::B,
    ];

    /// Whether the service sits on an arc rather than a node.
    pub fn on_arc(self) -> bool {
        matches!(self, ServiceKind::A | ServiceKind::B)
    }

    pub fn code(self) -> &'static str {
        match self {
            ServiceKind::P => "P",
            ServiceKind::I => "I",
            ServiceKind::X => "X",
            ServiceKind::L => "L",
            ServiceKind::R => "R",
            ServiceKind::A => "A",
            ServiceKind::B => "B",
        }
    }
}

/// Cost, loss and capacity data of one service provider.
///
/// Flows are in mcm/d, costs in k€/mcm. `quac` is only meaningful for
/// producers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub kind: ServiceKind,
    /// Node id for P, I, X, L, R; arc id for A, B.
    pub at: String,
    /// Linear cost per period.
    pub linc: Vec<f64>,
    /// Quadratic cost coefficient per period (k€/mcm per mcm/d). Empty means zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quac: Vec<f64>,
    /// Fraction of the departing flow lost in transit, in `[0, 1)`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub loss: f64,
    /// Per-period capacity in mcm/d. `None` means unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<Vec<f64>>,
    /// Annual capacity in mcm/y. For injection this is the working-gas volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_annual: Option<f64>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl ServiceSpec {
    pub fn quac_at(&self, t: usize) -> f64 {
        self.quac.get(t).copied().unwrap_or(0.0)
    }

    pub fn cap_at(&self, t: usize) -> Option<f64> {
        self.cap.as_ref().map(|c| c[t])
    }
}

/// The calibration point a demand curve was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandAnchor {
    /// Reference demand, mcm/d.
    pub demand: f64,
    /// Willingness to pay at the reference demand, k€/mcm.
    pub price: f64,
    /// Price elasticity at the anchor point.
    pub elasticity: f64,
}

/// Affine inverse demand `price = intercept + slope · consumption`.
///
/// In files either the coefficients or the anchor (or both) may be given;
/// missing coefficients are derived from the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDemandCurve")]
pub struct DemandCurve {
    pub intercept: f64,
    pub slope: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<DemandAnchor>,
}

impl DemandCurve {
    pub fn from_anchor(anchor: DemandAnchor) -> crate::Result<Self> {
        let (intercept, slope) =
            demand_curve_from_calibration(anchor.demand, anchor.price, anchor.elasticity)?;
        Ok(Self {
            intercept,
            slope,
            anchor: Some(anchor),
        })
    }

    pub fn price_at(&self, consumption: f64) -> f64 {
        self.intercept + self.slope * consumption
    }
}

#[derive(Deserialize)]
struct RawDemandCurve {
    intercept: Option<f64>,
    slope: Option<f64>,
    anchor: Option<DemandAnchor>,
}

impl TryFrom<RawDemandCurve> for DemandCurve {
    type Error = String;

    fn try_from(raw: RawDemandCurve) -> Result<Self, Self::Error> {
        match (raw.intercept, raw.slope, raw.anchor) {
            (Some(intercept), Some(slope), anchor) => Ok(Self {
                intercept,
                slope,
                anchor,
            }),
            (None, None, Some(anchor)) => Self::from_anchor(anchor).map_err(|e| e.to_string()),
            _ => Err("demand curve needs both intercept and slope, or an anchor".into()),
        }
    }
}

/// The trading arm of one producer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trader {
    pub id: String,
    /// Node whose producer supplies this trader.
    pub source: String,
    /// Nodes the trader can move gas through.
    pub nodes: Vec<String>,
    /// Consumer nodes the trader may sell to.
    pub consumers: Vec<String>,
    /// Usable arcs. `None` means every arc with both ends in `nodes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arcs: Option<Vec<String>>,
    /// Conjectural-variations parameter per consumer node and period, in `[0, 1]`.
    #[serde(default)]
    pub market_power: BTreeMap<String, Vec<f64>>,
}

impl Trader {
    pub fn theta(&self, node: &str, t: usize) -> f64 {
        self.market_power
            .get(node)
            .and_then(|v| v.get(t))
            .copied()
            .unwrap_or(0.0)
    }
}

/// The full network description.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarketModel {
    pub periods: Vec<Period>,
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
    pub services: Vec<ServiceSpec>,
    pub traders: Vec<Trader>,
}

impl MarketModel {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn arc_index(&self, id: &str) -> Option<usize> {
        self.arcs.iter().position(|a| a.id == id)
    }

    pub fn trader_index(&self, id: &str) -> Option<usize> {
        self.traders.iter().position(|f| f.id == id)
    }

    pub fn period_index(&self, id: &str) -> Option<usize> {
        self.periods.iter().position(|p| p.id == id)
    }

    pub fn service_index(&self, kind: ServiceKind, at: &str) -> Option<usize> {
        self.services
            .iter()
            .position(|s| s.kind == kind && s.at == at)
    }

    pub fn service(&self, kind: ServiceKind, at: &str) -> Option<&ServiceSpec> {
        self.service_index(kind, at).map(|i| &self.services[i])
    }

    pub fn total_days(&self) -> f64 {
        self.periods.iter().map(|p| p.duration).sum()
    }

    /// Arcs trader `f` may use, as indices into `arcs`.
    pub fn usable_arcs(&self, f: usize) -> Vec<usize> {
        let trader = &self.traders[f];
        match &trader.arcs {
            Some(ids) => ids.iter().filter_map(|id| self.arc_index(id)).collect(),
            None => self
                .arcs
                .iter()
                .enumerate()
                .filter(|(_, a)| trader.nodes.contains(&a.from) && trader.nodes.contains(&a.to))
                .map(|(i, _)| i)
                .collect(),
        }
    }

    pub fn consumer_nodes(&self) -> impl Iterator<Item = (usize, &Node)> {
        self.nodes.iter().enumerate().filter(|(_, n)| n.has_consumer)
    }
}
