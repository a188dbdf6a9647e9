use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::{ArcKind, MarketModel, ServiceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// One finding of [`validate_model`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// What the finding is about, e.g. `trader F1` or `service A@n-m`.
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn error(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub(crate) fn warning(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}[{}]: {}", self.subject, self.message)
    }
}

/// Tolerance on the year length in days.
const YEAR_TOL: f64 = 1.0;

/// Collect every invariant violation of `model`. An empty list means the
/// model is valid; warnings alone do not block assembly.
pub fn validate_model(model: &MarketModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let np = model.periods.len();

    // periods
    if np == 0 {
        out.push(Diagnostic::error("periods", "model has no periods"));
    }
    check_unique(model.periods.iter().map(|p| p.id.as_str()), "period", &mut out);
    for p in &model.periods {
        if !(p.duration > 0.0 && p.duration.is_finite()) {
            out.push(Diagnostic::error(
                format!("period {}", p.id),
                format!("duration must be positive, got {}", p.duration),
            ));
        }
    }
    if np > 0 {
        let days = model.total_days();
        if (days - 365.0).abs() > YEAR_TOL {
            out.push(Diagnostic::error(
                "periods",
                format!("durations sum to {days} days, expected 365 ± 1"),
            ));
        }
    }

    // nodes
    check_unique(model.nodes.iter().map(|n| n.id.as_str()), "node", &mut out);
    let node_ids: HashSet<&str> = model.nodes.iter().map(|n| n.id.as_str()).collect();
    for n in &model.nodes {
        let subject = format!("node {}", n.id);
        if n.has_consumer {
            if n.demand.len() != np {
                out.push(Diagnostic::error(
                    &subject,
                    format!("consumer node needs {np} demand curves, found {}", n.demand.len()),
                ));
            }
        } else if !n.demand.is_empty() {
            out.push(Diagnostic::error(&subject, "demand curves given for a non-consumer node"));
        }
        for (t, c) in n.demand.iter().enumerate() {
            if !(c.slope < 0.0) {
                out.push(Diagnostic::error(
                    &subject,
                    format!("demand slope in period {t} must be strictly negative, got {}", c.slope),
                ));
            }
            if !(c.intercept > 0.0) {
                out.push(Diagnostic::error(
                    &subject,
                    format!("demand intercept in period {t} must be positive, got {}", c.intercept),
                ));
            }
            if let Some(a) = c.anchor {
                if !(-1.0..=-0.3).contains(&a.elasticity) {
                    out.push(Diagnostic::error(
                        &subject,
                        format!(
                            "anchor elasticity in period {t} is {}, outside [-1, -0.3]",
                            a.elasticity
                        ),
                    ));
                }
            }
        }
    }

    // arcs
    check_unique(model.arcs.iter().map(|a| a.id.as_str()), "arc", &mut out);
    let mut arc_keys = HashSet::new();
    for a in &model.arcs {
        let subject = format!("arc {}", a.id);
        if a.from == a.to {
            out.push(Diagnostic::error(&subject, "arc starts and ends at the same node"));
        }
        for end in [&a.from, &a.to] {
            if !node_ids.contains(end.as_str()) {
                out.push(Diagnostic::error(&subject, format!("unknown node {end}")));
            }
        }
        if !arc_keys.insert((a.from.as_str(), a.to.as_str(), a.kind)) {
            out.push(Diagnostic::error(&subject, "duplicate (from, to, kind)"));
        }
        if a.kind == ArcKind::LngRoute {
            let liq = model.node_index(&a.from).map(|i| model.nodes[i].has_liquefaction);
            let reg = model.node_index(&a.to).map(|i| model.nodes[i].has_regas);
            if liq == Some(false) {
                out.push(Diagnostic::error(&subject, "LNG route needs liquefaction at its origin"));
            }
            if reg == Some(false) {
                out.push(Diagnostic::error(&subject, "LNG route needs regasification at its destination"));
            }
        }
    }

    // services
    let mut seen_services = HashSet::new();
    for s in &model.services {
        let subject = format!("service {}@{}", s.kind.code(), s.at);
        if !seen_services.insert((s.kind, s.at.as_str())) {
            out.push(Diagnostic::error(&subject, "duplicate service"));
        }
        if s.kind.on_arc() {
            match model.arc_index(&s.at).map(|i| model.arcs[i].kind) {
                None => out.push(Diagnostic::error(&subject, "unknown arc")),
                Some(ArcKind::Pipeline) if s.kind == ServiceKind::B => {
                    out.push(Diagnostic::error(&subject, "shipping service on a pipeline arc"))
                }
                Some(ArcKind::LngRoute) if s.kind == ServiceKind::A => {
                    out.push(Diagnostic::error(&subject, "pipeline service on an LNG route"))
                }
                _ => {}
            }
        } else if let Some(i) = model.node_index(&s.at) {
            let n = &model.nodes[i];
            let flag = match s.kind {
                ServiceKind::P => n.has_producer,
                ServiceKind::I | ServiceKind::X => n.has_storage,
                ServiceKind::L => n.has_liquefaction,
                ServiceKind::R => n.has_regas,
                ServiceKind::A | ServiceKind::B => unreachable!(),
            };
            if !flag {
                out.push(Diagnostic::error(&subject, "node is not flagged for this service"));
            }
        } else {
            out.push(Diagnostic::error(&subject, "unknown node"));
        }
        if s.linc.len() != np {
            out.push(Diagnostic::error(
                &subject,
                format!("linc has {} entries for {np} periods", s.linc.len()),
            ));
        }
        if s.linc.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            out.push(Diagnostic::error(&subject, "linear costs must be non-negative"));
        }
        if !s.quac.is_empty() {
            if s.kind != ServiceKind::P && s.quac.iter().any(|&c| c != 0.0) {
                out.push(Diagnostic::error(&subject, "quadratic cost is only defined for producers"));
            }
            if s.quac.len() != np {
                out.push(Diagnostic::error(
                    &subject,
                    format!("quac has {} entries for {np} periods", s.quac.len()),
                ));
            }
            if s.quac.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
                out.push(Diagnostic::error(&subject, "quadratic costs must be non-negative"));
            }
        }
        if !(0.0..1.0).contains(&s.loss) {
            out.push(Diagnostic::error(&subject, format!("loss {} outside [0, 1)", s.loss)));
        } else if s.loss > 0.0 && matches!(s.kind, ServiceKind::A | ServiceKind::R) {
            out.push(Diagnostic::warning(
                &subject,
                "pipeline and regasification losses are normally zero",
            ));
        }
        if let Some(cap) = &s.cap {
            if cap.len() != np {
                out.push(Diagnostic::error(
                    &subject,
                    format!("cap has {} entries for {np} periods", cap.len()),
                ));
            }
            if cap.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
                out.push(Diagnostic::error(&subject, "capacities must be non-negative"));
            }
        }
        if let Some(c) = s.cap_annual {
            if !(c >= 0.0 && c.is_finite()) {
                out.push(Diagnostic::error(&subject, "annual capacity must be non-negative"));
            }
        }
    }

    // every flagged asset and every arc has its service
    for n in &model.nodes {
        let required = [
            (n.has_producer, ServiceKind::P),
            (n.has_storage, ServiceKind::I),
            (n.has_storage, ServiceKind::X),
            (n.has_liquefaction, ServiceKind::L),
            (n.has_regas, ServiceKind::R),
        ];
        for (flag, kind) in required {
            if flag && !seen_services.contains(&(kind, n.id.as_str())) {
                out.push(Diagnostic::error(
                    format!("node {}", n.id),
                    format!("missing service spec {}", kind.code()),
                ));
            }
        }
    }
    for a in &model.arcs {
        let kind = match a.kind {
            ArcKind::Pipeline => ServiceKind::A,
            ArcKind::LngRoute => ServiceKind::B,
        };
        if !seen_services.contains(&(kind, a.id.as_str())) {
            out.push(Diagnostic::error(
                format!("arc {}", a.id),
                format!("missing service spec {}", kind.code()),
            ));
        }
    }

    // traders
    check_unique(model.traders.iter().map(|f| f.id.as_str()), "trader", &mut out);
    let arcs_by_id: HashMap<&str, usize> =
        model.arcs.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    for f in &model.traders {
        let subject = format!("trader {}", f.id);
        let reach: HashSet<&str> = f.nodes.iter().map(String::as_str).collect();
        if reach.len() != f.nodes.len() {
            out.push(Diagnostic::error(&subject, "duplicate entries in node set"));
        }
        for n in &f.nodes {
            if !node_ids.contains(n.as_str()) {
                out.push(Diagnostic::error(&subject, format!("unknown node {n}")));
            }
        }
        if !reach.contains(f.source.as_str()) {
            out.push(Diagnostic::error(
                &subject,
                format!("source node {} is not in the trader's node set", f.source),
            ));
        }
        match model.node_index(&f.source) {
            None => out.push(Diagnostic::error(&subject, format!("unknown source node {}", f.source))),
            Some(i) if !model.nodes[i].has_producer => out.push(Diagnostic::error(
                &subject,
                format!("source node {} has no producer", f.source),
            )),
            _ => {}
        }
        let mut consumers = HashSet::new();
        for c in &f.consumers {
            if !consumers.insert(c.as_str()) {
                out.push(Diagnostic::error(&subject, format!("consumer {c} listed twice")));
            }
            match model.node_index(c) {
                Some(i) if model.nodes[i].has_consumer => {}
                _ => out.push(Diagnostic::error(&subject, format!("{c} is not a consumer node"))),
            }
            if !reach.contains(c.as_str()) {
                out.push(Diagnostic::error(&subject, format!("consumer {c} is outside the node set")));
            }
            match f.market_power.get(c) {
                None => out.push(Diagnostic::error(&subject, format!("no market-power entry for {c}"))),
                Some(v) if v.len() != np => out.push(Diagnostic::error(
                    &subject,
                    format!("market power for {c} has {} entries for {np} periods", v.len()),
                )),
                _ => {}
            }
        }
        for (node, values) in &f.market_power {
            if !consumers.contains(node.as_str()) {
                out.push(Diagnostic::error(
                    &subject,
                    format!("market power given for {node}, which the trader does not serve"),
                ));
            }
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                out.push(Diagnostic::error(
                    &subject,
                    format!("market power for {node} must lie in θ ∈ [0,1]"),
                ));
            }
        }
        if let Some(arcs) = &f.arcs {
            for id in arcs {
                match arcs_by_id.get(id.as_str()) {
                    None => out.push(Diagnostic::error(&subject, format!("unknown arc {id}"))),
                    Some(&i) => {
                        let a = &model.arcs[i];
                        if !reach.contains(a.from.as_str()) || !reach.contains(a.to.as_str()) {
                            out.push(Diagnostic::error(
                                &subject,
                                format!("arc {id} leaves the trader's node set"),
                            ));
                        }
                    }
                }
            }
        }
    }
    out
}

/// True when `validate_model` reports no errors.
pub fn is_valid(model: &MarketModel) -> bool {
    validate_model(model).iter().all(|d| !d.is_error())
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, what: &str, out: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Diagnostic::error(format!("{what} {id}"), format!("duplicate {what} id")));
        }
    }
}
