use super::data::{CalibrationData, SalesTable};
use crate::market::{Diagnostic, MarketModel, ServiceKind};

/// Totals within this relative margin of their limit count as consistent.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedSales {
    pub sales: SalesTable,
    pub diagnostics: Vec<Diagnostic>,
}

/// Scale reference sales down until they fit the reported consumption of
/// every market and the production capacity of every trader's source.
///
/// Markets are scaled first, then producers, then markets once more. Values
/// only ever shrink, and consistent data is returned unchanged.
pub fn adjust_reference_sales(data: &CalibrationData, model: &MarketModel) -> AdjustedSales {
    let mut sales = data.sales.clone();
    let mut diagnostics = Vec::new();
    market_pass(&mut sales, data, model, Some(&mut diagnostics));
    producer_pass(&mut sales, model);
    market_pass(&mut sales, data, model, None);
    AdjustedSales { sales, diagnostics }
}

fn market_pass(
    sales: &mut SalesTable,
    data: &CalibrationData,
    model: &MarketModel,
    mut diagnostics: Option<&mut Vec<Diagnostic>>,
) {
    for (_, node) in model.consumer_nodes() {
        let Some(reported) = data.consumption.get(&node.id) else { continue };
        for (t, &limit) in reported.iter().enumerate() {
            let total: f64 = sales
                .values()
                .filter_map(|m| m.get(&node.id).and_then(|v| v.get(t)))
                .sum();
            if total == 0.0 && limit > 0.0 {
                if let Some(d) = diagnostics.as_deref_mut() {
                    d.push(Diagnostic::warning(
                        format!("market {}/{}", node.id, model.periods[t].id),
                        "no reference sales for a market with reported consumption",
                    ));
                }
            }
            if total > limit * (1.0 + SLACK) {
                let k = limit / total;
                for m in sales.values_mut() {
                    if let Some(v) = m.get_mut(&node.id).and_then(|v| v.get_mut(t)) {
                        *v *= k;
                    }
                }
            }
        }
    }
}

fn producer_pass(sales: &mut SalesTable, model: &MarketModel) {
    for trader in &model.traders {
        let Some(cap) = model
            .service(ServiceKind::P, &trader.source)
            .and_then(|s| s.cap.clone())
        else {
            continue;
        };
        let Some(per_node) = sales.get_mut(&trader.id) else { continue };
        for (t, &limit) in cap.iter().enumerate() {
            let total: f64 = per_node
                .iter()
                .filter(|(n, _)| trader.nodes.contains(n))
                .filter_map(|(_, v)| v.get(t))
                .sum();
            if total > limit * (1.0 + SLACK) {
                let k = limit / total;
                for (n, v) in per_node.iter_mut() {
                    if trader.nodes.contains(n) {
                        if let Some(x) = v.get_mut(t) {
                            *x *= k;
                        }
                    }
                }
            }
        }
    }
}
