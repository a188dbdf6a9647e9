use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::market::{DemandAnchor, DemandCurve, MarketModel};

/// Yearly growth of the willingness to pay.
pub const DEFAULT_PRICE_GROWTH: f64 = 0.0023;

/// Move a calibrated model `years` ahead: anchor demand from `demand`
/// (unchanged for nodes it omits), anchor price grown at `growth` per year,
/// elasticity and market power kept.
pub fn project_year(
    calibrated: &MarketModel,
    demand: &BTreeMap<String, Vec<f64>>,
    years: f64,
    growth: f64,
) -> Result<MarketModel> {
    let mut m = calibrated.clone();
    let factor = (1.0 + growth).powf(years);
    for node in m.nodes.iter_mut().filter(|n| n.has_consumer) {
        let projected = demand.get(&node.id);
        for (t, curve) in node.demand.iter_mut().enumerate() {
            let Some(a) = curve.anchor else {
                return Err(Error::InvalidInput(format!(
                    "demand curve of {} has no anchor to project",
                    node.id
                )));
            };
            let s = projected.and_then(|v| v.get(t)).copied().unwrap_or(a.demand);
            *curve = DemandCurve::from_anchor(DemandAnchor {
                demand: s,
                price: a.price * factor,
                elasticity: a.elasticity,
            })?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::testing::*;

    #[test]
    fn price_grows_and_elasticity_stays() {
        let mut model = single_market(1.0, 1);
        model.nodes[0].demand[0] = DemandCurve::from_anchor(DemandAnchor {
            demand: 100.0,
            price: 300.0,
            elasticity: -0.5,
        })
        .unwrap();
        let demand = BTreeMap::from([("N".to_string(), vec![110.0])]);
        let p = project_year(&model, &demand, 2.0, DEFAULT_PRICE_GROWTH).unwrap();
        let a = p.nodes[0].demand[0].anchor.unwrap();
        assert_eq!(a.demand, 110.0);
        assert!((a.price - 300.0 * 1.0023f64.powi(2)).abs() < 1e-12);
        assert_eq!(a.elasticity, -0.5);
        assert_eq!(p.traders, model.traders);
    }

    #[test]
    fn unanchored_curves_cannot_be_projected() {
        let model = single_market(1.0, 1);
        assert!(project_year(&model, &BTreeMap::new(), 1.0, 0.0).is_err());
    }
}
