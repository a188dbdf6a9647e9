use crate::error::{Error, Result};

/// Intercept and slope of the affine inverse demand curve through the point
/// `(demand, price)` with point elasticity `elasticity`.
///
/// `intercept = (1 − 1/η)·π` and `slope = π / (s·η)`.
pub fn demand_curve_from_calibration(demand: f64, price: f64, elasticity: f64) -> Result<(f64, f64)> {
    if demand == 0.0 {
        return Err(Error::DivisionByZero("reference demand is zero"));
    }
    if elasticity == 0.0 {
        return Err(Error::DivisionByZero("elasticity is zero"));
    }
    if elasticity > 0.0 || !elasticity.is_finite() {
        return Err(Error::InvalidElasticity(elasticity));
    }
    if !(demand > 0.0 && price > 0.0 && demand.is_finite() && price.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "demand anchor needs positive demand and price, got ({demand}, {price})"
        )));
    }
    let intercept = (1.0 - 1.0 / elasticity) * price;
    let slope = price / (demand * elasticity);
    Ok((intercept, slope))
}
