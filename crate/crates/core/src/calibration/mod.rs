//! Fitting demand anchors and market power to reported consumption.
//!
//! The willingness to pay `π*` and elasticity `η*` of every market and the
//! market-power parameters `θ` are tuned inside fixed bounds so that the
//! equilibrium consumption matches the reported consumption, while each
//! trader's sales stay above its (adjusted) reference sales where possible.

mod adjust;
mod data;
mod horizon;
mod metrics;
mod search;

pub use adjust::{adjust_reference_sales, AdjustedSales};
pub use data::{CalibrationBounds, CalibrationData, CalibrationParams, Interval, SalesTable};
pub use horizon::{project_year, DEFAULT_PRICE_GROWTH};
pub use metrics::{calibration_residuals, CalibrationMetrics, DeviationStats};
pub use search::{calibrate, CalibrationOptions, CalibrationResult, SalesShortfall};
