//! Welfare, concentration and price-composition figures derived from an
//! equilibrium.
//!
//! Money is reported per day in k€/d and per year in M€/y; per-unit values
//! are in k€/mcm.

mod concentration;
mod decomposition;
mod surplus;
mod welfare;

pub use concentration::{classify_hhi, hhi, market_shares_and_hhi, Concentration, MarketShares, PeriodScope, ShareScope, DOMESTIC_PRODUCTION};
pub use decomposition::{price_decomposition, PriceComposition};
pub use surplus::{consumer_surplus, infrastructure_rent, producer_surplus, ConsumerSurplus, ProducerSurplus};
pub use welfare::{country_figures, welfare_summary, CountryFigures, RegionMap, WelfareSummary};

/// k€ per M€.
pub(crate) const K_PER_M: f64 = 1000.0;
