//! The gas-market network and its equilibrium conditions.

mod assemble;
mod checks;
mod demand;
mod solution;
mod solve;
mod types;
mod validate;

pub use assemble::{assemble_lcp, IndexMap, Topology, Var};
pub use checks::{check_equilibrium, InvariantTolerances, Violation};
pub use demand::demand_curve_from_calibration;
pub use solution::{extract_solution, EquilibriumSolution};
pub use solve::{solve_model, solve_model_from, SolvedModel, LEMKE_MAX_DIM};
pub use types::{
    Arc, ArcKind, DemandAnchor, DemandCurve, MarketModel, Node, Period, Region, ServiceKind,
    ServiceSpec, Trader,
};
pub use validate::{is_valid, validate_model, Diagnostic, Severity};


#[cfg(test)]
pub(crate) mod testing;
