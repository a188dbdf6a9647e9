//! The yearly simulation protocol: a reference run, demand and supply
//! updates, one run per infrastructure expansion and a run with every
//! change, each compared against its designated reference.

mod plan;
mod run;
mod update;

pub use plan::{build_horizon, build_plan, PlannedRun, RunCode, RunMask, SimulationPlan};
pub use run::{compare, run_plan, DeltaReport, RunOutcome};
pub use update::{CapacityChange, ConsumerUpdate, Expansion, ExpansionKind, NewAsset, SupplyUpdate, YearUpdate};
