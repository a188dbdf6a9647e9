use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::plan::{PlannedRun, SimulationPlan};
use super::update::CapacityChange;
use crate::analytics::{welfare_summary, RegionMap, WelfareSummary};
use crate::error::{Error, Result};
use crate::lcp::SolverOptions;
use crate::market::{solve_model, EquilibriumSolution, MarketModel};

/// Change of one run against its reference; positive means an increase.
pub type DeltaReport = WelfareSummary;

/// What happened to one run of a plan.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run: PlannedRun,
    pub model: Arc<MarketModel>,
    pub changes: Vec<CapacityChange>,
    /// The equilibrium, or why there is none.
    pub solution: std::result::Result<EquilibriumSolution, String>,
}

impl RunOutcome {
    pub fn solved(&self) -> Option<&EquilibriumSolution> {
        self.solution.as_ref().ok()
    }
}

/// Solve every run of `plan`. Failures stay in their run's slot. With
/// `threads > 1` the runs are solved on a pool of that size.
pub fn run_plan(plan: &SimulationPlan, solver: &SolverOptions, threads: usize) -> Result<BTreeMap<usize, RunOutcome>> {
    let solve_one = |run: &PlannedRun| -> RunOutcome {
        match plan.model_for(run) {
            Ok((model, changes)) => {
                let solution = solve_model(&model, solver).map_err(|e| e.to_string());
                if let Err(e) = &solution {
                    log::warn!("year {} run {} failed: {e}", plan.year, run.id);
                }
                RunOutcome {
                    run: run.clone(),
                    model: Arc::new(model),
                    changes,
                    solution,
                }
            }
            Err(e) => RunOutcome {
                run: run.clone(),
                model: plan.base.clone(),
                changes: Vec::new(),
                solution: Err(e.to_string()),
            },
        }
    };
    let outcomes: Vec<RunOutcome> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| plan.runs.par_iter().map(solve_one).collect())
    } else {
        plan.runs.iter().map(solve_one).collect()
    };
    Ok(outcomes.into_iter().map(|o| (o.run.id, o)).collect())
}

/// Welfare, price and consumption changes of `result` against `reference`.
pub fn compare(result: &RunOutcome, reference: &RunOutcome, regions: &RegionMap) -> Result<DeltaReport> {
    let (Some(r), Some(b)) = (result.solved(), reference.solved()) else {
        return Err(Error::Comparison(format!(
            "run {} or its reference {} has no solution",
            result.run.id, reference.run.id
        )));
    };
    let ids = |m: &MarketModel| m.nodes.iter().map(|n| n.id.clone()).collect::<Vec<_>>();
    if ids(&result.model) != ids(&reference.model) {
        return Err(Error::Comparison("runs have different node sets".into()));
    }
    welfare_summary(&result.model, r, Some((&reference.model, b)), regions)
}
