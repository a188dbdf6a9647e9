use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use super::update::{CapacityChange, ExpansionKind, YearUpdate};
use crate::error::{Error, Result};
use crate::market::{validate_model, Diagnostic, MarketModel};

/// Simulation type of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunCode {
    /// The previous year's market, nothing updated.
    Reference,
    /// Demand and willingness to pay updated.
    C,
    /// Production and liquefaction capacities updated.
    PL,
    /// Both of the above.
    PLC,
    /// One regasification expansion on top of PLC.
    R,
    /// One storage expansion on top of PLC.
    S,
    /// One pipeline expansion on top of PLC.
    A,
    /// Every expansion on top of PLC.
    RSA,
    /// Every update, in a calibration year.
    RsaPlc,
}

impl RunCode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunCode::Reference => "REF",
            RunCode::C => "C",
            RunCode::PL => "PL",
            RunCode::PLC => "PLC",
            RunCode::R => "R",
            RunCode::S => "S",
            RunCode::A => "A",
            RunCode::RSA => "RSA",
            RunCode::RsaPlc => "RSA&PLC",
        }
    }
}

impl fmt::Display for RunCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which parts of the year update a run applies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunMask {
    pub consumer: bool,
    pub supply: bool,
    /// Indices into the update's expansion list.
    pub expansions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedRun {
    pub id: usize,
    pub code: RunCode,
    pub mask: RunMask,
    /// Run this one is compared against.
    pub reference: Option<usize>,
}

/// The runs of one simulated year.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub year: i32,
    pub calibration_year: bool,
    pub base: Arc<MarketModel>,
    pub update: Arc<YearUpdate>,
    pub runs: Vec<PlannedRun>,
}

/// Lay out the runs of one year.
///
/// Run 0 is the base model, runs 1–3 add the consumer block, the supply
/// block and both, runs `3+i` add expansion `i` to run 3 and run `k+4` adds
/// every expansion. Runs 1–3 are compared to run 0, all later runs to run 3.
/// A calibration year has only run `k+4`.
pub fn build_plan(base: &MarketModel, update: &YearUpdate) -> Result<SimulationPlan> {
    let mut diags: Vec<Diagnostic> = validate_model(base).into_iter().filter(|d| d.is_error()).collect();
    let mut seen = HashSet::new();
    for e in &update.expansions {
        diags.extend(e.check(base));
        if !seen.insert(e.asset_key()) {
            diags.push(Diagnostic::error(
                format!("expansion {} at {}", e.kind.code(), e.location),
                format!("asset expanded twice in {}", update.year),
            ));
        }
    }
    if !diags.is_empty() {
        return Err(Error::Validation(diags));
    }
    let k = update.expansions.len();
    let all = RunMask {
        consumer: true,
        supply: true,
        expansions: (0..k).collect(),
    };
    let runs = if update.calibration_year {
        vec![PlannedRun {
            id: k + 4,
            code: RunCode::RsaPlc,
            mask: all,
            reference: None,
        }]
    } else {
        let mut runs = vec![
            PlannedRun {
                id: 0,
                code: RunCode::Reference,
                mask: RunMask::default(),
                reference: None,
            },
            PlannedRun {
                id: 1,
                code: RunCode::C,
                mask: RunMask { consumer: true, ..Default::default() },
                reference: Some(0),
            },
            PlannedRun {
                id: 2,
                code: RunCode::PL,
                mask: RunMask { supply: true, ..Default::default() },
                reference: Some(0),
            },
            PlannedRun {
                id: 3,
                code: RunCode::PLC,
                mask: RunMask { consumer: true, supply: true, expansions: vec![] },
                reference: Some(0),
            },
        ];
        for (i, e) in update.expansions.iter().enumerate() {
            runs.push(PlannedRun {
                id: 4 + i,
                code: match e.kind {
                    ExpansionKind::Regas => RunCode::R,
                    ExpansionKind::Storage => RunCode::S,
                    ExpansionKind::Pipeline => RunCode::A,
                },
                mask: RunMask { consumer: true, supply: true, expansions: vec![i] },
                reference: Some(3),
            });
        }
        runs.push(PlannedRun {
            id: k + 4,
            code: RunCode::RSA,
            mask: all,
            reference: Some(3),
        });
        runs
    };
    Ok(SimulationPlan {
        year: update.year,
        calibration_year: update.calibration_year,
        base: Arc::new(base.clone()),
        update: Arc::new(update.clone()),
        runs,
    })
}

impl SimulationPlan {
    pub fn run(&self, id: usize) -> Option<&PlannedRun> {
        self.runs.iter().find(|r| r.id == id)
    }

    /// The run that applies every update: the base of the following year.
    pub fn final_run(&self) -> &PlannedRun {
        self.runs.last().expect("plans are never empty")
    }

    /// A fresh copy of the base model with `run`'s mask applied, plus the
    /// capacity changes of the applied expansions.
    pub fn model_for(&self, run: &PlannedRun) -> Result<(MarketModel, Vec<CapacityChange>)> {
        let mut m = (*self.base).clone();
        if run.mask.consumer {
            if let Some(c) = &self.update.consumer {
                c.apply(&mut m)?;
            }
        }
        if run.mask.supply {
            if let Some(s) = &self.update.supply {
                s.apply(&mut m)?;
            }
        }
        let mut changes = Vec::new();
        for &i in &run.mask.expansions {
            changes.push(self.update.expansions[i].apply(&mut m)?);
        }
        Ok((m, changes))
    }
}

/// Plans for consecutive years; each year starts from the previous year's
/// fully updated model.
pub fn build_horizon(base: &MarketModel, updates: &[YearUpdate]) -> Result<Vec<SimulationPlan>> {
    let mut plans: Vec<SimulationPlan> = Vec::with_capacity(updates.len());
    let mut current = base.clone();
    for u in updates {
        let plan = build_plan(&current, u)?;
        current = plan.model_for(plan.final_run())?.0;
        plans.push(plan);
    }
    Ok(plans)
}
