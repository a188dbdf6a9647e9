#![allow(dead_code)]

use std::path::PathBuf;

use gaseq_core::io::{load_model, load_updates};
use gaseq_core::market::MarketModel;
use gaseq_core::scenario::YearUpdate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every shipped model that solves to an equilibrium.
pub const EQUILIBRIUM_FIXTURES: [&str; 11] = [
    "monopoly",
    "competitive",
    "duopoly",
    "two_node",
    "pipeline",
    "congested",
    "new_source",
    "tap_tanap",
    "calib5",
    "desk10",
    "desk10_expanded",
];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn model(name: &str) -> MarketModel {
    load_model(fixture_path(&format!("{name}.json"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn updates(name: &str) -> Vec<YearUpdate> {
    load_updates(fixture_path(&format!("{name}.json"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// A fixture by name; `desk10_expanded` is desk10 with every expansion of
/// its first update year applied.
pub fn any_model(name: &str) -> MarketModel {
    if name == "desk10_expanded" {
        let plans = gaseq_core::scenario::build_horizon(&model("desk10"), &updates("desk10_updates")).unwrap();
        let plan = &plans[0];
        plan.model_for(plan.final_run()).unwrap().0
    } else {
        model(name)
    }
}

/// Random `M = A Aᵀ + δ I` and `q` with entries in `[-1, 1]`.
pub fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> (DMatrix<f64>, DVector<f64>) {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let m = &a * a.transpose() + DMatrix::identity(d, d) * 0.1;
    let q = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
    (m, q)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
