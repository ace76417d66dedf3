//! Fixtures shared by the engine benchmarks.

use std::path::PathBuf;

use rcm_core::oracle::{random_model, ModelParams};
use rcm_core::Model;

/// Names of the models shipped under `models/`.
pub const GOLDEN: [&str; 4] = ["c_ex.rcm", "prop1.rcm", "example10.rcm", "courts.rcm"];

pub fn golden_text(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "models", name]
        .iter()
        .collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn golden(name: &str) -> Model {
    Model::parse(&golden_text(name)).expect("golden model is valid")
}

/// Seeded models at the largest size the oracle accepts.
pub fn corpus(n: u64) -> Vec<Model> {
    (0..n)
        .map(|seed| random_model(seed, ModelParams::default()))
        .collect()
}
