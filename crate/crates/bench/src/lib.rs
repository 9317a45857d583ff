//! Fixtures shared by the criterion benches.

use kmbias::{run_scenario, DropoutSpec, ScenarioConfig, SurvivalDataset};

pub fn scenario4_config(n: u64) -> ScenarioConfig {
    ScenarioConfig::scenario4(n, 0.3, DropoutSpec::UnitUniform, 3.0, 0.5, 42)
}

pub fn scenario4_dataset(n: u64) -> SurvivalDataset {
    run_scenario(&scenario4_config(n)).expect("valid bench config")
}
