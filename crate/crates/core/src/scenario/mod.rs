//! Scenario loading, the closed planning loop, and trace output.

mod config;
mod runner;
mod trace;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    bundled_config, load_scenario, read_config, DiscConfig, HumanConfig, HumanSpec, MarkingConfig, NetConfig,
    PlannerConfig, RectConfig, Scenario, ScenarioConfig, StationConfig, TransitionConfig, UasConfig, UasSpec,
    WorldConfig, BUNDLED_SCENARIO, DEFAULT_K_MAX,
};
pub use runner::{human_rng, plan_once, run, run_with_dumps, PlanSnapshot};
pub use trace::{
    emit_trace, CandidateTick, EmitOptions, HumanTick, Manifest, RunSummary, RunTrace, TickRecord,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("planning failed: {0}")]
    Plan(#[from] crate::mdp::PlanError),
    #[error("human simulation failed: {0}")]
    Human(#[from] crate::human::HumanError),
    #[error("estimator failed: {0}")]
    Perception(#[from] crate::perception::PerceptionError),
}
