//! The orchestrator: a reactive path that appraises every act as it
//! arrives and a deliberative path that picks an intention, plans for it
//! and executes the plan, all recorded in one ordered event log.

mod config;
mod event;
mod replay;
mod scenario;
mod session;
mod state;

pub use config::{DeliberationConfig, EngineConfig, InferenceConfig};
pub use event::{from_jsonl, json_subset, to_jsonl, Event, EventKind};
pub use replay::{replay_store, sincerity_violations, ReplayError};
pub use scenario::{load_scenario, run_scenario, Expectation, Scenario, ScenarioError, Step, StepReport, Transcript};
pub use session::{ActivePlan, Agents, GlobalSpec, Input, Session, SessionSpec, StimulusSpec};
pub use state::{EmotionView, FactView, IntentionView, PlanView, StateView};

use crate::catalog::CatalogError;
use crate::memory::MemoryError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("session is closed")]
    SessionClosed,
    #[error("no plan to execute")]
    NoPlan,
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}
