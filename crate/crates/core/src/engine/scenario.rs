//! Scripted dialogues with expectations on the events each input produces.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{json_subset, EngineError, Event, EventKind, Input, Session, SessionSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub kind: EventKind,
    /// Payload subset the event must contain.
    #[serde(default, rename = "where", skip_serializing_if = "Value::is_null")]
    pub matches: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub input: Input,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(flatten)]
    pub session: SessionSpec,
    #[serde(default)]
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// 1-based.
    pub index: usize,
    pub events: usize,
    pub first_tick: Option<u64>,
    pub last_tick: Option<u64>,
}

/// The full event log of a run, with the share of each step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub name: String,
    pub events: Vec<Event>,
    pub steps: Vec<StepReport>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("script error: {0}")]
    Script(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("step {step}: expected {expected}, got {actual}")]
    Assertion { step: usize, expected: String, actual: String },
}

/// Read a scenario and the directory its resource paths are relative to.
pub fn load_scenario(path: &Path) -> Result<(Scenario, PathBuf), ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Script(format!("{}: {e}", path.display())))?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| ScenarioError::Script(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((scenario, base))
}

fn describe(e: &Expectation) -> String {
    if e.matches.is_null() {
        e.kind.to_string()
    } else {
        format!("{} where {}", e.kind, e.matches)
    }
}

/// Expectations must appear, in order, among the step's events.
fn check_step(step: usize, expect: &[Expectation], events: &[Event]) -> Result<(), ScenarioError> {
    let mut rest = events.iter();
    for e in expect {
        let found = rest.any(|ev| ev.kind == e.kind && (e.matches.is_null() || json_subset(&e.matches, &ev.payload)));
        if !found {
            let actual: Vec<String> = events
                .iter()
                .filter(|ev| ev.kind == e.kind)
                .map(|ev| format!("{} {}", ev.kind, ev.payload))
                .collect();
            let actual = if actual.is_empty() {
                let kinds: Vec<&str> = events.iter().map(|ev| ev.kind.as_str()).collect();
                format!("no matching event among [{}]", kinds.join(", "))
            } else {
                actual.join("; ")
            };
            return Err(ScenarioError::Assertion { step, expected: describe(e), actual });
        }
    }
    Ok(())
}

pub fn run_scenario(scenario: &Scenario, base_dir: &Path) -> Result<Transcript, ScenarioError> {
    let mut session = Session::create(scenario.name.clone(), &scenario.session, base_dir)?;
    let mut steps = Vec::new();
    for (i, step) in scenario.steps.iter().enumerate() {
        let events = session.handle(&step.input)?;
        check_step(i + 1, &step.expect, &events)?;
        steps.push(StepReport {
            index: i + 1,
            events: events.len(),
            first_tick: events.first().map(|e| e.tick),
            last_tick: events.last().map(|e| e.tick),
        });
    }
    Ok(Transcript { name: scenario.name.clone(), events: session.events().to_vec(), steps })
}
