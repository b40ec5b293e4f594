//! Rebuilding memory from an event log, and checking the log for insincere
//! acts.

use std::collections::BTreeSet;

use serde_json::Value;

use crate::appraisal::Emotion;
use crate::catalog::{check_preconditions, ActInstance, Catalog};
use crate::memory::{default_emotion_rules, EpisodicStore, Fact, Memory, ProceduralStore, SemanticStore, Tick};

use super::{Event, EventKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event at tick {tick}: {reason}")]
pub struct ReplayError {
    pub tick: Tick,
    pub reason: String,
}

fn field<T: serde::de::DeserializeOwned>(e: &Event, name: &str) -> Result<T, ReplayError> {
    let v = e.payload.get(name).cloned().unwrap_or(Value::Null);
    serde_json::from_value(v).map_err(|err| ReplayError { tick: e.tick, reason: format!("{name}: {err}") })
}

fn apply(store: &mut EpisodicStore, e: &Event) -> Result<(), ReplayError> {
    match e.kind {
        EventKind::FactsAsserted => {
            // revision replays itself: re-asserting in order retracts the same facts
            for fact in field::<Vec<Fact>>(e, "added")? {
                store
                    .assert_fact(fact.formula, fact.source, fact.tick)
                    .map_err(|err| ReplayError { tick: e.tick, reason: err.to_string() })?;
            }
        }
        EventKind::EmotionTriggered => {
            let emotion: Emotion = serde_json::from_value(e.payload.clone())
                .map_err(|err| ReplayError { tick: e.tick, reason: err.to_string() })?;
            let id: Tick = field(e, "id")?;
            store.record_emotion(emotion, id);
        }
        EventKind::UtteranceOut => {
            if let Some(id) = field::<Option<Tick>>(e, "expressed_emotion")? {
                store.mark_expressed(id);
            }
        }
        _ => {}
    }
    Ok(())
}

/// Facts and emotions as the log records them.
pub fn replay_store(events: &[Event]) -> Result<EpisodicStore, ReplayError> {
    let mut store = EpisodicStore::new();
    for e in events {
        apply(&mut store, e)?;
    }
    Ok(store)
}

/// Every executed act whose preconditions did not hold in the state the log
/// describes just before it, and every utterance without an execution
/// record.
pub fn sincerity_violations(events: &[Event], catalog: &Catalog) -> Result<Vec<String>, ReplayError> {
    let semantic = SemanticStore::new(default_emotion_rules(), catalog.clone())
        .map_err(|err| ReplayError { tick: 0, reason: err.to_string() })?;
    let mut memory = Memory::new(semantic, ProceduralStore::default(), Vec::new());
    let mut checked = BTreeSet::new();
    let mut violations = Vec::new();
    for e in events {
        match e.kind {
            EventKind::ActionExecuted if !e.payload.get("act").is_none_or(Value::is_null) => {
                let act: ActInstance = field(e, "act")?;
                match check_preconditions(&act, catalog, &memory.snapshot()) {
                    Ok(check) if check.holds => {}
                    Ok(check) => {
                        let missing: Vec<String> = check.missing.iter().map(ToString::to_string).collect();
                        violations.push(format!("tick {}: {} lacks {}", e.tick, act.label(), missing.join(", ")));
                    }
                    Err(err) => violations.push(format!("tick {}: {err}", e.tick)),
                }
                checked.insert(act.id);
            }
            EventKind::UtteranceOut => {
                if let Some(id) = e.payload.get("act_id").and_then(Value::as_str) {
                    if !checked.contains(id) {
                        violations.push(format!("tick {}: utterance {id} was never executed", e.tick));
                    }
                }
            }
            _ => {}
        }
        apply(memory.episodic_mut(), e)?;
    }
    Ok(violations)
}
