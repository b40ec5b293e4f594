use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::memory::Tick;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ActReceived,
    FactsAsserted,
    EmotionTriggered,
    SecProfile,
    ExpressionRendered,
    IntentionAdopted,
    PlanFound,
    PlanFailed,
    ActionExecuted,
    ActionFailed,
    UtteranceOut,
}

impl EventKind {
    pub const ALL: [EventKind; 11] = [
        EventKind::ActReceived,
        EventKind::FactsAsserted,
        EventKind::EmotionTriggered,
        EventKind::SecProfile,
        EventKind::ExpressionRendered,
        EventKind::IntentionAdopted,
        EventKind::PlanFound,
        EventKind::PlanFailed,
        EventKind::ActionExecuted,
        EventKind::ActionFailed,
        EventKind::UtteranceOut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ActReceived => "act_received",
            EventKind::FactsAsserted => "facts_asserted",
            EventKind::EmotionTriggered => "emotion_triggered",
            EventKind::SecProfile => "sec_profile",
            EventKind::ExpressionRendered => "expression_rendered",
            EventKind::IntentionAdopted => "intention_adopted",
            EventKind::PlanFound => "plan_found",
            EventKind::PlanFailed => "plan_failed",
            EventKind::ActionExecuted => "action_executed",
            EventKind::ActionFailed => "action_failed",
            EventKind::UtteranceOut => "utterance_out",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One entry of a session's event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: Tick,
    pub kind: EventKind,
    pub payload: Value,
}

impl Event {
    pub fn str_field(&self, name: &str) -> Option<&str> {
        self.payload.get(name).and_then(Value::as_str)
    }
}

/// One JSON object per line.
pub fn to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<Event>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Whether `actual` contains everything in `expected`. Objects match on a
/// subset of keys, arrays as an in-order subsequence, numbers within 1e-9.
pub fn json_subset(expected: &Value, actual: &Value) -> bool {
    match (expected, actual) {
        (Value::Object(e), Value::Object(a)) => {
            e.iter().all(|(k, v)| a.get(k).is_some_and(|av| json_subset(v, av)))
        }
        (Value::Array(e), Value::Array(a)) => {
            let mut rest = a.iter();
            e.iter().all(|ev| rest.any(|av| json_subset(ev, av)))
        }
        (Value::Number(e), Value::Number(a)) => match (e.as_f64(), a.as_f64()) {
            (Some(x), Some(y)) => (x - y).abs() < 1e-9,
            _ => e == a,
        },
        (e, a) => e == a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn subset_matching() {
        let actual = json!({"a": 1, "b": {"c": [1, 2, 3], "d": "x"}, "n": 0.8});
        assert!(json_subset(&json!({"b": {"c": [1, 3]}}), &actual));
        assert!(json_subset(&json!({"n": 0.8000000000001}), &actual));
        assert!(!json_subset(&json!({"b": {"c": [3, 1]}}), &actual));
        assert!(!json_subset(&json!({"z": 1}), &actual));
        assert!(json_subset(&json!({}), &actual));
    }

    #[test]
    fn jsonl_round_trip() {
        let events = vec![
            Event { tick: 1, kind: EventKind::ActReceived, payload: json!({"text": "hi"}) },
            Event { tick: 2, kind: EventKind::UtteranceOut, payload: json!(null) },
        ];
        let text = to_jsonl(&events);
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(r#"{"tick":1,"kind":"act_received","payload":{"text":"hi"}}"#));
        assert_eq!(from_jsonl(&text).unwrap(), events);
    }
}
