//! Emotions derived from their logical definitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::logic::{substitute, AgentId, EmotionCategory, Formula, Priority, Substitution, Term};
use crate::memory::{Fact, Snapshot, Tick};

/// A felt emotion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Emotion {
    pub category: EmotionCategory,
    pub holder: AgentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<AgentId>,
    pub content: Formula,
    pub intensity: f64,
}

impl Emotion {
    pub fn formula(&self) -> Formula {
        Formula::emo(
            self.category,
            self.holder.term(),
            self.target.as_ref().map(AgentId::term),
            self.content.clone(),
        )
    }

    /// Identity used for deduplication: everything but the intensity.
    pub fn key(&self) -> (EmotionCategory, String, Option<String>, String) {
        (
            self.category,
            self.holder.to_string(),
            self.target.as_ref().map(|t| t.to_string()),
            self.content.without_priorities().to_string(),
        )
    }
}

/// An emotion stored in episodic memory. `tick` doubles as its id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionRecord {
    #[serde(flatten)]
    pub emotion: Emotion,
    pub tick: Tick,
    pub expressed: bool,
}

/// Intensity is the priority of the goal or ideal that fired the rule.
pub fn emotion_intensity(grounding: &Formula) -> f64 {
    grounding.priority().unwrap_or(Priority::DEFAULT).value()
}

/// Every emotion of `self_agent` whose definition holds in `snap` and that
/// is not already stored. A basic emotion is left out when a complex
/// emotion of the same row covers the same content.
pub fn appraise_cognitive(snap: &Snapshot, self_agent: &AgentId) -> Vec<Emotion> {
    let facts: Vec<&Fact> = snap.episodic().facts().collect();
    let seed = Substitution::new().with_term("I", self_agent.as_str());
    let mut found: BTreeMap<(EmotionCategory, String, Option<String>, String), Emotion> = BTreeMap::new();

    for rule in snap.semantic().emotion_rules() {
        for (sigma, used) in rule.groundings(&facts, &seed) {
            let Ok(Formula::Emo { category, holder, target, inner }) = substitute(&rule.conclusion, &sigma) else {
                continue;
            };
            let (Some(holder), target) = (term_agent(&holder), target.as_ref().map(term_agent)) else {
                continue;
            };
            let target = match target {
                None => None,
                Some(Some(t)) if t != holder => Some(t),
                // responsibility of the holder belongs to the middle column
                Some(_) => continue,
            };
            let emotion = Emotion {
                category,
                holder,
                target,
                content: *inner,
                intensity: emotion_intensity(&used[0].formula),
            };
            found
                .entry(emotion.key())
                .and_modify(|e| e.intensity = e.intensity.max(emotion.intensity))
                .or_insert(emotion);
        }
    }

    let stored: Vec<&Emotion> = snap.episodic().emotions().iter().map(|r| &r.emotion).collect();
    let complex: Vec<(EmotionCategory, String, String)> = found
        .values()
        .chain(stored.iter().copied())
        .filter(|e| !e.category.is_basic())
        .map(|e| (e.category.basic_counterpart(), e.holder.to_string(), e.key().3))
        .collect();

    found
        .into_values()
        .filter(|e| !stored.iter().any(|s| s.key() == e.key()))
        .filter(|e| {
            !e.category.is_basic()
                || !complex.contains(&(e.category, e.holder.to_string(), e.key().3))
        })
        .collect()
}

fn term_agent(t: &Term) -> Option<AgentId> {
    t.as_sym().and_then(|s| AgentId::new(s).ok())
}
