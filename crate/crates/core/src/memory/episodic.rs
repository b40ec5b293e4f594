//! Situation facts, felt emotions and dialogue history.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::appraisal::{Emotion, EmotionRecord};
use crate::logic::{match_pattern, Formula, Substitution};

use super::{MemoryError, Tick};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactSource {
    Perception,
    ReceptionEffect,
    SendingEffect,
    Inference,
    ScenarioInit,
    Execution,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub formula: Formula,
    pub source: FactSource,
    pub tick: Tick,
}

/// Outcome of one assertion: what entered memory and what revision removed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionReport {
    pub added: Vec<Fact>,
    pub retracted: Vec<Fact>,
}

impl RevisionReport {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.retracted.is_empty()
    }

    pub fn merge(&mut self, other: RevisionReport) {
        self.added.extend(other.added);
        self.retracted.extend(other.retracted);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JournalOp {
    Assert,
    Retract,
}

/// One line of the append-only fact journal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub tick: Tick,
    pub op: JournalOp,
    pub formula: Formula,
    pub source: FactSource,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodicStore {
    /// Keyed by rendering with priorities erased, so a goal asserted again
    /// with a new priority replaces the old one.
    facts: BTreeMap<String, Fact>,
    emotions: Vec<EmotionRecord>,
    dialogue_history: Vec<String>,
    journal: Vec<JournalEntry>,
    last_tick: Tick,
}

/// Key under which a fact is stored.
pub fn slot_key(f: &Formula) -> String {
    f.without_priorities().to_string()
}

/// Formulas that contradict `f`: the same modal prefix with the content at
/// some depth negated.
pub fn complements(f: &Formula) -> Vec<Formula> {
    let mut out = vec![f.negate()];
    if let Formula::Modal { op, agent, inner, priority } = f {
        for c in complements(inner) {
            out.push(Formula::Modal {
                op: *op,
                agent: agent.clone(),
                inner: Box::new(c),
                priority: priority.clone(),
            });
        }
    }
    out
}

impl EpisodicStore {
    pub fn new() -> Self {
        EpisodicStore::default()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn last_tick(&self) -> Tick {
        self.last_tick
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.values()
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.facts.get(&slot_key(f)).is_some_and(|fact| &fact.formula == f)
    }

    pub fn journal(&self) -> &[JournalEntry] {
        &self.journal
    }

    pub fn dialogue_history(&self) -> &[String] {
        &self.dialogue_history
    }

    pub fn emotions(&self) -> &[EmotionRecord] {
        &self.emotions
    }

    /// Add a ground fact. Anything contradicting it on the same modal path
    /// is retracted first; the newest assertion wins.
    pub fn assert_fact(
        &mut self,
        formula: Formula,
        source: FactSource,
        tick: Tick,
    ) -> Result<RevisionReport, MemoryError> {
        if !formula.is_ground() {
            return Err(MemoryError::NotGround(formula.to_string()));
        }
        let formula = formula.normalize();
        let mut report = RevisionReport::default();
        let key = slot_key(&formula);
        if let Some(existing) = self.facts.get(&key) {
            if existing.formula == formula {
                return Ok(report);
            }
        }
        self.last_tick = self.last_tick.max(tick);
        if let Some(old) = self.facts.remove(&key) {
            self.log(JournalOp::Retract, &old.formula, source, tick);
            report.retracted.push(old);
        }
        for c in complements(&formula) {
            if let Some(old) = self.facts.remove(&slot_key(&c)) {
                self.log(JournalOp::Retract, &old.formula, source, tick);
                report.retracted.push(old);
            }
        }
        let fact = Fact { formula, source, tick };
        self.log(JournalOp::Assert, &fact.formula, source, tick);
        self.facts.insert(key, fact.clone());
        report.added.push(fact);
        Ok(report)
    }

    fn log(&mut self, op: JournalOp, formula: &Formula, source: FactSource, tick: Tick) {
        self.journal.push(JournalEntry { tick, op, formula: formula.clone(), source });
    }

    /// Facts matching `pattern`, newest first.
    pub fn query(&self, pattern: &Formula) -> Vec<(Fact, Substitution)> {
        let mut hits: Vec<(Fact, Substitution)> = self
            .facts
            .values()
            .filter_map(|fact| match_pattern(pattern, &fact.formula).map(|s| (fact.clone(), s)))
            .collect();
        hits.sort_by(|a, b| b.0.tick.cmp(&a.0.tick).then_with(|| a.0.formula.cmp(&b.0.formula)));
        hits
    }

    pub fn holds(&self, pattern: &Formula) -> bool {
        self.facts.values().any(|fact| match_pattern(pattern, &fact.formula).is_some())
    }

    pub fn push_history(&mut self, act_id: &str) {
        self.dialogue_history.push(act_id.to_string());
    }

    pub fn record_emotion(&mut self, emotion: Emotion, tick: Tick) -> EmotionRecord {
        self.last_tick = self.last_tick.max(tick);
        let record = EmotionRecord { emotion, tick, expressed: false };
        self.emotions.push(record.clone());
        record
    }

    /// Flag an emotion as expressed. The flag never goes back to false.
    pub fn mark_expressed(&mut self, emotion_tick: Tick) -> bool {
        match self.emotions.iter_mut().find(|r| r.tick == emotion_tick) {
            Some(r) => {
                r.expressed = true;
                true
            }
            None => false,
        }
    }

    /// Rebuild fact content from a journal.
    pub fn replay(entries: &[JournalEntry]) -> EpisodicStore {
        let mut store = EpisodicStore::new();
        for e in entries {
            let key = slot_key(&e.formula);
            match e.op {
                JournalOp::Assert => {
                    store.facts.insert(
                        key,
                        Fact { formula: e.formula.clone(), source: e.source, tick: e.tick },
                    );
                }
                JournalOp::Retract => {
                    store.facts.remove(&key);
                }
            }
            store.last_tick = store.last_tick.max(e.tick);
            store.journal.push(e.clone());
        }
        store
    }

    /// Journal as JSON lines.
    pub fn journal_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.journal {
            out.push_str(&serde_json::to_string(e).expect("journal entries serialize"));
            out.push('\n');
        }
        out
    }

    /// Facts only, for comparisons independent of journal and emotions.
    pub fn fact_formulas(&self) -> Vec<Formula> {
        self.facts.values().map(|f| f.formula.clone()).collect()
    }
}
