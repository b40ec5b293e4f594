//! The three-part memory: episodic facts and emotions, semantic definitions
//! (emotion rules and the act catalog), procedural knowledge (operators and
//! discourse rules).
//!
//! Stores sit behind `Arc` so a [`Snapshot`] is a cheap clone that later
//! writes never disturb.

mod episodic;
mod rules;

use std::collections::BTreeSet;
use std::sync::Arc;

pub use episodic::{
    complements, slot_key, EpisodicStore, Fact, FactSource, JournalEntry, JournalOp, RevisionReport,
};
pub use rules::{default_inference_rules, load_rules, run_inference, InferenceRule};

use crate::catalog::Catalog;
use crate::deliberation::{default_discourse_rules, ObligationRule};
use crate::error::ValidationError;
use crate::logic::{EmotionCategory, Formula};
use crate::planner::Operator;

/// Event counter shared by facts and log events.
pub type Tick = u64;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Clock {
    now: Tick,
}

impl Clock {
    pub fn starting_at(now: Tick) -> Self {
        Clock { now }
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn advance(&mut self) -> Tick {
        self.now += 1;
        self.now
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MemoryError {
    #[error("formula is not ground: {0}")]
    NotGround(String),
    #[error("inference did not reach a fixpoint within {0} derivations")]
    DepthLimitExceeded(usize),
}

/// Emotion definitions and the conversation-act catalog.
#[derive(Clone, Debug)]
pub struct SemanticStore {
    emotion_rules: Vec<InferenceRule>,
    catalog: Catalog,
}

impl SemanticStore {
    pub fn new(emotion_rules: Vec<InferenceRule>, catalog: Catalog) -> Result<Self, ValidationError> {
        let mut seen = BTreeSet::new();
        for (i, rule) in emotion_rules.iter().enumerate() {
            let Formula::Emo { category, .. } = &rule.conclusion else {
                return Err(ValidationError::new(
                    format!("emotion_rules[{i}].conclusion"),
                    "conclusion must be an Emo formula",
                ));
            };
            if !seen.insert(*category) {
                return Err(ValidationError::new(
                    format!("emotion_rules[{i}]"),
                    format!("second rule for {category}"),
                ));
            }
        }
        if seen.len() != EmotionCategory::ALL.len() {
            let missing: Vec<&str> = EmotionCategory::ALL
                .iter()
                .filter(|c| !seen.contains(c))
                .map(|c| c.name())
                .collect();
            return Err(ValidationError::new("emotion_rules", format!("missing {}", missing.join(", "))));
        }
        Ok(SemanticStore { emotion_rules, catalog })
    }

    pub fn emotion_rules(&self) -> &[InferenceRule] {
        &self.emotion_rules
    }

    pub fn emotion_rule(&self, category: EmotionCategory) -> &InferenceRule {
        self.emotion_rules
            .iter()
            .find(|r| matches!(r.conclusion, Formula::Emo { category: c, .. } if c == category))
            .expect("every category has a rule")
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }
}

pub fn default_emotion_rules() -> Vec<InferenceRule> {
    load_rules(include_str!("../../data/emotion_rules.json")).expect("shipped emotion rules are valid")
}

/// Load the emotion-rule file and pair it with a catalog.
pub fn load_semantic(emotion_rules_json: &str, catalog: Catalog) -> Result<SemanticStore, ValidationError> {
    SemanticStore::new(load_rules(emotion_rules_json)?, catalog)
}

/// Physical operators and discourse rules.
#[derive(Clone, Debug, Default)]
pub struct ProceduralStore {
    operators: Vec<Operator>,
    discourse_rules: Vec<ObligationRule>,
}

impl ProceduralStore {
    pub fn new(operators: Vec<Operator>, discourse_rules: Vec<ObligationRule>) -> Result<Self, ValidationError> {
        let mut names = BTreeSet::new();
        for (i, op) in operators.iter().enumerate() {
            if !names.insert(op.name.clone()) {
                return Err(ValidationError::new(format!("operators[{i}]"), format!("duplicate operator {}", op.name)));
            }
        }
        Ok(ProceduralStore { operators, discourse_rules })
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn discourse_rules(&self) -> &[ObligationRule] {
        &self.discourse_rules
    }
}

/// Parse a PDDL domain and pair its operators with the default discourse rules.
pub fn load_procedural(domain: &str) -> Result<ProceduralStore, ValidationError> {
    let operators = crate::planner::parse_domain(domain)
        .map_err(|e| ValidationError::new("domain", e.to_string()))?;
    ProceduralStore::new(operators, default_discourse_rules())
}

/// Immutable view of memory at one tick.
#[derive(Clone, Debug)]
pub struct Snapshot {
    episodic: Arc<EpisodicStore>,
    semantic: Arc<SemanticStore>,
    procedural: Arc<ProceduralStore>,
}

impl Snapshot {
    pub fn episodic(&self) -> &EpisodicStore {
        &self.episodic
    }

    pub fn semantic(&self) -> &SemanticStore {
        &self.semantic
    }

    pub fn procedural(&self) -> &ProceduralStore {
        &self.procedural
    }

    pub fn tick(&self) -> Tick {
        self.episodic.last_tick()
    }
}

impl PartialEq for Snapshot {
    fn eq(&self, other: &Self) -> bool {
        self.episodic == other.episodic
            && Arc::ptr_eq(&self.semantic, &other.semantic)
            && Arc::ptr_eq(&self.procedural, &other.procedural)
    }
}

/// The single writer over all three stores.
#[derive(Clone, Debug)]
pub struct Memory {
    episodic: Arc<EpisodicStore>,
    semantic: Arc<SemanticStore>,
    procedural: Arc<ProceduralStore>,
    inference_rules: Arc<Vec<InferenceRule>>,
}

impl Memory {
    pub fn new(semantic: SemanticStore, procedural: ProceduralStore, inference_rules: Vec<InferenceRule>) -> Self {
        Memory {
            episodic: Arc::new(EpisodicStore::new()),
            semantic: Arc::new(semantic),
            procedural: Arc::new(procedural),
            inference_rules: Arc::new(inference_rules),
        }
    }

    pub fn episodic(&self) -> &EpisodicStore {
        &self.episodic
    }

    pub fn episodic_mut(&mut self) -> &mut EpisodicStore {
        Arc::make_mut(&mut self.episodic)
    }

    pub fn semantic(&self) -> &SemanticStore {
        &self.semantic
    }

    pub fn procedural(&self) -> &ProceduralStore {
        &self.procedural
    }

    pub fn inference_rules(&self) -> &[InferenceRule] {
        &self.inference_rules
    }

    pub fn assert_fact(
        &mut self,
        formula: Formula,
        source: FactSource,
        clock: &mut Clock,
    ) -> Result<RevisionReport, MemoryError> {
        let tick = clock.advance();
        self.episodic_mut().assert_fact(formula, source, tick)
    }

    pub fn infer(&mut self, clock: &mut Clock, max_derivations: usize) -> Result<Vec<Fact>, MemoryError> {
        let rules = Arc::clone(&self.inference_rules);
        run_inference(self.episodic_mut(), &rules, clock, max_derivations)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            episodic: Arc::clone(&self.episodic),
            semantic: Arc::clone(&self.semantic),
            procedural: Arc::clone(&self.procedural),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;
    use crate::logic::parse_formula;

    fn memory() -> Memory {
        let semantic = SemanticStore::new(default_emotion_rules(), default_catalog()).unwrap();
        Memory::new(semantic, ProceduralStore::default(), default_inference_rules())
    }

    #[test]
    fn default_emotion_rules_cover_every_category_once() {
        let rules = default_emotion_rules();
        assert_eq!(rules.len(), 12);
        assert!(SemanticStore::new(rules, default_catalog()).is_ok());
    }

    #[test]
    fn thirteenth_rule_is_rejected() {
        let mut rules = default_emotion_rules();
        let mut dup = rules[0].clone();
        dup.name = "joy_again".into();
        rules.push(dup);
        assert!(SemanticStore::new(rules, default_catalog()).is_err());
    }

    #[test]
    fn empty_operator_file_is_valid() {
        let store = load_procedural("").unwrap();
        assert!(store.operators().is_empty());
        assert_eq!(store.discourse_rules().len(), 4);
    }

    #[test]
    fn snapshots_are_isolated_from_later_writes() {
        let mut mem = memory();
        let mut clock = Clock::default();
        mem.assert_fact(parse_formula("Bel(nao, p)").unwrap(), FactSource::Perception, &mut clock).unwrap();
        let a = mem.snapshot();
        let b = mem.snapshot();
        assert_eq!(a, b);
        assert_eq!(a.tick(), 1);
        mem.assert_fact(parse_formula("Bel(nao, q)").unwrap(), FactSource::Perception, &mut clock).unwrap();
        assert_eq!(a.episodic().len(), 1);
        assert_eq!(mem.episodic().len(), 2);
        assert_eq!(mem.snapshot().tick(), 2);
        assert_ne!(a, mem.snapshot());
    }
}
