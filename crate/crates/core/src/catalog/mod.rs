//! Conversation-act catalog: sincerity preconditions, sending and reception
//! effects, and their application to memory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::logic::{instantiate, substitute, AgentId, EmotionCategory, Formula, Substitution, Term};
use crate::memory::{
    Clock, FactSource, InferenceRule, Memory, MemoryError, RevisionReport, Snapshot, Tick,
};

/// Acts every catalog must define.
pub const CORE_ACTS: [&str; 18] = [
    "inform", "say", "assert", "deny", "request", "suggest", "demand", "ask-if", "ask-ref", "promise",
    "accept", "refuse", "thank", "congratulate", "reproach", "rejoice", "regret", "apologize",
];

const ACT_VARIABLES: [&str; 3] = ["S", "H", "F"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActClass {
    Assertive,
    Directive,
    Commissive,
    Expressive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActDefinition {
    pub name: String,
    pub class: ActClass,
    pub valence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expresses: Option<EmotionCategory>,
    /// Expressive variants reserved for stronger emotions.
    #[serde(default)]
    pub min_intensity: f64,
    pub preconditions: Vec<Formula>,
    pub sending_effects: Vec<Formula>,
    pub reception_effects: Vec<Formula>,
    /// Effects the planner may count on once the act is sent, such as a
    /// question getting answered. They never enter memory directly.
    #[serde(default)]
    pub rational_effects: Vec<Formula>,
    pub surface_template: String,
    /// Effects follow common agent-communication conventions rather than a
    /// worked definition.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub conventional: bool,
}

impl ActDefinition {
    fn validate(&self) -> Result<(), ValidationError> {
        if !crate::logic::is_identifier(&self.name) {
            return Err(ValidationError::new("name", format!("`{}` is not an identifier", self.name)));
        }
        if !(-1.0..=1.0).contains(&self.valence) {
            return Err(ValidationError::new("valence", "must lie in [-1, 1]"));
        }
        if !(0.0..=1.0).contains(&self.min_intensity) {
            return Err(ValidationError::new("min_intensity", "must lie in [0, 1]"));
        }
        let fields = [
            ("preconditions", &self.preconditions),
            ("sending_effects", &self.sending_effects),
            ("reception_effects", &self.reception_effects),
            ("rational_effects", &self.rational_effects),
        ];
        for (field, patterns) in fields {
            for (i, p) in patterns.iter().enumerate() {
                for v in p.variables() {
                    if !ACT_VARIABLES.contains(&v.as_str()) {
                        return Err(ValidationError::new(
                            format!("{field}[{i}]"),
                            format!("undeclared variable ?{v}; only ?S, ?H and ?F are allowed"),
                        ));
                    }
                }
                p.validate().map_err(|reason| ValidationError::new(format!("{field}[{i}]"), reason))?;
            }
        }
        match (self.class, self.expresses) {
            (ActClass::Expressive, None) => {
                Err(ValidationError::new("expresses", "expressive act must name the emotion it expresses"))
            }
            (ActClass::Expressive, Some(_)) | (_, None) => Ok(()),
            (_, Some(_)) => Err(ValidationError::new("expresses", "only expressive acts express emotions")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    acts: BTreeMap<String, ActDefinition>,
}

impl Catalog {
    pub fn new(definitions: Vec<ActDefinition>) -> Result<Catalog, ValidationError> {
        let mut acts = BTreeMap::new();
        for (i, def) in definitions.into_iter().enumerate() {
            def.validate().map_err(|e| ValidationError::new(format!("[{i}].{}", e.path), e.reason))?;
            if acts.contains_key(&def.name) {
                return Err(ValidationError::new(format!("[{i}].name"), format!("duplicate act {}", def.name)));
            }
            acts.insert(def.name.clone(), def);
        }
        let missing: Vec<&str> = CORE_ACTS.iter().copied().filter(|n| !acts.contains_key(*n)).collect();
        if !missing.is_empty() {
            return Err(ValidationError::new("$", format!("core acts missing: {}", missing.join(", "))));
        }
        Ok(Catalog { acts })
    }

    pub fn get(&self, name: &str) -> Option<&ActDefinition> {
        self.acts.get(name)
    }

    pub fn definition(&self, name: &str) -> Result<&ActDefinition, CatalogError> {
        self.acts.get(name).ok_or_else(|| CatalogError::UnknownAct(name.to_string()))
    }

    pub fn acts(&self) -> impl Iterator<Item = &ActDefinition> {
        self.acts.values()
    }

    pub fn len(&self) -> usize {
        self.acts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acts.is_empty()
    }

    /// Acts expressing `category`, weakest variant first.
    pub fn expressing(&self, category: EmotionCategory) -> Vec<&ActDefinition> {
        let mut out: Vec<&ActDefinition> =
            self.acts.values().filter(|d| d.expresses == Some(category)).collect();
        out.sort_by(|a, b| a.min_intensity.total_cmp(&b.min_intensity).then_with(|| a.name.cmp(&b.name)));
        out
    }
}

pub fn load_catalog(json: &str) -> Result<Catalog, ValidationError> {
    let defs: Vec<ActDefinition> =
        serde_json::from_str(json).map_err(|e| ValidationError::new("$", e.to_string()))?;
    Catalog::new(defs)
}

pub fn default_catalog() -> Catalog {
    load_catalog(include_str!("../../data/catalog.json")).expect("shipped catalog is valid")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown act `{0}`")]
    UnknownAct(String),
    #[error("act {act} has direction {actual}, expected {expected}")]
    WrongDirection { act: String, expected: Direction, actual: Direction },
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("act {act}: {reason}")]
    Grounding { act: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sent,
    Received,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Sent => "sent",
            Direction::Received => "received",
        })
    }
}

/// A concrete act in the dialogue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActInstance {
    pub id: String,
    pub act: String,
    pub speaker: AgentId,
    pub addressee: AgentId,
    pub content: Formula,
    pub direction: Direction,
    pub tick: Tick,
    /// The speaker announces the content as their own doing.
    #[serde(default)]
    pub declares_responsibility: bool,
}

impl ActInstance {
    pub fn new(
        act: &str,
        speaker: AgentId,
        addressee: AgentId,
        content: Formula,
        direction: Direction,
        tick: Tick,
    ) -> ActInstance {
        ActInstance {
            id: format!("act-{tick}"),
            act: act.to_string(),
            speaker,
            addressee,
            content,
            direction,
            tick,
            declares_responsibility: false,
        }
    }

    /// `{?S = speaker, ?H = addressee, ?F = content}`.
    pub fn grounding(&self) -> Substitution {
        Substitution::new()
            .with_term("S", self.speaker.as_str())
            .with_term("H", self.addressee.as_str())
            .with_formula("F", self.content.clone())
    }

    /// Short human-readable form, e.g. `reproach(nao -> wafa, unplugged)`.
    pub fn label(&self) -> String {
        format!("{}({} -> {}, {})", self.act, self.speaker, self.addressee, self.content)
    }
}

/// Ground one act pattern, keeping wildcard priorities open.
pub fn ground_pattern(pattern: &Formula, act: &ActInstance) -> Result<Formula, CatalogError> {
    instantiate(pattern, &act.grounding())
        .map_err(|e| CatalogError::Grounding { act: act.act.clone(), reason: e.to_string() })
}

fn ground_fact(pattern: &Formula, act: &ActInstance) -> Result<Formula, CatalogError> {
    substitute(pattern, &act.grounding())
        .map_err(|e| CatalogError::Grounding { act: act.act.clone(), reason: e.to_string() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreconditionCheck {
    pub holds: bool,
    pub missing: Vec<Formula>,
}

/// Whether one instantiated precondition holds. `Emo` conditions consult the
/// felt emotions; a top-level `not` is closed-world negation.
pub fn condition_holds(condition: &Formula, snap: &Snapshot) -> bool {
    match condition {
        Formula::Emo { .. } => snap
            .episodic()
            .emotions()
            .iter()
            .any(|r| crate::logic::match_pattern(condition, &r.emotion.formula()).is_some()),
        Formula::Not(inner) if !matches!(**inner, Formula::Atom { .. }) => !condition_holds(inner, snap),
        other => snap.episodic().holds(other),
    }
}

pub fn check_preconditions(
    act: &ActInstance,
    catalog: &Catalog,
    snap: &Snapshot,
) -> Result<PreconditionCheck, CatalogError> {
    let def = catalog.definition(&act.act)?;
    let mut missing = Vec::new();
    for p in &def.preconditions {
        let condition = ground_pattern(p, act)?;
        if !condition_holds(&condition, snap) {
            missing.push(condition);
        }
    }
    Ok(PreconditionCheck { holds: missing.is_empty(), missing })
}

fn apply_effects(
    patterns: &[Formula],
    act: &ActInstance,
    source: FactSource,
    memory: &mut Memory,
    clock: &mut Clock,
) -> Result<RevisionReport, CatalogError> {
    let mut report = RevisionReport::default();
    for p in patterns {
        // an effect without explicit priority leaves an existing priority alone
        let open = ground_pattern(p, act)?;
        if open != ground_fact(p, act)? && memory.episodic().holds(&open) {
            continue;
        }
        report.merge(memory.assert_fact(ground_fact(p, act)?, source, clock)?);
    }
    memory.episodic_mut().push_history(&act.id);
    Ok(report)
}

pub fn apply_sending_effects(
    act: &ActInstance,
    catalog: &Catalog,
    memory: &mut Memory,
    clock: &mut Clock,
) -> Result<RevisionReport, CatalogError> {
    if act.direction != Direction::Sent {
        return Err(CatalogError::WrongDirection {
            act: act.act.clone(),
            expected: Direction::Sent,
            actual: act.direction,
        });
    }
    let def = catalog.definition(&act.act)?;
    apply_effects(&def.sending_effects, act, FactSource::SendingEffect, memory, clock)
}

/// Reception effects, with `?S` the human speaker and `?H` the agent. A
/// responsibility declaration adds `Bel(H, Resp(S, F))`.
pub fn apply_reception_effects(
    act: &ActInstance,
    catalog: &Catalog,
    memory: &mut Memory,
    clock: &mut Clock,
) -> Result<RevisionReport, CatalogError> {
    if act.direction != Direction::Received {
        return Err(CatalogError::WrongDirection {
            act: act.act.clone(),
            expected: Direction::Received,
            actual: act.direction,
        });
    }
    let def = catalog.definition(&act.act)?;
    let mut effects = def.reception_effects.clone();
    if act.declares_responsibility {
        effects.push(Formula::bel(
            Term::var("H"),
            Formula::resp(Term::var("S"), Formula::var("F")),
        ));
    }
    apply_effects(&effects, act, FactSource::ReceptionEffect, memory, clock)
}

/// Text for the act's surface template.
pub fn render_surface(def: &ActDefinition, act: &ActInstance) -> String {
    let addressee = {
        let name = act.addressee.as_str();
        let mut chars = name.chars();
        match chars.next() {
            Some(c) => c.to_ascii_uppercase().to_string() + chars.as_str(),
            None => String::new(),
        }
    };
    def.surface_template
        .replace("{content}", &humanize(&act.content))
        .replace("{addressee}", &addressee)
}

/// Content as plain words: `fetched(ball)` reads "fetched ball".
pub fn humanize(content: &Formula) -> String {
    match content {
        Formula::Not(inner) => format!("not {}", humanize(inner)),
        other => other.term_key().replace('_', " "),
    }
}

/// Mismatches between expressive acts and the emotion definitions they
/// claim to express. An act's preconditions must be the emotion rule's
/// premises with the speaker as `?I` and the addressee as `?J`.
pub fn expressive_consistency(catalog: &Catalog, emotion_rules: &[InferenceRule]) -> Vec<String> {
    let mut problems = Vec::new();
    for def in catalog.acts().filter(|d| d.class == ActClass::Expressive) {
        let Some(category) = def.expresses else {
            problems.push(format!("{}: no emotion named", def.name));
            continue;
        };
        let Some(rule) = emotion_rules
            .iter()
            .find(|r| matches!(r.conclusion, Formula::Emo { category: c, .. } if c == category))
        else {
            problems.push(format!("{}: no rule for {category}", def.name));
            continue;
        };
        let rename = Substitution::new()
            .with_formula("F", Formula::var("F"));
        let speaker_view = |patterns: &[Formula], who: [(&str, &str); 2]| -> BTreeSet<String> {
            patterns
                .iter()
                .map(|p| {
                    let mut s = rename.clone();
                    for (from, to) in who {
                        s.bind(from, crate::logic::Binding::Term(to.to_string()));
                    }
                    instantiate(p, &s).map(|f| f.without_priorities().to_string()).unwrap_or_default()
                })
                .collect()
        };
        let act_side = speaker_view(&def.preconditions, [("S", "speaker"), ("H", "addressee")]);
        let rule_side = speaker_view(&rule.premises, [("I", "speaker"), ("J", "addressee")]);
        if act_side != rule_side {
            problems.push(format!(
                "{}: preconditions {:?} differ from {} definition {:?}",
                def.name, act_side, category, rule_side
            ));
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_pattern};
    use crate::memory::{default_emotion_rules, default_inference_rules, ProceduralStore, SemanticStore};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn agent(s: &str) -> AgentId {
        AgentId::new(s).unwrap()
    }

    fn memory_with(facts: &[&str], clock: &mut Clock) -> Memory {
        let semantic = SemanticStore::new(default_emotion_rules(), default_catalog()).unwrap();
        let mut mem = Memory::new(semantic, ProceduralStore::default(), default_inference_rules());
        for s in facts {
            mem.assert_fact(f(s), FactSource::ScenarioInit, clock).unwrap();
        }
        mem
    }

    fn sent(act: &str, content: &str) -> ActInstance {
        ActInstance::new(act, agent("nao"), agent("wafa"), f(content), Direction::Sent, 10)
    }

    fn received(act: &str, content: &str) -> ActInstance {
        ActInstance::new(act, agent("wafa"), agent("nao"), f(content), Direction::Received, 10)
    }

    #[test]
    fn default_catalog_rejoice_definition() {
        let cat = default_catalog();
        let rejoice = cat.get("rejoice").unwrap();
        assert_eq!(
            rejoice.preconditions,
            vec![parse_pattern("Goal(?S, ?F)").unwrap(), parse_pattern("Bel(?S, Resp(?S, ?F))").unwrap()]
        );
        assert_eq!(rejoice.expresses, Some(EmotionCategory::Rejoicing));
    }

    #[test]
    fn only_non_expressive_acts_are_conventional() {
        for def in default_catalog().acts() {
            assert_eq!(def.conventional, def.class != ActClass::Expressive, "{}", def.name);
        }
    }

    #[test]
    fn undeclared_variable_is_rejected() {
        let mut defs: Vec<ActDefinition> =
            serde_json::from_str(include_str!("../../data/catalog.json")).unwrap();
        defs[0].preconditions.push(parse_pattern("Bel(?S, ?X)").unwrap());
        let err = Catalog::new(defs).unwrap_err();
        assert!(err.reason.contains("?X"), "{err}");
    }

    #[test]
    fn empty_catalog_is_rejected() {
        assert!(load_catalog("[]").is_err());
    }

    #[test]
    fn rejoice_preconditions() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mem = memory_with(&["Goal(nao, tidy)", "Bel(nao, Resp(nao, tidy))"], &mut clock);
        let check = check_preconditions(&sent("rejoice", "tidy"), &cat, &mem.snapshot()).unwrap();
        assert!(check.holds);

        let empty = memory_with(&[], &mut clock);
        let check = check_preconditions(&sent("rejoice", "tidy"), &cat, &empty.snapshot()).unwrap();
        assert!(!check.holds);
        assert_eq!(check.missing.len(), 2);
    }

    #[test]
    fn unknown_act() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mem = memory_with(&[], &mut clock);
        let err = check_preconditions(&sent("sing", "p"), &cat, &mem.snapshot()).unwrap_err();
        assert_eq!(err, CatalogError::UnknownAct("sing".into()));
    }

    #[test]
    fn accept_uses_closed_world_negation() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mem = memory_with(&[], &mut clock);
        assert!(check_preconditions(&sent("accept", "tidy"), &cat, &mem.snapshot()).unwrap().holds);
        let mem = memory_with(&["Goal(nao, not tidy, 0.9)"], &mut clock);
        assert!(!check_preconditions(&sent("accept", "tidy"), &cat, &mem.snapshot()).unwrap().holds);
        assert!(check_preconditions(&sent("refuse", "tidy"), &cat, &mem.snapshot()).unwrap().holds);
    }

    #[test]
    fn rejoice_sending_effect() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mut mem = memory_with(&[], &mut clock);
        let report = apply_sending_effects(&sent("rejoice", "tidy"), &cat, &mut mem, &mut clock).unwrap();
        assert_eq!(report.added.len(), 1);
        assert_eq!(report.added[0].formula, f("Bel(nao, Bel(wafa, Emo(rejoicing, nao, tidy)))"));
        assert_eq!(report.added[0].source, FactSource::SendingEffect);
        let again = apply_sending_effects(&sent("rejoice", "tidy"), &cat, &mut mem, &mut clock).unwrap();
        assert!(again.is_empty());
        assert_eq!(mem.episodic().dialogue_history().len(), 2);
    }

    #[test]
    fn rejoice_reception_effects() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mut mem = memory_with(&[], &mut clock);
        let report = apply_reception_effects(&received("rejoice", "tidy"), &cat, &mut mem, &mut clock).unwrap();
        let added: Vec<Formula> = report.added.iter().map(|x| x.formula.clone()).collect();
        assert_eq!(added, vec![f("Bel(nao, Goal(wafa, tidy))"), f("Bel(nao, Bel(wafa, Resp(wafa, tidy)))")]);
    }

    #[test]
    fn empty_effects_only_grow_history() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mut mem = memory_with(&[], &mut clock);
        let report = apply_sending_effects(&sent("ask-if", "raining"), &cat, &mut mem, &mut clock).unwrap();
        assert!(report.is_empty());
        let report = apply_reception_effects(&received("ask-ref", "departure_time"), &cat, &mut mem, &mut clock).unwrap();
        assert!(report.is_empty());
        assert_eq!(mem.episodic().dialogue_history().len(), 2);
    }

    #[test]
    fn announced_unplugging() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mut mem = memory_with(&[], &mut clock);
        let mut act = received("inform", "unplugged");
        act.declares_responsibility = true;
        let report = apply_reception_effects(&act, &cat, &mut mem, &mut clock).unwrap();
        let added: Vec<Formula> = report.added.iter().map(|x| x.formula.clone()).collect();
        assert_eq!(added, vec![f("Bel(nao, unplugged)"), f("Bel(nao, Resp(wafa, unplugged))")]);
    }

    #[test]
    fn accept_keeps_existing_goal_priority() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mut mem = memory_with(&["Goal(nao, tidy, 0.9)"], &mut clock);
        apply_sending_effects(&sent("accept", "tidy"), &cat, &mut mem, &mut clock).unwrap();
        assert!(mem.episodic().contains(&f("Goal(nao, tidy, 0.9)")));
    }

    #[test]
    fn direction_is_checked() {
        let cat = default_catalog();
        let mut clock = Clock::default();
        let mut mem = memory_with(&[], &mut clock);
        assert!(apply_sending_effects(&received("inform", "p"), &cat, &mut mem, &mut clock).is_err());
    }

    #[test]
    fn expressive_acts_match_emotion_definitions() {
        assert_eq!(expressive_consistency(&default_catalog(), &default_emotion_rules()), Vec::<String>::new());
    }

    #[test]
    fn surface_text() {
        let cat = default_catalog();
        let act = sent("reproach", "unplugged");
        assert_eq!(
            render_surface(cat.get("reproach").unwrap(), &act),
            "Wafa, I do not approve of this: unplugged."
        );
        assert_eq!(humanize(&f("fetched(ball)")), "fetched ball");
    }

    #[test]
    fn gratitude_variants_ordered_by_strength() {
        let cat = default_catalog();
        let names: Vec<&str> =
            cat.expressing(EmotionCategory::Gratitude).iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["thank", "congratulate"]);
    }
}
