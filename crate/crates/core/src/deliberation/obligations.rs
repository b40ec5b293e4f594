//! Discourse obligations: what each party owes the other after an act.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::ActInstance;
use crate::error::ValidationError;
use crate::logic::{AgentId, Formula};
use crate::memory::{Snapshot, Tick};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObligationKind {
    Achieve,
    AddressRequest,
    AnswerIf,
    InformRef,
    /// Owed after an utterance that could not be understood.
    Clarify,
}

impl ObligationKind {
    pub fn name(self) -> &'static str {
        match self {
            ObligationKind::Achieve => "achieve",
            ObligationKind::AddressRequest => "address_request",
            ObligationKind::AnswerIf => "answer_if",
            ObligationKind::InformRef => "inform_ref",
            ObligationKind::Clarify => "clarify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bearer {
    Speaker,
    Addressee,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObligationRule {
    pub name: String,
    /// Act names that create the obligation, in either direction.
    pub trigger: Vec<String>,
    pub bearer: Bearer,
    pub kind: ObligationKind,
    /// Acts by the bearer, on the same content, that discharge it. Empty
    /// means the obligation is met once its content is believed true.
    pub discharged_by: Vec<String>,
}

pub fn load_discourse_rules(json: &str) -> Result<Vec<ObligationRule>, ValidationError> {
    let rules: Vec<ObligationRule> =
        serde_json::from_str(json).map_err(|e| ValidationError::new("$", e.to_string()))?;
    let mut names = BTreeSet::new();
    for (i, r) in rules.iter().enumerate() {
        if !names.insert(&r.name) {
            return Err(ValidationError::new(format!("[{i}].name"), format!("duplicate rule {}", r.name)));
        }
        if r.trigger.is_empty() {
            return Err(ValidationError::new(format!("[{i}].trigger"), "no trigger act"));
        }
        if r.kind == ObligationKind::Clarify {
            return Err(ValidationError::new(format!("[{i}].kind"), "clarify obligations are built in"));
        }
    }
    Ok(rules)
}

pub fn default_discourse_rules() -> Vec<ObligationRule> {
    load_discourse_rules(include_str!("../../data/discourse_rules.json")).expect("shipped discourse rules are valid")
}

/// Acts that discharge a clarification obligation.
pub const CLARIFYING_ACTS: [&str; 2] = ["ask-ref", "ask-if"];

/// Content a clarification question asks about.
pub fn clarification_content() -> Formula {
    Formula::atom("meaning")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obligation {
    pub id: String,
    pub bearer: AgentId,
    pub kind: ObligationKind,
    pub content: Formula,
    pub source_act: String,
    pub tick: Tick,
    pub discharged: bool,
}

/// Obligations created by `act`.
pub fn derive_obligations(act: &ActInstance, rules: &[ObligationRule]) -> Vec<Obligation> {
    rules
        .iter()
        .filter(|r| r.trigger.iter().any(|t| t == &act.act))
        .map(|r| Obligation {
            id: format!("{}:{}", act.id, r.name),
            bearer: match r.bearer {
                Bearer::Speaker => act.speaker.clone(),
                Bearer::Addressee => act.addressee.clone(),
            },
            kind: r.kind,
            content: act.content.clone(),
            source_act: act.id.clone(),
            tick: act.tick,
            discharged: false,
        })
        .collect()
}

fn discharging_acts(kind: ObligationKind, rules: &[ObligationRule]) -> Vec<String> {
    if kind == ObligationKind::Clarify {
        return CLARIFYING_ACTS.iter().map(|s| s.to_string()).collect();
    }
    rules.iter().filter(|r| r.kind == kind).flat_map(|r| r.discharged_by.iter().cloned()).collect()
}

/// Whether `act` settles `obligation`.
pub fn discharges(
    act: &ActInstance,
    obligation: &Obligation,
    rules: &[ObligationRule],
    snap: &Snapshot,
    self_agent: &AgentId,
) -> bool {
    if obligation.discharged || act.speaker != obligation.bearer {
        return false;
    }
    let by = discharging_acts(obligation.kind, rules);
    if by.is_empty() {
        return content_achieved(obligation, snap, self_agent);
    }
    if !by.iter().any(|a| a == &act.act) {
        return false;
    }
    obligation.kind == ObligationKind::Clarify
        || act.content.without_priorities().term_key() == obligation.content.without_priorities().term_key()
}

/// An achievement obligation is met when its content is believed.
pub fn content_achieved(obligation: &Obligation, snap: &Snapshot, self_agent: &AgentId) -> bool {
    let belief = Formula::bel(self_agent.term(), obligation.content.clone());
    snap.episodic().holds(&belief.without_priorities())
}

/// All obligations of the session, both parties.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObligationLedger {
    obligations: Vec<Obligation>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObligationUpdate {
    pub created: Vec<Obligation>,
    pub discharged: Vec<String>,
}

impl ObligationLedger {
    pub fn all(&self) -> &[Obligation] {
        &self.obligations
    }

    pub fn pending(&self) -> Vec<Obligation> {
        self.obligations.iter().filter(|o| !o.discharged).cloned().collect()
    }

    pub fn pending_for(&self, agent: &AgentId) -> Vec<Obligation> {
        self.obligations.iter().filter(|o| !o.discharged && &o.bearer == agent).cloned().collect()
    }

    pub fn get(&self, id: &str) -> Option<&Obligation> {
        self.obligations.iter().find(|o| o.id == id)
    }

    /// Discharge what `act` settles, then add what it creates.
    pub fn observe(
        &mut self,
        act: &ActInstance,
        rules: &[ObligationRule],
        snap: &Snapshot,
        self_agent: &AgentId,
    ) -> ObligationUpdate {
        let mut update = ObligationUpdate::default();
        for o in self.obligations.iter_mut() {
            if discharges(act, o, rules, snap, self_agent) {
                o.discharged = true;
                update.discharged.push(o.id.clone());
            }
        }
        for o in derive_obligations(act, rules) {
            if self.obligations.iter().any(|x| x.id == o.id) {
                continue;
            }
            update.created.push(o.clone());
            self.obligations.push(o);
        }
        update
    }

    /// The agent owes a clarification of an utterance it did not understand.
    pub fn add_clarification(&mut self, bearer: AgentId, source_act: &str, tick: Tick) -> Obligation {
        let o = Obligation {
            id: format!("{source_act}:clarify"),
            bearer,
            kind: ObligationKind::Clarify,
            content: clarification_content(),
            source_act: source_act.to_string(),
            tick,
            discharged: false,
        };
        self.obligations.push(o.clone());
        o
    }

    /// Mark achievement obligations whose content now holds.
    pub fn refresh(&mut self, snap: &Snapshot, self_agent: &AgentId) -> Vec<String> {
        let mut done = Vec::new();
        for o in self.obligations.iter_mut() {
            if !o.discharged && o.kind == ObligationKind::Achieve && content_achieved(o, snap, self_agent) {
                o.discharged = true;
                done.push(o.id.clone());
            }
        }
        done
    }
}
