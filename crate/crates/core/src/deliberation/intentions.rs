//! Intentions, their priority bands, and selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::appraisal::EmotionRecord;
use crate::logic::{AgentId, Formula, Term};
use crate::memory::Tick;

use super::obligations::{Obligation, ObligationKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentionKind {
    Emotional,
    Obligation,
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Low,
    Medium,
    High,
}

impl IntentionKind {
    pub fn band(self) -> Band {
        match self {
            IntentionKind::Emotional => Band::High,
            IntentionKind::Obligation => Band::Medium,
            IntentionKind::Global => Band::Low,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentionStatus {
    Pending,
    Planned,
    Achieved,
    Abandoned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intention {
    pub kind: IntentionKind,
    pub goal: Formula,
    pub band: Band,
    pub score: f64,
    /// Emotion tick, obligation id or commitment id.
    pub origin: String,
    pub origin_tick: Tick,
    pub status: IntentionStatus,
}

impl Intention {
    pub fn new(kind: IntentionKind, goal: Formula, score: f64, origin: String, origin_tick: Tick) -> Self {
        Intention {
            kind,
            goal,
            band: kind.band(),
            score: score.clamp(0.0, 1.0),
            origin,
            origin_tick,
            status: IntentionStatus::Pending,
        }
    }

    /// Stable identity across deliberation cycles.
    pub fn key(&self) -> String {
        format!("{:?}:{}", self.kind, self.origin).to_lowercase()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdoptedVia {
    PromiseAct,
    AcceptAct,
    Config,
}

/// The overall direction of the dialogue. One per session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalCommitment {
    pub id: String,
    pub goal: Formula,
    pub dialogue_type: String,
    pub adopted_via: AdoptedVia,
    pub tick: Tick,
}

/// Goal literal standing for "this emotion has been expressed to `addressee`".
pub fn expressed_goal(category_name: &str, addressee: &AgentId, content: &Formula) -> Formula {
    Formula::atom_with(
        "expressed",
        vec![Term::sym(category_name), addressee.term(), Term::Sym(content.term_key())],
    )
}

/// Planner goal for an obligation the agent bears.
pub fn obligation_goal(o: &Obligation) -> Formula {
    let key = Term::Sym(o.content.term_key());
    match o.kind {
        ObligationKind::Achieve => o.content.clone(),
        ObligationKind::AddressRequest => Formula::atom_with("addressed", vec![key]),
        ObligationKind::AnswerIf | ObligationKind::InformRef => Formula::atom_with("answered", vec![key]),
        ObligationKind::Clarify => Formula::atom_with("known", vec![key]),
    }
}

/// One intention per unexpressed emotion of `self_agent`, per pending
/// obligation it bears, and for the global commitment if any.
pub fn generate_intentions(
    emotions: &[EmotionRecord],
    obligations: &[Obligation],
    commitment: Option<&GlobalCommitment>,
    self_agent: &AgentId,
    interlocutor: &AgentId,
    now: Tick,
    global_score: f64,
) -> Vec<Intention> {
    let mut out = Vec::new();
    for r in emotions.iter().filter(|r| !r.expressed && &r.emotion.holder == self_agent) {
        let addressee = r.emotion.target.as_ref().unwrap_or(interlocutor);
        out.push(Intention::new(
            IntentionKind::Emotional,
            expressed_goal(r.emotion.category.name(), addressee, &r.emotion.content),
            r.emotion.intensity,
            format!("emotion-{}", r.tick),
            r.tick,
        ));
    }
    for o in obligations.iter().filter(|o| !o.discharged && &o.bearer == self_agent) {
        let age = now.saturating_sub(o.tick) as f64;
        out.push(Intention::new(IntentionKind::Obligation, obligation_goal(o), 1.0 / (1.0 + age), o.id.clone(), o.tick));
    }
    if let Some(c) = commitment {
        out.push(Intention::new(IntentionKind::Global, c.goal.clone(), global_score, c.id.clone(), c.tick));
    }
    out
}

/// Total preference order: band, then score, then most recent origin, then
/// goal rendering, then origin. `Less` means preferred.
pub fn preference(a: &Intention, b: &Intention) -> Ordering {
    b.band
        .cmp(&a.band)
        .then_with(|| b.score.total_cmp(&a.score))
        .then_with(|| b.origin_tick.cmp(&a.origin_tick))
        .then_with(|| a.goal.to_string().cmp(&b.goal.to_string()))
        .then_with(|| a.origin.cmp(&b.origin))
}

/// The preferred intention that has not been abandoned.
pub fn select_intention(list: &[Intention]) -> Option<&Intention> {
    list.iter().filter(|i| i.status != IntentionStatus::Abandoned).min_by(|a, b| preference(a, b))
}

/// Every intention seen in the session, by key.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntentionLedger {
    entries: BTreeMap<String, Intention>,
    abandoned: BTreeSet<String>,
}

impl IntentionLedger {
    /// Fold in a freshly generated list. Entries that are no longer
    /// generated are considered achieved; abandoned ones stay abandoned.
    pub fn update(&mut self, generated: Vec<Intention>) -> Vec<Intention> {
        let live: BTreeSet<String> = generated.iter().map(Intention::key).collect();
        for (key, entry) in self.entries.iter_mut() {
            if !live.contains(key) && matches!(entry.status, IntentionStatus::Pending | IntentionStatus::Planned) {
                entry.status = IntentionStatus::Achieved;
            }
        }
        let mut current = Vec::new();
        for mut i in generated {
            let key = i.key();
            if self.abandoned.contains(&key) {
                i.status = IntentionStatus::Abandoned;
            } else if let Some(old) = self.entries.get(&key) {
                if old.status == IntentionStatus::Planned {
                    i.status = IntentionStatus::Planned;
                }
            }
            self.entries.insert(key, i.clone());
            current.push(i);
        }
        current
    }

    pub fn set_status(&mut self, key: &str, status: IntentionStatus) {
        if let Some(e) = self.entries.get_mut(key) {
            e.status = status;
        }
    }

    /// Abandon for the rest of the session.
    pub fn abandon(&mut self, key: &str) {
        self.abandoned.insert(key.to_string());
        self.set_status(key, IntentionStatus::Abandoned);
    }

    pub fn is_abandoned(&self, key: &str) -> bool {
        self.abandoned.contains(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Intention> {
        self.entries.values()
    }

    pub fn get(&self, key: &str) -> Option<&Intention> {
        self.entries.get(key)
    }
}

/// Abandon `intention` after the planner gave up on it and pick the next one
/// from `list`.
pub fn on_plan_failure<'a>(
    intention: &Intention,
    ledger: &mut IntentionLedger,
    list: &'a mut [Intention],
) -> Option<&'a Intention> {
    ledger.abandon(&intention.key());
    for i in list.iter_mut() {
        if ledger.is_abandoned(&i.key()) {
            i.status = IntentionStatus::Abandoned;
        }
    }
    select_intention(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appraisal::Emotion;
    use crate::logic::{parse_formula, EmotionCategory};

    fn intention(kind: IntentionKind, score: f64, tick: Tick, goal: &str) -> Intention {
        Intention::new(kind, parse_formula(goal).unwrap(), score, format!("o{tick}"), tick)
    }

    fn nao() -> AgentId {
        AgentId::new("nao").unwrap()
    }

    fn wafa() -> AgentId {
        AgentId::new("wafa").unwrap()
    }

    #[test]
    fn band_dominates_score() {
        let list = vec![
            intention(IntentionKind::Obligation, 0.9, 1, "a"),
            intention(IntentionKind::Emotional, 0.3, 2, "b"),
        ];
        assert_eq!(select_intention(&list).unwrap().kind, IntentionKind::Emotional);
    }

    #[test]
    fn empty_list_selects_nothing() {
        assert!(select_intention(&[]).is_none());
    }

    #[test]
    fn stronger_emotion_first() {
        let list = vec![
            intention(IntentionKind::Emotional, 0.5, 1, "a"),
            intention(IntentionKind::Emotional, 0.8, 2, "b"),
        ];
        assert_eq!(select_intention(&list).unwrap().score, 0.8);
    }

    #[test]
    fn ties_go_to_recent_then_alphabetical() {
        let list = vec![
            intention(IntentionKind::Global, 0.5, 1, "a"),
            intention(IntentionKind::Global, 0.5, 2, "b"),
        ];
        assert_eq!(select_intention(&list).unwrap().origin_tick, 2);
        let list = vec![
            intention(IntentionKind::Global, 0.5, 2, "b"),
            intention(IntentionKind::Global, 0.5, 2, "a"),
        ];
        assert_eq!(select_intention(&list).unwrap().goal, parse_formula("a").unwrap());
    }

    #[test]
    fn unexpressed_reproach_heads_the_list() {
        let record = EmotionRecord {
            emotion: Emotion {
                category: EmotionCategory::Reproach,
                holder: nao(),
                target: Some(wafa()),
                content: parse_formula("unplugged").unwrap(),
                intensity: 0.8,
            },
            tick: 4,
            expressed: false,
        };
        let list = generate_intentions(&[record], &[], None, &nao(), &wafa(), 5, 0.5);
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].kind, IntentionKind::Emotional);
        assert_eq!(list[0].goal, parse_formula("expressed(reproach, wafa, unplugged)").unwrap());
        assert_eq!(list[0].score, 0.8);
    }

    #[test]
    fn obligation_scores_decay_with_age() {
        let ob = Obligation {
            id: "x".into(),
            bearer: nao(),
            kind: ObligationKind::AnswerIf,
            content: parse_formula("raining").unwrap(),
            source_act: "act-1".into(),
            tick: 1,
            discharged: false,
        };
        let list = generate_intentions(&[], &[ob], None, &nao(), &wafa(), 4, 0.5);
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].band, Band::Medium);
        assert_eq!(list[0].score, 0.25);
        assert_eq!(list[0].goal, parse_formula("answered(raining)").unwrap());
    }

    #[test]
    fn commitment_alone_is_low_band() {
        let c = GlobalCommitment {
            id: "commitment-1".into(),
            goal: parse_formula("booked(paris, lyon, departure_time)").unwrap(),
            dialogue_type: "deliberation".into(),
            adopted_via: AdoptedVia::Config,
            tick: 0,
        };
        let list = generate_intentions(&[], &[], Some(&c), &nao(), &wafa(), 1, 0.5);
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].band, Band::Low);
    }

    #[test]
    fn abandonment_is_permanent() {
        let mut ledger = IntentionLedger::default();
        let mut list = ledger.update(vec![
            intention(IntentionKind::Emotional, 0.8, 1, "a"),
            intention(IntentionKind::Obligation, 0.5, 2, "b"),
        ]);
        let first = select_intention(&list).unwrap().clone();
        let next = on_plan_failure(&first, &mut ledger, &mut list).unwrap();
        assert_eq!(next.kind, IntentionKind::Obligation);
        let again = ledger.update(vec![intention(IntentionKind::Emotional, 0.8, 1, "a")]);
        assert!(select_intention(&again).is_none());
    }

    #[test]
    fn sole_unreachable_intention_leaves_nothing() {
        let mut ledger = IntentionLedger::default();
        let mut list = ledger.update(vec![intention(IntentionKind::Global, 0.5, 1, "a")]);
        let first = select_intention(&list).unwrap().clone();
        assert!(on_plan_failure(&first, &mut ledger, &mut list).is_none());
        assert_eq!(ledger.get(&first.key()).unwrap().status, IntentionStatus::Abandoned);
    }
}
