use serde::{Deserialize, Serialize};

use crate::appraisal::SecProfile;
use crate::deliberation::{GlobalCommitment, Intention, Obligation};
use crate::logic::{AgentId, Formula, Modality};
use crate::memory::{Fact, FactSource, Tick};

use super::Session;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactView {
    pub formula: String,
    pub priority: Option<f64>,
    pub tick: Tick,
    pub source: FactSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionView {
    pub id: Tick,
    pub category: String,
    pub holder: AgentId,
    pub target: Option<AgentId>,
    pub content: String,
    pub intensity: f64,
    pub expressed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntentionView {
    pub key: String,
    #[serde(flatten)]
    pub intention: Intention,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanView {
    pub intention: String,
    pub steps: Vec<String>,
    pub next: usize,
}

/// What the agent holds at one moment, for display.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub self_agent: AgentId,
    pub interlocutor: AgentId,
    pub tick: Tick,
    pub closed: bool,
    pub beliefs: Vec<FactView>,
    pub goals: Vec<FactView>,
    pub ideals: Vec<FactView>,
    pub responsibilities: Vec<FactView>,
    pub other_facts: Vec<FactView>,
    /// Strongest first.
    pub emotions: Vec<EmotionView>,
    pub intentions: Vec<IntentionView>,
    pub plan: Option<PlanView>,
    pub obligations: Vec<Obligation>,
    pub commitment: Option<GlobalCommitment>,
    pub dialogue_type: Option<String>,
    pub last_sec: Option<SecProfile>,
    pub last_expression: Option<Vec<String>>,
}

fn fact_view(f: &Fact) -> FactView {
    FactView {
        formula: f.formula.to_string(),
        priority: f.formula.priority().map(|p| p.value()),
        tick: f.tick,
        source: f.source,
    }
}

impl StateView {
    pub fn of(session: &Session) -> StateView {
        let snap = session.snapshot();
        let mut view = StateView {
            session_id: session.id().to_string(),
            self_agent: session.self_agent().clone(),
            interlocutor: session.interlocutor().clone(),
            tick: session.events().last().map_or(0, |e| e.tick),
            closed: session.is_closed(),
            beliefs: Vec::new(),
            goals: Vec::new(),
            ideals: Vec::new(),
            responsibilities: Vec::new(),
            other_facts: Vec::new(),
            emotions: Vec::new(),
            intentions: session
                .intentions()
                .entries()
                .map(|i| IntentionView { key: i.key(), intention: i.clone() })
                .collect(),
            plan: session.current_plan().map(|p| PlanView {
                intention: p.intention.key(),
                steps: p.steps.iter().map(ToString::to_string).collect(),
                next: p.next,
            }),
            obligations: session.obligations().all().to_vec(),
            commitment: session.commitment().cloned(),
            dialogue_type: session.commitment().map(|c| c.dialogue_type.clone()),
            last_sec: session.last_sec().cloned(),
            last_expression: session.last_expression().map(|e| e.labels().iter().map(|s| s.to_string()).collect()),
        };
        for fact in snap.episodic().facts() {
            let bucket = match &fact.formula {
                Formula::Modal { op: Modality::Bel, inner, .. }
                    if matches!(**inner, Formula::Modal { op: Modality::Resp, .. }) =>
                {
                    &mut view.responsibilities
                }
                Formula::Modal { op: Modality::Bel, .. } => &mut view.beliefs,
                Formula::Modal { op: Modality::Goal, .. } => &mut view.goals,
                Formula::Modal { op: Modality::Ideal, .. } => &mut view.ideals,
                _ => &mut view.other_facts,
            };
            bucket.push(fact_view(fact));
        }
        view.emotions = snap
            .episodic()
            .emotions()
            .iter()
            .map(|r| EmotionView {
                id: r.tick,
                category: r.emotion.category.name().to_string(),
                holder: r.emotion.holder.clone(),
                target: r.emotion.target.clone(),
                content: r.emotion.content.to_string(),
                intensity: r.emotion.intensity,
                expressed: r.expressed,
            })
            .collect();
        view.emotions.sort_by(|a, b| b.intensity.total_cmp(&a.intensity).then(a.id.cmp(&b.id)));
        view
    }
}
