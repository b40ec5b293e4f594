use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::appraisal::{appraise_cognitive, appraise_sensorimotor, sec_to_labels, ExpressionSequence, SecLabel, SecProfile};
use crate::catalog::{
    apply_reception_effects, apply_sending_effects, check_preconditions, default_catalog, load_catalog, render_surface,
    ActClass, ActInstance, Catalog, Direction,
};
use crate::deliberation::{
    default_discourse_rules, generate_intentions, on_plan_failure, select_intention, AdoptedVia, GlobalCommitment,
    Intention, IntentionKind, IntentionLedger, IntentionStatus, ObligationKind, ObligationLedger, ObligationUpdate,
};
use crate::logic::{parse_formula, AgentId, Formula, Substitution, Term};
use crate::memory::{
    default_emotion_rules, default_inference_rules, Clock, FactSource, Memory, ProceduralStore, RevisionReport,
    SemanticStore, Snapshot, Tick,
};
use crate::perception::{default_patterns, ingest_stimulus, load_patterns, parse_utterance, PatternSet, Perceived, Stimulus};
use crate::planner::{
    compile_acts_to_operators, parse_domain, plan, prefer_variant, project, select_expressive_act, GroundAction, Literal,
    Operator, OperatorKind, Plan, PlanningTask,
};

use super::{EngineConfig, EngineError, Event, EventKind};

const DEFAULT_DOMAIN: &str = include_str!("../../data/domains/household.pddl");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agents {
    #[serde(rename = "self")]
    pub self_agent: AgentId,
    pub interlocutor: AgentId,
}

impl Default for Agents {
    fn default() -> Self {
        Agents { self_agent: AgentId::new("nao").unwrap(), interlocutor: AgentId::new("wafa").unwrap() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalSpec {
    pub goal: String,
    #[serde(default = "default_dialogue_type")]
    pub dialogue_type: String,
}

fn default_dialogue_type() -> String {
    "deliberation".to_string()
}

/// Everything needed to start a session. Resource paths are relative to
/// the directory given to [`Session::create`]; absent ones fall back to the
/// shipped defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    #[serde(default)]
    pub agents: Agents,
    #[serde(default)]
    pub init_facts: Vec<String>,
    #[serde(default)]
    pub domain: Option<PathBuf>,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default)]
    pub patterns: Option<PathBuf>,
    #[serde(default)]
    pub config: Option<EngineConfig>,
    #[serde(default)]
    pub global: Option<GlobalSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub content: String,
    #[serde(default)]
    pub responsible: Option<String>,
}

/// One input to a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    Utterance(String),
    Stimulus(StimulusSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivePlan {
    pub intention: Intention,
    pub goal: Vec<Literal>,
    pub steps: Vec<GroundAction>,
    pub next: usize,
    pub replans: usize,
}

enum StepOutcome {
    Done { awaits_reply: bool },
    Failed,
}

fn read_resource(base: &Path, path: &Path, what: &str) -> Result<String, EngineError> {
    let full = base.join(path);
    std::fs::read_to_string(&full)
        .map_err(|e| EngineError::BadConfig(format!("cannot read {what} {}: {e}", full.display())))
}

fn parse_ground(text: &str) -> Result<Formula, EngineError> {
    let f = parse_formula(text).map_err(|e| EngineError::BadInput(format!("{text}: {e}")))?;
    if !f.is_ground() {
        return Err(EngineError::BadInput(format!("{text}: not ground")));
    }
    Ok(f)
}

fn facts_json(report: &RevisionReport) -> (Value, Value) {
    (
        serde_json::to_value(&report.added).expect("facts serialize"),
        serde_json::to_value(&report.retracted).expect("facts serialize"),
    )
}

fn obligations_json(update: &ObligationUpdate) -> Value {
    json!({
        "created": update.created.iter().map(|o| &o.id).collect::<Vec<_>>(),
        "discharged": update.discharged,
    })
}

fn labels_json(seq: &ExpressionSequence) -> Value {
    json!(seq.labels())
}

/// A dialogue between the agent and one interlocutor.
#[derive(Clone, Debug)]
pub struct Session {
    id: String,
    self_agent: AgentId,
    interlocutor: AgentId,
    memory: Memory,
    clock: Clock,
    obligations: ObligationLedger,
    intentions: IntentionLedger,
    commitment: Option<GlobalCommitment>,
    plan: Option<ActivePlan>,
    operators: Vec<Operator>,
    patterns: PatternSet,
    config: EngineConfig,
    faults: BTreeMap<String, u32>,
    last_sec: Option<SecProfile>,
    last_expression: Option<ExpressionSequence>,
    log: Vec<Event>,
    closed: bool,
    /// A question or request is out; deliberation waits for the next input.
    awaiting_reply: bool,
}

impl Session {
    pub fn create(id: impl Into<String>, spec: &SessionSpec, base_dir: &Path) -> Result<Session, EngineError> {
        let catalog: Catalog = match &spec.catalog {
            Some(p) => load_catalog(&read_resource(base_dir, p, "catalog")?)
                .map_err(|e| EngineError::BadConfig(e.to_string()))?,
            None => default_catalog(),
        };
        let patterns = match &spec.patterns {
            Some(p) => load_patterns(&read_resource(base_dir, p, "patterns")?, &catalog),
            None => default_patterns(&catalog),
        }
        .map_err(|e| EngineError::BadConfig(e.to_string()))?;
        let domain_text = match &spec.domain {
            Some(p) => read_resource(base_dir, p, "domain")?,
            None => DEFAULT_DOMAIN.to_string(),
        };
        let domain = parse_domain(&domain_text).map_err(|e| EngineError::BadConfig(format!("domain: {e}")))?;
        let agents = &spec.agents;
        if agents.self_agent == agents.interlocutor {
            return Err(EngineError::BadConfig("self and interlocutor must differ".into()));
        }

        let bind = Substitution::new()
            .with_term("S", agents.self_agent.as_str())
            .with_term("H", agents.interlocutor.as_str());
        let mut operators: Vec<Operator> =
            compile_acts_to_operators(catalog.acts()).iter().map(|o| o.bind(&bind)).collect();
        if let Some(clash) = domain.iter().find(|d| operators.iter().any(|o| o.name == d.name)) {
            return Err(EngineError::BadConfig(format!("domain action {} shadows a catalog act", clash.name)));
        }
        operators.extend(domain.iter().cloned());

        let semantic = SemanticStore::new(default_emotion_rules(), catalog)
            .map_err(|e| EngineError::BadConfig(e.to_string()))?;
        let procedural = ProceduralStore::new(domain, default_discourse_rules())
            .map_err(|e| EngineError::BadConfig(e.to_string()))?;
        let config = spec.config.clone().unwrap_or_default();
        let commitment = match &spec.global {
            Some(g) => Some(GlobalCommitment {
                id: "config:commitment".into(),
                goal: parse_ground(&g.goal).map_err(|e| EngineError::BadConfig(e.to_string()))?,
                dialogue_type: g.dialogue_type.clone(),
                adopted_via: AdoptedVia::Config,
                tick: 0,
            }),
            None => None,
        };
        let mut session = Session {
            id: id.into(),
            self_agent: agents.self_agent.clone(),
            interlocutor: agents.interlocutor.clone(),
            memory: Memory::new(semantic, procedural, default_inference_rules()),
            clock: Clock::default(),
            obligations: ObligationLedger::default(),
            intentions: IntentionLedger::default(),
            commitment,
            plan: None,
            operators,
            patterns,
            faults: config.faults.clone(),
            config,
            last_sec: None,
            last_expression: None,
            log: Vec::new(),
            closed: false,
            awaiting_reply: false,
        };

        let mut report = RevisionReport::default();
        for text in &spec.init_facts {
            let f = parse_ground(text).map_err(|e| EngineError::BadConfig(e.to_string()))?;
            report.merge(session.memory.assert_fact(f, FactSource::ScenarioInit, &mut session.clock)?);
        }
        if !spec.init_facts.is_empty() {
            let (added, retracted) = facts_json(&report);
            session.emit(
                EventKind::FactsAsserted,
                json!({"source": FactSource::ScenarioInit, "added": added, "retracted": retracted}),
            );
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn self_agent(&self) -> &AgentId {
        &self.self_agent
    }

    pub fn interlocutor(&self) -> &AgentId {
        &self.interlocutor
    }

    pub fn events(&self) -> &[Event] {
        &self.log
    }

    pub fn snapshot(&self) -> Snapshot {
        self.memory.snapshot()
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn obligations(&self) -> &ObligationLedger {
        &self.obligations
    }

    pub fn intentions(&self) -> &IntentionLedger {
        &self.intentions
    }

    pub fn commitment(&self) -> Option<&GlobalCommitment> {
        self.commitment.as_ref()
    }

    pub fn current_plan(&self) -> Option<&ActivePlan> {
        self.plan.as_ref()
    }

    pub fn last_sec(&self) -> Option<&SecProfile> {
        self.last_sec.as_ref()
    }

    pub fn last_expression(&self) -> Option<&ExpressionSequence> {
        self.last_expression.as_ref()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn handle(&mut self, input: &Input) -> Result<Vec<Event>, EngineError> {
        match input {
            Input::Utterance(text) => self.handle_utterance(text),
            Input::Stimulus(s) => self.handle_stimulus(s),
        }
    }

    pub fn handle_utterance(&mut self, text: &str) -> Result<Vec<Event>, EngineError> {
        self.ensure_open()?;
        let start = self.log.len();
        let tick = self.clock.now() + 1;
        match parse_utterance(text, &self.patterns, &self.interlocutor, &self.self_agent, tick) {
            Perceived::Act(act) => self.receive_act(act, "utterance", Some(text))?,
            Perceived::Unrecognized(raw) => {
                let act_id = format!("act-{tick}");
                let obligation = format!("{act_id}:clarify");
                self.emit(
                    EventKind::ActReceived,
                    json!({"via": "utterance", "text": raw, "act": null, "act_id": act_id,
                           "unrecognized": true, "obligation": obligation}),
                );
                self.obligations.add_clarification(self.self_agent.clone(), &act_id, tick);
                self.after_input()?;
            }
        }
        Ok(self.log[start..].to_vec())
    }

    /// A stimulus caused by the interlocutor enters as their announcement
    /// of their own doing; any other stimulus only adds beliefs.
    pub fn handle_stimulus(&mut self, spec: &StimulusSpec) -> Result<Vec<Event>, EngineError> {
        self.ensure_open()?;
        let content = parse_ground(&spec.content)?;
        let responsible = match &spec.responsible {
            Some(r) => Some(AgentId::new(r).map_err(|e| EngineError::BadInput(e.to_string()))?),
            None => None,
        };
        let start = self.log.len();
        if responsible.as_ref() == Some(&self.interlocutor) {
            let mut act = ActInstance::new(
                "inform",
                self.interlocutor.clone(),
                self.self_agent.clone(),
                content,
                Direction::Received,
                self.clock.now() + 1,
            );
            act.declares_responsibility = true;
            self.receive_act(act, "stimulus", None)?;
        } else {
            let stimulus = Stimulus { content, responsible, perceiver: self.self_agent.clone() };
            self.emit(EventKind::ActReceived, json!({"via": "stimulus", "act": null, "stimulus": stimulus}));
            let mut report = RevisionReport::default();
            for f in ingest_stimulus(&stimulus) {
                report.merge(self.memory.assert_fact(f, FactSource::Perception, &mut self.clock)?);
            }
            let (added, retracted) = facts_json(&report);
            self.emit(
                EventKind::FactsAsserted,
                json!({"source": FactSource::Perception, "added": added, "retracted": retracted}),
            );
            self.after_input()?;
        }
        Ok(self.log[start..].to_vec())
    }

    /// Run the next step of the current plan, replanning on failure.
    pub fn execute_next_action(&mut self) -> Result<Vec<Event>, EngineError> {
        self.ensure_open()?;
        if self.plan.as_ref().is_none_or(|p| p.next >= p.steps.len()) {
            return Err(EngineError::NoPlan);
        }
        let start = self.log.len();
        self.run_plan(true)?;
        Ok(self.log[start..].to_vec())
    }

    fn ensure_open(&self) -> Result<(), EngineError> {
        if self.closed {
            return Err(EngineError::SessionClosed);
        }
        Ok(())
    }

    fn emit(&mut self, kind: EventKind, payload: Value) -> Tick {
        let tick = self.clock.advance();
        self.log.push(Event { tick, kind, payload });
        tick
    }

    fn catalog(&self) -> &Catalog {
        self.memory.semantic().catalog()
    }

    fn receive_act(&mut self, act: ActInstance, via: &str, text: Option<&str>) -> Result<(), EngineError> {
        let arrival = self.memory.snapshot();
        let pending = self.obligations.pending();
        self.emit(EventKind::ActReceived, json!({"via": via, "text": text, "act": act, "act_id": act.id}));

        let profile = appraise_sensorimotor(&act, &arrival, &self.self_agent, &pending, &self.config.sec)?;
        let labels = sec_to_labels(&profile, &self.config.sec);
        self.emit(EventKind::SecProfile, json!({"direction": act.direction, "profile": profile}));
        self.emit(EventKind::ExpressionRendered, json!({"act_id": act.id, "expression_sequence": labels_json(&labels)}));
        self.last_sec = Some(profile);
        self.last_expression = Some(labels);

        let catalog = self.catalog().clone();
        let mut report = apply_reception_effects(&act, &catalog, &mut self.memory, &mut self.clock)?;
        let update = self.obligations.observe(
            &act,
            self.memory.procedural().discourse_rules(),
            &self.memory.snapshot(),
            &self.self_agent,
        );
        // an answered question makes its subject known
        for id in &update.discharged {
            let Some(o) = self.obligations.get(id) else { continue };
            if matches!(o.kind, ObligationKind::AnswerIf | ObligationKind::InformRef) && o.bearer == self.interlocutor {
                let known = Formula::bel(
                    self.self_agent.term(),
                    Formula::atom_with("known", vec![Term::Sym(o.content.term_key())]),
                );
                report.merge(self.memory.assert_fact(known, FactSource::ReceptionEffect, &mut self.clock)?);
            }
        }
        let (added, retracted) = facts_json(&report);
        self.emit(
            EventKind::FactsAsserted,
            json!({"source": FactSource::ReceptionEffect, "act_id": act.id, "added": added, "retracted": retracted,
                   "obligations": obligations_json(&update)}),
        );
        self.after_input()
    }

    fn infer(&mut self) -> Result<(), EngineError> {
        let derived = self.memory.infer(&mut self.clock, self.config.inference.max_derivations)?;
        if !derived.is_empty() {
            self.emit(
                EventKind::FactsAsserted,
                json!({"source": FactSource::Inference, "added": derived, "retracted": []}),
            );
        }
        Ok(())
    }

    fn after_input(&mut self) -> Result<(), EngineError> {
        self.awaiting_reply = false;
        self.infer()?;
        for _ in 0..self.config.deliberation.max_cycles {
            self.appraise();
            if !self.deliberate()? {
                break;
            }
            self.infer()?;
        }
        Ok(())
    }

    fn appraise(&mut self) {
        for e in appraise_cognitive(&self.memory.snapshot(), &self.self_agent) {
            let id = self.clock.now() + 1;
            let mut payload = serde_json::to_value(&e).expect("emotions serialize");
            payload["id"] = json!(id);
            payload["formula"] = json!(e.formula());
            let tick = self.emit(EventKind::EmotionTriggered, payload);
            self.memory.episodic_mut().record_emotion(e, tick);
        }
    }

    fn commitment_achieved(&self, snap: &Snapshot) -> bool {
        let Some(c) = &self.commitment else { return false };
        let belief = Formula::bel(self.self_agent.term(), c.goal.clone()).without_priorities();
        snap.episodic().holds(&belief) || snap.episodic().holds(&c.goal.without_priorities())
    }

    /// One deliberative cycle. Returns whether the agent's state moved on.
    fn deliberate(&mut self) -> Result<bool, EngineError> {
        let snap = self.memory.snapshot();
        self.obligations.refresh(&snap, &self.self_agent);
        if self.commitment_achieved(&snap) {
            self.commitment = None;
        }
        let generated = generate_intentions(
            snap.episodic().emotions(),
            self.obligations.all(),
            self.commitment.as_ref(),
            &self.self_agent,
            &self.interlocutor,
            self.clock.now(),
            self.config.deliberation.global_score,
        );
        let mut list = self.intentions.update(generated);
        if self.awaiting_reply {
            // only feelings may be voiced before the reply comes
            list.retain(|i| i.kind == IntentionKind::Emotional);
        }
        let mut selected = select_intention(&list).cloned();
        while let Some(intention) = selected {
            self.emit(EventKind::IntentionAdopted, json!({"intention": intention, "key": intention.key(), "candidates": list}));
            match self.plan_for(&intention) {
                Ok(found) => {
                    self.plan_found(&intention, &found, false);
                    if found.steps.is_empty() {
                        self.plan = None;
                        return Ok(false);
                    }
                    self.plan = Some(ActivePlan {
                        goal: vec![Literal::pos(intention.goal.without_priorities())],
                        intention,
                        steps: found.steps,
                        next: 0,
                        replans: 0,
                    });
                    return self.run_plan(false);
                }
                Err(reason) => {
                    self.emit(
                        EventKind::PlanFailed,
                        json!({"intention": intention.key(), "goal": intention.goal, "reason": reason}),
                    );
                    selected = on_plan_failure(&intention, &mut self.intentions, &mut list).cloned();
                }
            }
        }
        Ok(false)
    }

    fn plan_found(&mut self, intention: &Intention, found: &Plan, replan: bool) {
        let steps: Vec<String> = found.steps.iter().map(ToString::to_string).collect();
        self.emit(
            EventKind::PlanFound,
            json!({"intention": intention.key(), "goal": intention.goal, "steps": steps, "cost": found.cost,
                   "replan": replan}),
        );
        self.intentions.set_status(&intention.key(), IntentionStatus::Planned);
    }

    fn plan_for(&self, intention: &Intention) -> Result<Plan, String> {
        let snap = self.memory.snapshot();
        let mut operators = self.operators.clone();
        if intention.kind == IntentionKind::Emotional {
            let record = snap
                .episodic()
                .emotions()
                .iter()
                .find(|r| format!("emotion-{}", r.tick) == intention.origin)
                .ok_or_else(|| "unknown emotion".to_string())?;
            let chosen = select_expressive_act(&record.emotion, self.catalog()).map_err(|e| e.to_string())?;
            prefer_variant(&mut operators, record.emotion.category, &chosen);
        }
        let task = PlanningTask {
            init: project(&snap, &self.self_agent, &self.interlocutor),
            goal: vec![Literal::pos(intention.goal.without_priorities())],
            operators,
            objects: vec![self.self_agent.to_string(), self.interlocutor.to_string()],
        };
        plan(&task, &self.config.planner).map_err(|f| match f {
            crate::planner::PlanFailure::Unreachable => "unreachable".to_string(),
            crate::planner::PlanFailure::Timeout => "timeout".to_string(),
        })
    }

    /// Execute plan steps until the plan ends, waits for a reply, or is
    /// given up. With `single`, stop after one step.
    fn run_plan(&mut self, single: bool) -> Result<bool, EngineError> {
        let mut progressed = false;
        while let Some(p) = &self.plan {
            let Some(step) = p.steps.get(p.next).cloned() else {
                self.plan = None;
                break;
            };
            match self.execute_step(&step)? {
                StepOutcome::Done { awaits_reply } => {
                    progressed = true;
                    let p = self.plan.as_mut().expect("plan is active");
                    p.next += 1;
                    if p.next >= p.steps.len() || awaits_reply {
                        self.plan = None;
                        self.awaiting_reply |= awaits_reply;
                        break;
                    }
                }
                StepOutcome::Failed => {
                    progressed |= self.replan()?;
                }
            }
            if single {
                break;
            }
        }
        Ok(progressed)
    }

    /// After a failed step: plan again from the current state, or give the
    /// intention up once the replan budget is spent.
    fn replan(&mut self) -> Result<bool, EngineError> {
        let p = self.plan.clone().expect("plan is active");
        let outcome = if p.replans >= self.config.deliberation.max_replans {
            Err("execution failed".to_string())
        } else {
            self.plan_for(&p.intention)
        };
        match outcome {
            Ok(found) if !found.steps.is_empty() => {
                self.plan_found(&p.intention, &found, true);
                self.plan = Some(ActivePlan { steps: found.steps, next: 0, replans: p.replans + 1, ..p });
                Ok(false)
            }
            Ok(_) => {
                self.plan = None;
                Ok(true)
            }
            Err(reason) => {
                self.emit(
                    EventKind::PlanFailed,
                    json!({"intention": p.intention.key(), "goal": p.intention.goal, "reason": reason}),
                );
                self.intentions.abandon(&p.intention.key());
                self.plan = None;
                Ok(true)
            }
        }
    }

    fn execute_step(&mut self, step: &GroundAction) -> Result<StepOutcome, EngineError> {
        match step.kind {
            OperatorKind::ConversationAct => self.execute_act(step),
            OperatorKind::Physical => self.execute_physical(step),
        }
    }

    fn execute_act(&mut self, step: &GroundAction) -> Result<StepOutcome, EngineError> {
        let content = step
            .sigma
            .formula("F")
            .ok_or_else(|| EngineError::BadInput(format!("step {step} has no content")))?;
        let act = ActInstance::new(
            &step.operator,
            self.self_agent.clone(),
            self.interlocutor.clone(),
            content,
            Direction::Sent,
            self.clock.now() + 1,
        );
        let snap = self.memory.snapshot();
        let check = check_preconditions(&act, self.catalog(), &snap)?;
        if !check.holds {
            self.emit(
                EventKind::ActionFailed,
                json!({"step": step.to_string(), "act_id": act.id, "reason": "preconditions", "missing": check.missing}),
            );
            return Ok(StepOutcome::Failed);
        }
        let pending = self.obligations.pending();
        let profile = appraise_sensorimotor(&act, &snap, &self.self_agent, &pending, &self.config.sec)?;
        let labels = sec_to_labels(&profile, &self.config.sec);
        self.emit(EventKind::SecProfile, json!({"direction": act.direction, "profile": profile}));
        self.emit(
            EventKind::ActionExecuted,
            json!({"step": step.to_string(), "kind": step.kind, "act": act, "act_id": act.id}),
        );

        let catalog = self.catalog().clone();
        let report = apply_sending_effects(&act, &catalog, &mut self.memory, &mut self.clock)?;
        let update = self.obligations.observe(
            &act,
            self.memory.procedural().discourse_rules(),
            &self.memory.snapshot(),
            &self.self_agent,
        );
        let (added, retracted) = facts_json(&report);
        self.emit(
            EventKind::FactsAsserted,
            json!({"source": FactSource::SendingEffect, "act_id": act.id, "added": added, "retracted": retracted,
                   "obligations": obligations_json(&update)}),
        );

        let def = self.catalog().definition(&act.act)?.clone();
        let via = match act.act.as_str() {
            "promise" => Some(AdoptedVia::PromiseAct),
            "accept" => Some(AdoptedVia::AcceptAct),
            _ => None,
        };
        if let Some(adopted_via) = via {
            self.commitment = Some(GlobalCommitment {
                id: format!("{}:global", act.id),
                goal: act.content.clone(),
                dialogue_type: "deliberation".into(),
                adopted_via,
                tick: act.tick,
            });
        }
        let expressed = step.expresses.and_then(|category| {
            let key = act.content.without_priorities().term_key();
            let record = self.memory.episodic().emotions().iter().find(|r| {
                !r.expressed
                    && r.emotion.holder == self.self_agent
                    && r.emotion.category == category
                    && r.emotion.content.without_priorities().term_key() == key
                    && r.emotion.target.as_ref().is_none_or(|t| t == &act.addressee)
            })?;
            let tick = record.tick;
            self.memory.episodic_mut().mark_expressed(tick);
            Some(tick)
        });

        self.emit(
            EventKind::UtteranceOut,
            json!({
                "act_id": act.id,
                "act": act.act,
                "speaker": act.speaker,
                "addressee": act.addressee,
                "content": act.content,
                "surface_text": render_surface(&def, &act),
                "expression_sequence": labels_json(&labels),
                "physical_action": null,
                "expressed_emotion": expressed,
            }),
        );
        Ok(StepOutcome::Done { awaits_reply: def.class == ActClass::Directive })
    }

    fn execute_physical(&mut self, step: &GroundAction) -> Result<StepOutcome, EngineError> {
        let state: std::collections::BTreeSet<Formula> =
            project(&self.memory.snapshot(), &self.self_agent, &self.interlocutor)
                .into_iter()
                .map(|f| f.without_priorities().normalize())
                .collect();
        let missing: Vec<String> =
            step.pre.iter().filter(|l| state.contains(&l.atom) != l.positive).map(|l| l.to_string()).collect();
        if !missing.is_empty() {
            self.emit(
                EventKind::ActionFailed,
                json!({"step": step.to_string(), "reason": "preconditions", "missing": missing}),
            );
            return Ok(StepOutcome::Failed);
        }
        if let Some(left) = self.faults.get_mut(&step.operator).filter(|n| **n > 0) {
            *left -= 1;
            self.emit(EventKind::ActionFailed, json!({"step": step.to_string(), "reason": "injected fault"}));
            return Ok(StepOutcome::Failed);
        }
        self.emit(EventKind::ActionExecuted, json!({"step": step.to_string(), "kind": step.kind}));
        let me = self.self_agent.term();
        let mut report = RevisionReport::default();
        for x in &step.add {
            for f in [Formula::bel(me.clone(), x.clone()), Formula::bel(me.clone(), Formula::resp(me.clone(), x.clone()))] {
                report.merge(self.memory.assert_fact(f, FactSource::Execution, &mut self.clock)?);
            }
        }
        for x in &step.del {
            let f = Formula::bel(me.clone(), x.negate()).normalize();
            report.merge(self.memory.assert_fact(f, FactSource::Execution, &mut self.clock)?);
        }
        let (added, retracted) = facts_json(&report);
        self.emit(
            EventKind::FactsAsserted,
            json!({"source": FactSource::Execution, "step": step.to_string(), "added": added, "retracted": retracted}),
        );
        let expression = labels_json(self.last_expression.as_ref().unwrap_or(&ExpressionSequence([SecLabel::Neutral; 5])));
        self.emit(
            EventKind::UtteranceOut,
            json!({
                "act_id": null,
                "act": null,
                "surface_text": null,
                "expression_sequence": expression,
                "physical_action": step.to_string(),
                "expressed_emotion": null,
            }),
        );
        Ok(StepOutcome::Done { awaits_reply: false })
    }
}
