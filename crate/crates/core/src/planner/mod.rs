//! STRIPS planning over conversation acts and physical actions.
//!
//! Planning atoms are formulas with priorities erased. Operators are schemas
//! whose parameters range over symbols or, when a parameter stands in formula
//! position, over sub-formulas of the problem. Search is uniform-cost with a
//! goal-count tie-break and a depth bound.

mod pddl;
mod search;
mod sexpr;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::appraisal::Emotion;
use crate::catalog::{ActDefinition, Catalog};
use crate::error::ValidationError;
use crate::logic::{substitute_partial, AgentId, EmotionCategory, Formula, Modality, Substitution, Term};
use crate::memory::Snapshot;

pub use pddl::{parse_domain, parse_problem, PddlError, Problem};
pub use search::{ground, plan, validate_plan, GroundAction, Plan, PlanFailure, PlannerConfig, PlanningTask};
pub use sexpr::{read_all, SExpr, SExprError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Formula,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Formula) -> Literal {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Formula) -> Literal {
        Literal { atom, positive: false }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    ConversationAct,
    Physical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub name: String,
    pub params: Vec<Param>,
    pub pre: Vec<Literal>,
    pub add: Vec<Formula>,
    pub del: Vec<Formula>,
    pub cost: u32,
    pub kind: OperatorKind,
    /// For expressive acts, the emotion category they express.
    pub expresses: Option<EmotionCategory>,
    /// Parameters fixed by [`Operator::bind`], with their values, in
    /// declaration order.
    pub bound: Vec<(String, String)>,
}

impl Operator {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let path = format!("action {}", self.name);
        let declared: BTreeSet<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        if declared.len() != self.params.len() {
            return Err(ValidationError::new(path, "duplicate parameter"));
        }
        let patterns = self.pre.iter().map(|l| ("precondition", &l.atom))
            .chain(self.add.iter().map(|a| ("effect", a)))
            .chain(self.del.iter().map(|a| ("effect", a)));
        for (field, p) in patterns {
            for v in p.variables() {
                if !declared.contains(v.as_str()) {
                    return Err(ValidationError::new(
                        path,
                        format!("{field} variable ?{v} is not a declared parameter"),
                    ));
                }
            }
        }
        if let Some(both) = self.add.iter().find(|a| self.del.contains(a)) {
            return Err(ValidationError::new(path, format!("{both} is both added and deleted")));
        }
        if self.cost == 0 {
            return Err(ValidationError::new(path, "cost must be positive"));
        }
        Ok(())
    }

    /// Fix some parameters. Bound parameters leave the parameter list and are
    /// remembered for display.
    pub fn bind(&self, sigma: &Substitution) -> Operator {
        let mut bound = self.bound.clone();
        let mut params = Vec::new();
        for p in &self.params {
            match sigma.symbol(&p.name) {
                Some(value) if sigma.get(&p.name).is_some() => bound.push((p.name.clone(), value)),
                _ => params.push(p.clone()),
            }
        }
        let sub = |f: &Formula| substitute_partial(f, sigma).normalize();
        Operator {
            name: self.name.clone(),
            params,
            pre: self.pre.iter().map(|l| Literal { atom: sub(&l.atom), positive: l.positive }).collect(),
            add: self.add.iter().map(sub).collect(),
            del: self.del.iter().map(sub).collect(),
            cost: self.cost,
            kind: self.kind,
            expresses: self.expresses,
            bound,
        }
    }

    /// Parameters that occur in formula position somewhere.
    pub fn formula_params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let all = self.pre.iter().map(|l| &l.atom).chain(self.add.iter()).chain(self.del.iter());
        for f in all {
            for node in f.subformulas() {
                if let Formula::Var(v) = node {
                    out.insert(v.clone());
                }
            }
        }
        out
    }
}

/// Goal literal recording that an emotion was expressed to `?H`.
fn expressed_pattern(category: EmotionCategory) -> Formula {
    Formula::atom_with("expressed", vec![Term::sym(category.name()), Term::var("H"), Term::var("F")])
}

/// One operator per act: its preconditions as literals (a top-level `not`
/// on a mental state becomes a negative literal), its sending effects and
/// planning-only effects as adds. Expressive acts additionally require the
/// felt emotion and add the `expressed(...)` literal.
pub fn compile_acts_to_operators<'a>(acts: impl IntoIterator<Item = &'a ActDefinition>) -> Vec<Operator> {
    let mut out = Vec::new();
    for def in acts {
        let mut pre: Vec<Literal> = def
            .preconditions
            .iter()
            .map(|p| match p {
                Formula::Not(inner) if !matches!(**inner, Formula::Atom { .. }) => {
                    Literal::neg(inner.without_priorities())
                }
                other => Literal::pos(other.without_priorities()),
            })
            .collect();
        let mut add: Vec<Formula> = Vec::new();
        for e in &def.sending_effects {
            let e = e.without_priorities();
            if let Formula::Modal { op: Modality::Bel, agent: Term::Var(a), inner, .. } = &e {
                if a == "S" {
                    add.push((**inner).clone());
                }
            }
            add.push(e);
        }
        add.extend(def.rational_effects.iter().map(Formula::without_priorities));
        if let Some(category) = def.expresses {
            let target = category.is_other_directed().then(|| Term::var("H"));
            pre.push(Literal::pos(Formula::emo(category, Term::var("S"), target, Formula::var("F"))));
            add.push(expressed_pattern(category));
        }
        let mut seen = BTreeSet::new();
        add.retain(|a| seen.insert(a.clone()));
        out.push(Operator {
            name: def.name.clone(),
            params: ["S", "H", "F"].iter().map(|n| Param { name: n.to_string(), ty: None }).collect(),
            pre,
            add,
            del: Vec::new(),
            cost: 1,
            kind: OperatorKind::ConversationAct,
            expresses: def.expresses,
            bound: Vec::new(),
        });
    }
    out
}

/// Planning atoms for the agent's current situation: every fact with
/// priorities erased, the content of each of its own beliefs, its felt
/// emotions, and `expressed(...)` for those already expressed.
pub fn project(snap: &Snapshot, self_agent: &AgentId, interlocutor: &AgentId) -> Vec<Formula> {
    let mut atoms = BTreeSet::new();
    for fact in snap.episodic().facts() {
        let f = fact.formula.without_priorities();
        if let Formula::Modal { op: Modality::Bel, agent, inner, .. } = &f {
            if agent.as_sym() == Some(self_agent.as_str()) {
                atoms.insert((**inner).clone());
            }
        }
        atoms.insert(f);
    }
    for r in snap.episodic().emotions().iter().filter(|r| &r.emotion.holder == self_agent) {
        atoms.insert(r.emotion.formula().without_priorities());
        if r.expressed {
            let to = r.emotion.target.as_ref().unwrap_or(interlocutor);
            atoms.insert(crate::deliberation::expressed_goal(r.emotion.category.name(), to, &r.emotion.content));
        }
    }
    atoms.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no act in the catalog expresses {0}")]
pub struct NoExpressingAct(pub EmotionCategory);

/// The strongest variant whose intensity threshold the emotion reaches.
pub fn select_expressive_act(e: &Emotion, catalog: &Catalog) -> Result<String, NoExpressingAct> {
    let variants = catalog.expressing(e.category);
    variants
        .iter()
        .rev()
        .find(|d| d.min_intensity <= e.intensity)
        .or(variants.first())
        .map(|d| d.name.clone())
        .ok_or(NoExpressingAct(e.category))
}

/// Make `chosen` the cheapest way to express `category`.
pub fn prefer_variant(ops: &mut [Operator], category: EmotionCategory, chosen: &str) {
    for op in ops.iter_mut().filter(|o| o.expresses == Some(category)) {
        op.cost = if op.name == chosen { 1 } else { 2 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;
    use crate::logic::{parse_formula, parse_pattern, AgentId};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap().without_priorities()
    }

    fn bind_agents(ops: &[Operator]) -> Vec<Operator> {
        let sigma = Substitution::new().with_term("S", "nao").with_term("H", "wafa");
        ops.iter().map(|o| o.bind(&sigma)).collect()
    }

    #[test]
    fn reproach_compiles_with_emotion_precondition() {
        let cat = default_catalog();
        let ops = compile_acts_to_operators(cat.acts());
        assert_eq!(ops.len(), cat.len());
        let reproach = ops.iter().find(|o| o.name == "reproach").unwrap();
        assert!(reproach.pre.contains(&Literal::pos(parse_pattern("Emo(reproach, ?S, ?H, ?F)").unwrap())));
        let bound = reproach.bind(
            &Substitution::new().with_term("S", "nao").with_term("H", "wafa").with_formula("F", f("unplugged")),
        );
        assert!(bound.add.contains(&f("expressed(reproach, wafa, unplugged)")));
        assert!(bound.params.is_empty());
        assert!(compile_acts_to_operators(std::iter::empty()).is_empty());
    }

    #[test]
    fn single_step_reproach_plan() {
        let ops = bind_agents(&compile_acts_to_operators(default_catalog().acts()));
        let task = PlanningTask {
            init: vec![
                f("Ideal(nao, not unplugged, 0.8)"),
                f("Bel(nao, Resp(wafa, unplugged))"),
                f("Bel(nao, unplugged)"),
                f("unplugged"),
                f("Resp(wafa, unplugged)"),
                f("Emo(reproach, nao, wafa, unplugged)"),
            ],
            goal: vec![Literal::pos(f("expressed(reproach, wafa, unplugged)"))],
            operators: ops,
            objects: Vec::new(),
        };
        let p = plan(&task, &PlannerConfig::default()).unwrap();
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].to_string(), "reproach(nao, wafa, unplugged)");
        assert_eq!(p.cost, 1);
    }

    #[test]
    fn ticket_plan_mixes_acts_and_actions() {
        let mut ops = bind_agents(&compile_acts_to_operators(default_catalog().acts()));
        ops.extend(
            parse_domain(include_str!("../../data/domains/travel.pddl")).unwrap(),
        );
        let task = PlanningTask {
            init: vec![f("Bel(nao, known(paris))"), f("known(paris)"), f("Bel(nao, known(lyon))"), f("known(lyon)")],
            goal: vec![Literal::pos(f("booked(paris, lyon, departure_time)"))],
            operators: ops,
            objects: vec!["departure_time".into()],
        };
        let p = plan(&task, &PlannerConfig::default()).unwrap();
        let steps: Vec<String> = p.steps.iter().map(|s| s.to_string()).collect();
        assert_eq!(steps, vec!["ask-ref(nao, wafa, departure_time)", "book-ticket(paris, lyon, departure_time)"]);
        assert_eq!(p.steps[0].kind, OperatorKind::ConversationAct);
        assert_eq!(p.steps[1].kind, OperatorKind::Physical);
        validate_plan(&task.init, &task.goal, &p.steps).unwrap();
    }

    #[test]
    fn goal_already_true() {
        let task = PlanningTask {
            init: vec![f("p")],
            goal: vec![Literal::pos(f("p"))],
            operators: Vec::new(),
            objects: Vec::new(),
        };
        let p = plan(&task, &PlannerConfig::default()).unwrap();
        assert!(p.steps.is_empty());
        assert_eq!(p.cost, 0);
    }

    #[test]
    fn gratitude_variant_follows_intensity() {
        let cat = default_catalog();
        let e = |intensity| Emotion {
            category: EmotionCategory::Gratitude,
            holder: AgentId::new("nao").unwrap(),
            target: Some(AgentId::new("wafa").unwrap()),
            content: f("tidy"),
            intensity,
        };
        assert_eq!(select_expressive_act(&e(0.9), &cat).unwrap(), "congratulate");
        assert_eq!(select_expressive_act(&e(0.4), &cat).unwrap(), "thank");
        let mut r = e(0.3);
        r.category = EmotionCategory::Reproach;
        assert_eq!(select_expressive_act(&r, &cat).unwrap(), "reproach");
        r.category = EmotionCategory::Joy;
        assert_eq!(select_expressive_act(&r, &cat), Err(NoExpressingAct(EmotionCategory::Joy)));
    }

    #[test]
    fn preferred_variant_is_planned() {
        let mut ops = bind_agents(&compile_acts_to_operators(default_catalog().acts()));
        let init = vec![
            f("Goal(nao, tidy)"),
            f("Bel(nao, Resp(wafa, tidy))"),
            f("Emo(gratitude, nao, wafa, tidy)"),
        ];
        let goal = vec![Literal::pos(f("expressed(gratitude, wafa, tidy)"))];
        for (chosen, expected) in [("congratulate", "congratulate"), ("thank", "thank")] {
            prefer_variant(&mut ops, EmotionCategory::Gratitude, chosen);
            let task = PlanningTask { init: init.clone(), goal: goal.clone(), operators: ops.clone(), objects: Vec::new() };
            let p = plan(&task, &PlannerConfig::default()).unwrap();
            assert_eq!(p.steps[0].operator, expected);
        }
    }
}
