//! BIGRE formulas: beliefs, ideals, goals, responsibilities and emotions.
//!
//! A [`Formula`] is either ground (a fact the agent can hold) or a pattern
//! containing variables (`?F` in formula position, `?A` in agent or term
//! position, `?p` in priority position). Patterns and ground formulas share
//! one type; [`Formula::is_ground`] tells them apart.
//!
//! All constructors normalize: double negation collapses, conjunctions are
//! flattened, deduplicated and sorted by canonical rendering. Structural
//! equality is therefore canonical equality.

mod parse;
mod render;
mod unify;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use parse::{parse_formula, parse_pattern, SyntaxError};
pub use unify::{
    instantiate, match_pattern, match_with, substitute, substitute_partial, Binding, Substitution,
    SubstitutionError,
};

/// Name of an agent taking part in a dialogue (`nao`, `wafa`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: &str) -> Result<Self, InvalidAgentId> {
        let lower = name.to_ascii_lowercase();
        if is_agent_name(&lower) {
            Ok(AgentId(lower))
        } else {
            Err(InvalidAgentId(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn term(&self) -> Term {
        Term::Sym(self.0.clone())
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for AgentId {
    type Err = InvalidAgentId;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentId::new(s)
    }
}

impl Serialize for AgentId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for AgentId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        AgentId::new(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid agent name `{0}`: expected [a-z][a-z0-9_]*")]
pub struct InvalidAgentId(pub String);

pub fn is_agent_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

/// The twelve emotions derivable from beliefs, goals, ideals and
/// responsibility. The first four are basic, the last eight complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmotionCategory {
    Joy,
    Sadness,
    Approval,
    Disapproval,
    Rejoicing,
    Regret,
    MoralSatisfaction,
    Guilt,
    Gratitude,
    Disappointment,
    Admiration,
    Reproach,
}

impl EmotionCategory {
    pub const ALL: [EmotionCategory; 12] = [
        EmotionCategory::Joy,
        EmotionCategory::Sadness,
        EmotionCategory::Approval,
        EmotionCategory::Disapproval,
        EmotionCategory::Rejoicing,
        EmotionCategory::Regret,
        EmotionCategory::MoralSatisfaction,
        EmotionCategory::Guilt,
        EmotionCategory::Gratitude,
        EmotionCategory::Disappointment,
        EmotionCategory::Admiration,
        EmotionCategory::Reproach,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmotionCategory::Joy => "joy",
            EmotionCategory::Sadness => "sadness",
            EmotionCategory::Approval => "approval",
            EmotionCategory::Disapproval => "disapproval",
            EmotionCategory::Rejoicing => "rejoicing",
            EmotionCategory::Regret => "regret",
            EmotionCategory::MoralSatisfaction => "moral_satisfaction",
            EmotionCategory::Guilt => "guilt",
            EmotionCategory::Gratitude => "gratitude",
            EmotionCategory::Disappointment => "disappointment",
            EmotionCategory::Admiration => "admiration",
            EmotionCategory::Reproach => "reproach",
        }
    }

    pub fn is_basic(self) -> bool {
        matches!(
            self,
            EmotionCategory::Joy
                | EmotionCategory::Sadness
                | EmotionCategory::Approval
                | EmotionCategory::Disapproval
        )
    }

    /// Emotions about another agent's responsibility carry a target.
    pub fn is_other_directed(self) -> bool {
        matches!(
            self,
            EmotionCategory::Gratitude
                | EmotionCategory::Disappointment
                | EmotionCategory::Admiration
                | EmotionCategory::Reproach
        )
    }

    /// The basic emotion sharing this emotion's goal/ideal row.
    pub fn basic_counterpart(self) -> EmotionCategory {
        match self {
            EmotionCategory::Rejoicing | EmotionCategory::Gratitude => EmotionCategory::Joy,
            EmotionCategory::Regret | EmotionCategory::Disappointment => EmotionCategory::Sadness,
            EmotionCategory::MoralSatisfaction | EmotionCategory::Admiration => {
                EmotionCategory::Approval
            }
            EmotionCategory::Guilt | EmotionCategory::Reproach => EmotionCategory::Disapproval,
            basic => basic,
        }
    }
}

impl fmt::Display for EmotionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionCategory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .map(|c| c.to_ascii_lowercase())
            .collect();
        let folded = if folded == "desappointment" { "disappointment".to_string() } else { folded };
        EmotionCategory::ALL
            .iter()
            .copied()
            .find(|c| c.name().replace('_', "") == folded)
            .ok_or_else(|| format!("unknown emotion category `{s}`"))
    }
}

impl Serialize for EmotionCategory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for EmotionCategory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// A goal or ideal priority in `[0, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct Priority(f64);

impl Priority {
    pub const DEFAULT: Priority = Priority(0.5);

    pub fn new(value: f64) -> Option<Priority> {
        if (0.0..=1.0).contains(&value) {
            // collapse -0.0
            Some(Priority(value + 0.0))
        } else {
            None
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Priority {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Priority {}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Priority {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Hash for Priority {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Priority position of a `Goal` or `Ideal` node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrioritySlot {
    Value(Priority),
    /// Pattern without an explicit priority: matches any value.
    Any,
    Var(String),
}

/// Agent or atom argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Sym(String),
    Var(String),
}

impl Term {
    pub fn sym(name: &str) -> Term {
        Term::Sym(name.to_ascii_lowercase())
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.trim_start_matches('?').to_string())
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Term::Sym(s) => Some(s),
            Term::Var(_) => None,
        }
    }
}

/// Mental-state operators that wrap an inner formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    Bel,
    Goal,
    Ideal,
    Resp,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Bel => "Bel",
            Modality::Goal => "Goal",
            Modality::Ideal => "Ideal",
            Modality::Resp => "Resp",
        }
    }

    pub fn has_priority(self) -> bool {
        matches!(self, Modality::Goal | Modality::Ideal)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom {
        pred: String,
        args: Vec<Term>,
    },
    Not(Box<Formula>),
    /// `Bel`, `Goal`, `Ideal` or `Resp`. Only `Goal` and `Ideal` carry a
    /// priority; for the others `priority` is `None`.
    Modal {
        op: Modality,
        agent: Term,
        inner: Box<Formula>,
        priority: Option<PrioritySlot>,
    },
    Emo {
        category: EmotionCategory,
        holder: Term,
        target: Option<Term>,
        inner: Box<Formula>,
    },
    And(Vec<Formula>),
    /// Formula variable, only in patterns.
    Var(String),
}

impl Formula {
    pub fn atom(pred: &str) -> Formula {
        Formula::Atom { pred: pred.to_ascii_lowercase(), args: Vec::new() }
    }

    pub fn atom_with(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom { pred: pred.to_ascii_lowercase(), args }
    }

    pub fn var(name: &str) -> Formula {
        Formula::Var(name.trim_start_matches('?').to_string())
    }

    /// Negation with double-negation collapse.
    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Formula) -> Formula {
        match inner {
            Formula::Not(f) => *f,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// Flattened, deduplicated, canonically ordered conjunction. A single
    /// remaining conjunct is returned as is.
    pub fn and(conjuncts: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(conjuncts.len());
        for c in conjuncts {
            match c {
                Formula::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        let mut keyed: Vec<(String, Formula)> =
            flat.into_iter().map(|f| (f.to_string(), f)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        let mut items: Vec<Formula> = keyed.into_iter().map(|(_, f)| f).collect();
        if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::And(items)
        }
    }

    pub fn bel(agent: Term, inner: Formula) -> Formula {
        Formula::Modal { op: Modality::Bel, agent, inner: Box::new(inner), priority: None }
    }

    pub fn resp(agent: Term, inner: Formula) -> Formula {
        Formula::Modal { op: Modality::Resp, agent, inner: Box::new(inner), priority: None }
    }

    pub fn goal(agent: Term, inner: Formula, priority: PrioritySlot) -> Formula {
        Formula::Modal { op: Modality::Goal, agent, inner: Box::new(inner), priority: Some(priority) }
    }

    pub fn ideal(agent: Term, inner: Formula, priority: PrioritySlot) -> Formula {
        Formula::Modal {
            op: Modality::Ideal,
            agent,
            inner: Box::new(inner),
            priority: Some(priority),
        }
    }

    pub fn emo(
        category: EmotionCategory,
        holder: Term,
        target: Option<Term>,
        inner: Formula,
    ) -> Formula {
        Formula::Emo { category, holder, target, inner: Box::new(inner) }
    }

    /// Logical complement at the content level. Modal nodes are wrapped in
    /// `not` without any duality rewriting.
    pub fn negate(&self) -> Formula {
        Formula::not(self.clone())
    }

    /// Re-establish every normalization invariant bottom-up.
    pub fn normalize(self) -> Formula {
        match self {
            Formula::Not(inner) => Formula::not(inner.normalize()),
            Formula::And(items) => Formula::and(items.into_iter().map(Formula::normalize).collect()),
            Formula::Modal { op, agent, inner, priority } => {
                Formula::Modal { op, agent, inner: Box::new(inner.normalize()), priority }
            }
            Formula::Emo { category, holder, target, inner } => {
                Formula::Emo { category, holder, target, inner: Box::new(inner.normalize()) }
            }
            leaf => leaf,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Formula::Atom { args, .. } => args.iter().all(|t| matches!(t, Term::Sym(_))),
            Formula::Not(inner) => inner.is_ground(),
            Formula::Modal { agent, inner, priority, .. } => {
                matches!(agent, Term::Sym(_))
                    && !matches!(priority, Some(PrioritySlot::Any) | Some(PrioritySlot::Var(_)))
                    && inner.is_ground()
            }
            Formula::Emo { holder, target, inner, .. } => {
                matches!(holder, Term::Sym(_))
                    && target.as_ref().is_none_or(|t| matches!(t, Term::Sym(_)))
                    && inner.is_ground()
            }
            Formula::And(items) => items.iter().all(Formula::is_ground),
            Formula::Var(_) => false,
        }
    }

    /// Nesting depth; atoms and variables have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom { .. } | Formula::Var(_) => 1,
            Formula::Not(inner) => inner.depth(),
            Formula::Modal { inner, .. } | Formula::Emo { inner, .. } => 1 + inner.depth(),
            Formula::And(items) => 1 + items.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    /// Priority of a `Goal`/`Ideal` node, if concrete.
    pub fn priority(&self) -> Option<Priority> {
        match self {
            Formula::Modal { priority: Some(PrioritySlot::Value(p)), .. } => Some(*p),
            _ => None,
        }
    }

    /// Copy with every priority slot replaced by [`PrioritySlot::Any`].
    pub fn without_priorities(&self) -> Formula {
        match self {
            Formula::Modal { op, agent, inner, priority } => Formula::Modal {
                op: *op,
                agent: agent.clone(),
                inner: Box::new(inner.without_priorities()),
                priority: priority.as_ref().map(|_| PrioritySlot::Any),
            },
            Formula::Not(inner) => Formula::Not(Box::new(inner.without_priorities())),
            Formula::Emo { category, holder, target, inner } => Formula::Emo {
                category: *category,
                holder: holder.clone(),
                target: target.clone(),
                inner: Box::new(inner.without_priorities()),
            },
            Formula::And(items) => {
                Formula::and(items.iter().map(Formula::without_priorities).collect())
            }
            leaf => leaf.clone(),
        }
    }

    /// The formula as an identifier usable in atom-argument position:
    /// a nullary atom yields its name, anything else a slug of its rendering.
    pub fn term_key(&self) -> String {
        if let Formula::Atom { pred, args } = self {
            if args.is_empty() {
                return pred.clone();
            }
        }
        let mut out = String::new();
        let mut pending_sep = false;
        for c in self.to_string().chars() {
            if c.is_ascii_alphanumeric() {
                if pending_sep && !out.is_empty() {
                    out.push('_');
                }
                pending_sep = false;
                out.push(c.to_ascii_lowercase());
            } else {
                pending_sep = true;
            }
        }
        out
    }

    /// All symbols occurring in term or agent position.
    pub fn symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut Vec<String>) {
        let mut push = |t: &Term| {
            if let Term::Sym(s) = t {
                out.push(s.clone());
            }
        };
        match self {
            Formula::Atom { pred, args } => {
                if args.is_empty() {
                    out.push(pred.clone());
                }
                for a in args {
                    if let Term::Sym(s) = a {
                        out.push(s.clone());
                    }
                }
            }
            Formula::Not(inner) => inner.collect_symbols(out),
            Formula::Modal { agent, inner, .. } => {
                push(agent);
                inner.collect_symbols(out);
            }
            Formula::Emo { holder, target, inner, .. } => {
                push(holder);
                if let Some(t) = target {
                    push(t);
                }
                inner.collect_symbols(out);
            }
            Formula::And(items) => items.iter().for_each(|f| f.collect_symbols(out)),
            Formula::Var(_) => {}
        }
    }

    /// Every sub-formula, including `self`, in pre-order.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            out.push(f);
            match f {
                Formula::Not(inner) | Formula::Modal { inner, .. } | Formula::Emo { inner, .. } => {
                    stack.push(inner)
                }
                Formula::And(items) => stack.extend(items.iter().rev()),
                _ => {}
            }
        }
        out
    }

    /// Names of all variables, without the leading `?`.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        let term_var = |t: &Term, out: &mut Vec<String>| {
            if let Term::Var(v) = t {
                out.push(v.clone());
            }
        };
        for f in self.subformulas() {
            match f {
                Formula::Atom { args, .. } => args.iter().for_each(|t| term_var(t, &mut out)),
                Formula::Modal { agent, priority, .. } => {
                    term_var(agent, &mut out);
                    if let Some(PrioritySlot::Var(v)) = priority {
                        out.push(v.clone());
                    }
                }
                Formula::Emo { holder, target, .. } => {
                    term_var(holder, &mut out);
                    if let Some(t) = target {
                        term_var(t, &mut out);
                    }
                }
                Formula::Var(v) => out.push(v.clone()),
                _ => {}
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Walk the tree and report the first violated normalization invariant.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Formula::Atom { pred, args } => {
                if !is_identifier(pred) {
                    return Err(format!("bad predicate `{pred}`"));
                }
                for a in args {
                    if let Term::Sym(s) = a {
                        if !is_identifier(s) {
                            return Err(format!("bad argument `{s}`"));
                        }
                    }
                }
                Ok(())
            }
            Formula::Not(inner) => {
                if matches!(**inner, Formula::Not(_)) {
                    return Err("double negation stored".into());
                }
                inner.validate()
            }
            Formula::Modal { op, agent, inner, priority } => {
                validate_agent(agent)?;
                match (op.has_priority(), priority) {
                    (true, None) => return Err(format!("{} without priority slot", op.name())),
                    (false, Some(_)) => return Err(format!("{} carries a priority", op.name())),
                    (_, Some(PrioritySlot::Value(p))) if !(0.0..=1.0).contains(&p.value()) => {
                        return Err(format!("priority {p} out of range"))
                    }
                    _ => {}
                }
                inner.validate()
            }
            Formula::Emo { category, holder, target, inner } => {
                validate_agent(holder)?;
                if let Some(t) = target {
                    validate_agent(t)?;
                }
                if category.is_other_directed() != target.is_some() {
                    return Err(format!("emotion {category} has wrong target arity"));
                }
                inner.validate()
            }
            Formula::And(items) => {
                if items.len() < 2 {
                    return Err("conjunction with fewer than two conjuncts".into());
                }
                let rendered: Vec<String> = items.iter().map(|f| f.to_string()).collect();
                if rendered.windows(2).any(|w| w[0] >= w[1]) {
                    return Err("conjuncts not sorted or duplicated".into());
                }
                for f in items {
                    if matches!(f, Formula::And(_)) {
                        return Err("nested conjunction".into());
                    }
                    f.validate()?;
                }
                Ok(())
            }
            Formula::Var(_) => Ok(()),
        }
    }
}

fn validate_agent(t: &Term) -> Result<(), String> {
    match t {
        Term::Sym(s) if !is_agent_name(s) => Err(format!("bad agent name `{s}`")),
        _ => Ok(()),
    }
}

impl FromStr for Formula {
    type Err = SyntaxError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_pattern(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        parse_pattern(&raw).map_err(serde::de::Error::custom)
    }
}
