//! Grounding and uniform-cost search.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::logic::{instantiate, match_with, substitute_partial, Binding, EmotionCategory, Formula, Substitution, Term};

use super::{Literal, Operator, OperatorKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Maximum number of steps in a plan.
    pub depth_bound: usize,
    pub deadline_ms: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { depth_bound: 12, deadline_ms: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanningTask {
    pub init: Vec<Formula>,
    pub goal: Vec<Literal>,
    pub operators: Vec<Operator>,
    /// Extra symbols that term parameters may range over.
    pub objects: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundAction {
    pub operator: String,
    pub kind: OperatorKind,
    pub expresses: Option<EmotionCategory>,
    pub args: Vec<String>,
    pub sigma: Substitution,
    pub pre: Vec<Literal>,
    pub add: Vec<Formula>,
    pub del: Vec<Formula>,
    pub cost: u32,
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.operator, self.args.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub steps: Vec<GroundAction>,
    pub cost: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PlanFailure {
    #[error("goal unreachable within the depth bound")]
    Unreachable,
    #[error("planning deadline exceeded")]
    Timeout,
}

fn canon(f: &Formula) -> Formula {
    f.without_priorities().normalize()
}

/// Index key of a formula's outermost constructor; `None` for a variable.
fn head(f: &Formula) -> Option<String> {
    match f {
        Formula::Atom { pred, args } => Some(format!("{pred}/{}", args.len())),
        Formula::Not(_) => Some("not".into()),
        Formula::Modal { op, .. } => Some(op.name().into()),
        Formula::Emo { .. } => Some("Emo".into()),
        Formula::And(_) => Some("and".into()),
        Formula::Var(_) => None,
    }
}

/// Finer index key: the head, plus agent and inner head under a modality.
fn key(f: &Formula) -> Option<String> {
    match f {
        Formula::Modal { op, agent: Term::Sym(a), inner, .. } => Some(format!("{}|{a}|{}", op.name(), head(inner)?)),
        Formula::Modal { .. } => None,
        Formula::Not(inner) => Some(format!("not|{}", head(inner)?)),
        other => head(other),
    }
}

/// Reachable atoms, indexed by head and by key.
#[derive(Default)]
struct Reach {
    all: BTreeSet<Formula>,
    by_head: HashMap<String, BTreeSet<Formula>>,
    by_key: HashMap<String, BTreeSet<Formula>>,
}

impl Reach {
    fn insert(&mut self, f: Formula) -> Option<String> {
        if !self.all.insert(f.clone()) {
            return None;
        }
        if let Some(k) = key(&f) {
            self.by_key.entry(k).or_default().insert(f.clone());
        }
        let h = head(&f).unwrap_or_default();
        self.by_head.entry(h.clone()).or_default().insert(f);
        Some(h)
    }

    /// Atoms that may match `pattern`, narrowed by what `sigma` already binds.
    fn matching<'a>(&'a self, pattern: &Formula, sigma: &Substitution) -> Box<dyn Iterator<Item = &'a Formula> + 'a> {
        let bound = substitute_partial(pattern, sigma);
        if bound.is_ground() {
            return Box::new(self.all.get(&canon(&bound)).into_iter());
        }
        if let Some(k) = key(&bound) {
            return Box::new(self.by_key.get(&k).into_iter().flatten());
        }
        match head(&bound) {
            None => Box::new(self.all.iter()),
            Some(h) => Box::new(self.by_head.get(&h).into_iter().flatten()),
        }
    }
}

/// Extend `sigma` so that every pattern matches some atom of `reach`.
fn join(patterns: &[Formula], reach: &Reach, sigma: Substitution, out: &mut Vec<Substitution>) {
    let Some((first, rest)) = patterns.split_first() else {
        out.push(sigma);
        return;
    };
    for atom in reach.matching(first, &sigma) {
        if let Some(s) = match_with(first, atom, sigma.clone()) {
            join(rest, reach, s.named(), out);
        }
    }
}

fn binding_text(b: &Binding) -> String {
    match b {
        Binding::Term(t) => t.clone(),
        Binding::Formula(f) => f.to_string(),
        Binding::Priority(p) => p.value().to_string(),
    }
}

fn instantiate_op(op: &Operator, sigma: &Substitution) -> Option<GroundAction> {
    let sub = |f: &Formula| instantiate(f, sigma).ok().map(|g| canon(&g));
    let pre = op
        .pre
        .iter()
        .map(|l| sub(&l.atom).map(|atom| Literal { atom, positive: l.positive }))
        .collect::<Option<Vec<_>>>()?;
    let add = op.add.iter().map(sub).collect::<Option<Vec<_>>>()?;
    let del = op.del.iter().map(sub).collect::<Option<Vec<_>>>()?;
    let pos: BTreeSet<&Formula> = pre.iter().filter(|l| l.positive).map(|l| &l.atom).collect();
    if pre.iter().any(|l| !l.positive && pos.contains(&l.atom)) {
        return None;
    }
    let mut full = sigma.clone();
    let mut args = Vec::new();
    for (name, value) in &op.bound {
        full = full.with_term(name, value);
        args.push(value.clone());
    }
    for p in &op.params {
        args.push(binding_text(sigma.get(&p.name)?));
    }
    Some(GroundAction {
        operator: op.name.clone(),
        kind: op.kind,
        expresses: op.expresses,
        args,
        sigma: full,
        pre,
        add,
        del,
        cost: op.cost,
    })
}

/// All ground actions reachable in the delete relaxation of the task,
/// sorted by name and arguments. Parameters in formula position only range
/// over sub-formulas of the initial state and the goal, which keeps nested
/// belief effects from growing without bound.
pub fn ground(task: &PlanningTask) -> Vec<GroundAction> {
    let mut reach = Reach::default();
    for f in &task.init {
        reach.insert(canon(f));
    }
    let goal_atoms: Vec<Formula> = task.goal.iter().map(|l| canon(&l.atom)).collect();

    let mut objects: BTreeSet<String> = task.objects.iter().cloned().collect();
    let mut candidates: BTreeSet<Formula> = BTreeSet::new();
    for f in reach.all.iter().chain(goal_atoms.iter()) {
        objects.extend(f.symbols());
        candidates.extend(f.subformulas().into_iter().filter(|s| !matches!(s, Formula::And(_))).cloned());
    }
    // a symbol that is only the slug of a compound candidate is not a formula of its own
    let slugs: BTreeSet<String> =
        candidates.iter().filter(|c| !matches!(c, Formula::Atom { args, .. } if args.is_empty())).map(Formula::term_key).collect();
    candidates.extend(objects.iter().filter(|o| !slugs.contains(*o)).map(|o| Formula::atom(o)));

    let positives: Vec<Vec<Formula>> = task
        .operators
        .iter()
        .map(|op| op.pre.iter().filter(|l| l.positive).map(|l| l.atom.clone()).collect())
        .collect();
    let mut tried: HashSet<(usize, Vec<String>)> = HashSet::new();
    let mut seen: BTreeMap<String, GroundAction> = BTreeMap::new();
    // heads of atoms added in the previous round; `None` means the first round
    let mut fresh: Option<BTreeSet<String>> = None;
    loop {
        let mut added: BTreeSet<String> = BTreeSet::new();
        for (i, op) in task.operators.iter().enumerate() {
            if let Some(fresh) = &fresh {
                let affected = positives[i].iter().any(|p| head(p).is_none_or(|h| fresh.contains(&h)));
                if !affected {
                    continue;
                }
            }
            let formula_params = op.formula_params();
            let mut partial = Vec::new();
            join(&positives[i], &reach, Substitution::new(), &mut partial);
            for sigma in partial {
                let closed = formula_params.iter().all(|n| match sigma.get(n) {
                    Some(Binding::Formula(f)) => candidates.contains(f),
                    Some(Binding::Term(t)) => candidates.contains(&Formula::atom(t)),
                    _ => true,
                });
                if !closed {
                    continue;
                }
                let free: Vec<&str> =
                    op.params.iter().map(|p| p.name.as_str()).filter(|n| sigma.get(n).is_none()).collect();
                let mut sigmas = vec![sigma];
                for name in free {
                    let mut next = Vec::new();
                    for s in &sigmas {
                        if formula_params.contains(name) {
                            next.extend(candidates.iter().map(|c| s.clone().with_formula(name, c.clone())));
                        } else {
                            next.extend(objects.iter().map(|o| s.clone().with_term(name, o)));
                        }
                    }
                    sigmas = next;
                }
                for s in sigmas {
                    let key: Vec<String> =
                        op.params.iter().map(|p| s.get(&p.name).map(binding_text).unwrap_or_default()).collect();
                    if !tried.insert((i, key)) {
                        continue;
                    }
                    let Some(action) = instantiate_op(op, &s) else { continue };
                    for a in &action.add {
                        added.extend(reach.insert(a.clone()));
                    }
                    seen.entry(action.to_string()).or_insert(action);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        fresh = Some(added);
    }
    seen.into_values().collect()
}

/// Keep only actions that can affect an atom the goal depends on.
fn relevant(actions: Vec<GroundAction>, goal: &[Literal]) -> Vec<GroundAction> {
    let mut atoms: BTreeSet<Formula> = goal.iter().map(|l| l.atom.clone()).collect();
    let mut keep = vec![false; actions.len()];
    loop {
        let mut changed = false;
        for (i, a) in actions.iter().enumerate() {
            if keep[i] || !a.add.iter().chain(a.del.iter()).any(|x| atoms.contains(x)) {
                continue;
            }
            keep[i] = true;
            changed = true;
            atoms.extend(a.pre.iter().map(|l| l.atom.clone()));
        }
        if !changed {
            break;
        }
    }
    actions.into_iter().zip(keep).filter_map(|(a, k)| k.then_some(a)).collect()
}

type State = Vec<u64>;

struct Compiled {
    pre_pos: Vec<usize>,
    pre_neg: Vec<usize>,
    add: Vec<usize>,
    del: Vec<usize>,
    cost: u32,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<Formula, usize>,
}

impl Interner {
    fn id(&mut self, f: &Formula) -> usize {
        let next = self.ids.len();
        *self.ids.entry(f.clone()).or_insert(next)
    }
}

fn test(s: &State, i: usize) -> bool {
    s.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
}

fn set(s: &mut State, i: usize, on: bool) {
    if on {
        s[i / 64] |= 1 << (i % 64);
    } else {
        s[i / 64] &= !(1 << (i % 64));
    }
}

struct Node {
    state: State,
    parent: Option<usize>,
    action: Option<usize>,
    g: u32,
    depth: usize,
}

pub fn plan(task: &PlanningTask, config: &PlannerConfig) -> Result<Plan, PlanFailure> {
    let started = Instant::now();
    let deadline = Duration::from_millis(config.deadline_ms);
    let goal: Vec<Literal> = task.goal.iter().map(|l| Literal { atom: canon(&l.atom), positive: l.positive }).collect();
    let actions = relevant(ground(task), &goal);

    let mut interner = Interner::default();
    let init_ids: Vec<usize> = task.init.iter().map(|f| interner.id(&canon(f))).collect();
    let goal_ids: Vec<(usize, bool)> = goal.iter().map(|l| (interner.id(&l.atom), l.positive)).collect();
    let compiled: Vec<Compiled> = actions
        .iter()
        .map(|a| Compiled {
            pre_pos: a.pre.iter().filter(|l| l.positive).map(|l| interner.id(&l.atom)).collect(),
            pre_neg: a.pre.iter().filter(|l| !l.positive).map(|l| interner.id(&l.atom)).collect(),
            add: a.add.iter().map(|f| interner.id(f)).collect(),
            del: a.del.iter().map(|f| interner.id(f)).collect(),
            cost: a.cost,
        })
        .collect();
    let words = interner.ids.len().div_ceil(64).max(1);
    let mut init = vec![0u64; words];
    for i in init_ids {
        set(&mut init, i, true);
    }
    let unsatisfied = |s: &State| goal_ids.iter().filter(|(i, pos)| test(s, *i) != *pos).count();

    let mut nodes = vec![Node { state: init, parent: None, action: None, g: 0, depth: 0 }];
    let mut open = BinaryHeap::new();
    open.push(Reverse((0u32, unsatisfied(&nodes[0].state), 0usize)));
    let mut expanded: HashMap<State, usize> = HashMap::new();
    let mut pops = 0usize;

    while let Some(Reverse((_, h, idx))) = open.pop() {
        pops += 1;
        if pops.is_multiple_of(256) && started.elapsed() > deadline {
            return Err(PlanFailure::Timeout);
        }
        if h == 0 {
            return Ok(extract(&nodes, idx, &actions));
        }
        let depth = nodes[idx].depth;
        if depth >= config.depth_bound {
            continue;
        }
        match expanded.get(&nodes[idx].state) {
            Some(&d) if d <= depth => continue,
            _ => {
                expanded.insert(nodes[idx].state.clone(), depth);
            }
        }
        for (ai, c) in compiled.iter().enumerate() {
            let s = &nodes[idx].state;
            if !c.pre_pos.iter().all(|&i| test(s, i)) || c.pre_neg.iter().any(|&i| test(s, i)) {
                continue;
            }
            let mut next = s.clone();
            for &i in &c.del {
                set(&mut next, i, false);
            }
            for &i in &c.add {
                set(&mut next, i, true);
            }
            if matches!(expanded.get(&next), Some(&d) if d <= depth + 1) {
                continue;
            }
            let g = nodes[idx].g + c.cost;
            let h = unsatisfied(&next);
            nodes.push(Node { state: next, parent: Some(idx), action: Some(ai), g, depth: depth + 1 });
            open.push(Reverse((g, h, nodes.len() - 1)));
        }
    }
    Err(PlanFailure::Unreachable)
}

fn extract(nodes: &[Node], mut idx: usize, actions: &[GroundAction]) -> Plan {
    let cost = nodes[idx].g;
    let mut steps = Vec::new();
    while let (Some(parent), Some(a)) = (nodes[idx].parent, nodes[idx].action) {
        steps.push(actions[a].clone());
        idx = parent;
    }
    steps.reverse();
    Plan { steps, cost }
}

/// Replay `steps` from `init` and check every precondition and the goal.
pub fn validate_plan(init: &[Formula], goal: &[Literal], steps: &[GroundAction]) -> Result<(), String> {
    let mut state: BTreeSet<Formula> = init.iter().map(canon).collect();
    for (n, step) in steps.iter().enumerate() {
        for l in &step.pre {
            if state.contains(&canon(&l.atom)) != l.positive {
                return Err(format!("step {} ({step}): precondition {l} does not hold", n + 1));
            }
        }
        for d in &step.del {
            state.remove(&canon(d));
        }
        for a in &step.add {
            state.insert(canon(a));
        }
    }
    for l in goal {
        if state.contains(&canon(&l.atom)) != l.positive {
            return Err(format!("goal literal {l} does not hold after the plan"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Term;
    use crate::planner::parse_domain;

    fn atom(s: &str) -> Formula {
        Formula::atom(s)
    }

    fn sym_task(domain: &str, init: &[&str], goal: &[&str]) -> PlanningTask {
        PlanningTask {
            init: init.iter().map(|s| atom(s)).collect(),
            goal: goal.iter().map(|s| Literal::pos(atom(s))).collect(),
            operators: parse_domain(domain).unwrap(),
            objects: Vec::new(),
        }
    }

    #[test]
    fn prefers_cheaper_longer_plan() {
        let d = "(define (domain d)
          (:action direct :parameters () :precondition (a) :effect (g) :cost 5)
          (:action step1 :parameters () :precondition (a) :effect (b))
          (:action step2 :parameters () :precondition (b) :effect (g)))";
        let p = plan(&sym_task(d, &["a"], &["g"]), &PlannerConfig::default()).unwrap();
        assert_eq!(p.cost, 2);
        assert_eq!(p.steps.iter().map(|s| s.operator.as_str()).collect::<Vec<_>>(), vec!["step1", "step2"]);
    }

    #[test]
    fn depth_bound_makes_long_plans_unreachable() {
        let d = "(define (domain d)
          (:action s1 :parameters () :precondition (a) :effect (b))
          (:action s2 :parameters () :precondition (b) :effect (c))
          (:action s3 :parameters () :precondition (c) :effect (g)))";
        let task = sym_task(d, &["a"], &["g"]);
        let cfg = PlannerConfig { depth_bound: 2, ..PlannerConfig::default() };
        assert_eq!(plan(&task, &cfg), Err(PlanFailure::Unreachable));
        assert_eq!(plan(&task, &PlannerConfig::default()).unwrap().steps.len(), 3);
    }

    #[test]
    fn negative_preconditions_and_goals() {
        let d = "(define (domain d)
          (:action open :parameters () :precondition (not (open)) :effect (open))
          (:action close :parameters () :precondition (open) :effect (not (open))))";
        let mut task = sym_task(d, &["open"], &[]);
        task.goal = vec![Literal::neg(atom("open"))];
        let p = plan(&task, &PlannerConfig::default()).unwrap();
        assert_eq!(p.steps[0].operator, "close");
        validate_plan(&task.init, &task.goal, &p.steps).unwrap();
    }

    #[test]
    fn parameters_ground_over_objects() {
        let d = "(define (domain d)
          (:action move :parameters (?from ?to) :precondition (and (at ?from) (road ?from ?to))
            :effect (and (at ?to) (not (at ?from)))))";
        let mut task = sym_task(d, &[], &[]);
        let p = |s: &str| crate::logic::parse_formula(s).unwrap();
        task.init = vec![p("at(a)"), p("road(a, b)"), p("road(b, c)")];
        task.goal = vec![Literal::pos(p("at(c)"))];
        let plan = plan(&task, &PlannerConfig::default()).unwrap();
        let shown: Vec<String> = plan.steps.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, vec!["move(a, b)", "move(b, c)"]);
    }

    #[test]
    fn validator_rejects_inapplicable_step() {
        let d = "(define (domain d) (:action s :parameters () :precondition (b) :effect (g)))";
        let task = sym_task(d, &["b"], &["g"]);
        let steps = plan(&task, &PlannerConfig::default()).unwrap().steps;
        assert!(validate_plan(&[atom("a")], &task.goal, &steps).is_err());
    }

    #[test]
    fn timeout_is_reported() {
        let mut d = String::from("(define (domain d)");
        for i in 0..16 {
            d.push_str(&format!("(:action t{i} :parameters () :precondition () :effect (and (b{i}) (not (c{i}))))"));
            d.push_str(&format!("(:action u{i} :parameters () :precondition () :effect (and (c{i}) (not (b{i}))))"));
        }
        let all: String = (0..16).map(|i| format!("(b{i})")).collect();
        d.push_str(&format!("(:action win :parameters () :precondition (and {all} (c0)) :effect (g)))"));
        let task = sym_task(&d, &[], &["g"]);
        let cfg = PlannerConfig { depth_bound: 30, deadline_ms: 0 };
        assert_eq!(plan(&task, &cfg), Err(PlanFailure::Timeout));
    }

    #[test]
    fn term_binding_renders_as_symbol() {
        let op = parse_domain("(define (domain d) (:action k :parameters (?x) :precondition () :effect (known ?x)))")
            .unwrap();
        let task = PlanningTask {
            init: vec![],
            goal: vec![Literal::pos(Formula::atom_with("known", vec![Term::sym("t")]))],
            operators: op,
            objects: vec!["t".into()],
        };
        let p = plan(&task, &PlannerConfig::default()).unwrap();
        assert_eq!(p.steps[0].to_string(), "k(t)");
    }
}
