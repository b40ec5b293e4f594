//! One-way matching of patterns against ground formulas, and substitution.

use std::collections::BTreeMap;

use super::{Formula, Priority, PrioritySlot, Term};

/// Value bound to a pattern variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Term(String),
    Formula(Formula),
    Priority(Priority),
}

impl Binding {
    /// Nullary atoms and symbols are interchangeable.
    fn same_as(&self, other: &Binding) -> bool {
        match (self, other) {
            (Binding::Term(t), Binding::Formula(Formula::Atom { pred, args }))
            | (Binding::Formula(Formula::Atom { pred, args }), Binding::Term(t)) => {
                args.is_empty() && pred == t
            }
            _ => self == other,
        }
    }
}

/// Finite map from variable names (without `?`) to bindings. Priorities
/// captured by wildcard slots are stored under `#0`, `#1`, ... in pattern
/// pre-order so that substituting back reproduces the matched formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<String, Binding>);

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn get(&self, name: &str) -> Option<&Binding> {
        self.0.get(name.trim_start_matches('?'))
    }

    /// Bind `name`, returning false if it is already bound to something else.
    pub fn bind(&mut self, name: &str, value: Binding) -> bool {
        let key = name.trim_start_matches('?');
        match self.0.get(key) {
            Some(existing) => existing.same_as(&value),
            None => {
                self.0.insert(key.to_string(), value);
                true
            }
        }
    }

    pub fn with_term(mut self, name: &str, sym: &str) -> Self {
        self.bind(name, Binding::Term(sym.to_string()));
        self
    }

    pub fn with_formula(mut self, name: &str, f: Formula) -> Self {
        self.bind(name, Binding::Formula(f));
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Binding)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Named (non-wildcard) bindings only.
    pub fn named(&self) -> Substitution {
        Substitution(
            self.0.iter().filter(|(k, _)| !k.starts_with('#')).map(|(k, v)| (k.clone(), v.clone())).collect(),
        )
    }

    /// The binding for `name` read as a symbol, if it is one.
    pub fn symbol(&self, name: &str) -> Option<String> {
        match self.get(name)? {
            Binding::Term(t) => Some(t.clone()),
            Binding::Formula(f) => Some(f.term_key()),
            Binding::Priority(_) => None,
        }
    }

    pub fn formula(&self, name: &str) -> Option<Formula> {
        match self.get(name)? {
            Binding::Formula(f) => Some(f.clone()),
            Binding::Term(t) => Some(Formula::atom(t)),
            Binding::Priority(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstitutionError {
    #[error("unbound variable ?{0}")]
    UnboundVariable(String),
    #[error("variable ?{name} is bound to a value that cannot stand in {position} position")]
    KindMismatch { name: String, position: &'static str },
}

/// Find `σ` with `σ(pattern) = ground`. Conjunctions match modulo ordering;
/// a formula variable directly under `not` also matches a non-negated
/// formula by binding to its negation.
pub fn match_pattern(pattern: &Formula, ground: &Formula) -> Option<Substitution> {
    match_node(pattern, ground, Substitution::new(), 0)
}

/// Extend an existing substitution.
pub fn match_with(pattern: &Formula, ground: &Formula, seed: Substitution) -> Option<Substitution> {
    match_node(pattern, ground, seed, 0)
}

fn count_any(f: &Formula) -> usize {
    f.subformulas()
        .into_iter()
        .filter(|n| matches!(n, Formula::Modal { priority: Some(PrioritySlot::Any), .. }))
        .count()
}

fn match_term(p: &Term, g: &Term, s: &mut Substitution) -> bool {
    match (p, g) {
        (Term::Sym(a), Term::Sym(b)) => a == b,
        (Term::Var(v), Term::Sym(b)) => s.bind(v, Binding::Term(b.clone())),
        (Term::Var(v), Term::Var(w)) => v == w,
        (Term::Sym(_), Term::Var(_)) => false,
    }
}

fn match_node(p: &Formula, g: &Formula, mut s: Substitution, any_base: usize) -> Option<Substitution> {
    match (p, g) {
        (Formula::Var(v), _) => s.bind(v, Binding::Formula(g.clone())).then_some(s),
        (Formula::Atom { pred: pp, args: pa }, Formula::Atom { pred: gp, args: ga }) => {
            if pp != gp || pa.len() != ga.len() {
                return None;
            }
            pa.iter().zip(ga).all(|(x, y)| match_term(x, y, &mut s)).then_some(s)
        }
        (Formula::Not(pi), Formula::Not(gi)) => match_node(pi, gi, s, any_base),
        (Formula::Not(pi), _) if matches!(**pi, Formula::Var(_)) => {
            let Formula::Var(v) = &**pi else { unreachable!() };
            s.bind(v, Binding::Formula(Formula::Not(Box::new(g.clone())))).then_some(s)
        }
        (
            Formula::Modal { op: po, agent: pa, inner: pi, priority: pp },
            Formula::Modal { op: go, agent: ga, inner: gi, priority: gp },
        ) => {
            if po != go || !match_term(pa, ga, &mut s) {
                return None;
            }
            let mut inner_base = any_base;
            match (pp, gp) {
                (None, None) => {}
                (Some(PrioritySlot::Any), Some(PrioritySlot::Value(v))) => {
                    if !s.bind(&format!("#{any_base}"), Binding::Priority(*v)) {
                        return None;
                    }
                    inner_base += 1;
                }
                (Some(PrioritySlot::Any), Some(_)) => inner_base += 1,
                (Some(PrioritySlot::Value(a)), Some(PrioritySlot::Value(b))) => {
                    if a != b {
                        return None;
                    }
                }
                (Some(PrioritySlot::Var(v)), Some(PrioritySlot::Value(b))) => {
                    if !s.bind(v, Binding::Priority(*b)) {
                        return None;
                    }
                }
                _ => return None,
            }
            match_node(pi, gi, s, inner_base)
        }
        (
            Formula::Emo { category: pc, holder: ph, target: pt, inner: pi },
            Formula::Emo { category: gc, holder: gh, target: gt, inner: gi },
        ) => {
            if pc != gc || !match_term(ph, gh, &mut s) {
                return None;
            }
            match (pt, gt) {
                (Some(a), Some(b)) if match_term(a, b, &mut s) => {}
                (None, None) => {}
                _ => return None,
            }
            match_node(pi, gi, s, any_base)
        }
        (Formula::And(ps), Formula::And(gs)) => {
            if ps.len() != gs.len() {
                return None;
            }
            let mut bases = Vec::with_capacity(ps.len());
            let mut acc = any_base;
            for c in ps {
                bases.push(acc);
                acc += count_any(c);
            }
            let mut used = vec![false; gs.len()];
            match_conjuncts(ps, gs, &bases, &mut used, s, 0)
        }
        _ => None,
    }
}

fn match_conjuncts(
    ps: &[Formula],
    gs: &[Formula],
    bases: &[usize],
    used: &mut [bool],
    s: Substitution,
    i: usize,
) -> Option<Substitution> {
    if i == ps.len() {
        return Some(s);
    }
    for j in 0..gs.len() {
        if used[j] {
            continue;
        }
        if let Some(next) = match_node(&ps[i], &gs[j], s.clone(), bases[i]) {
            used[j] = true;
            if let Some(done) = match_conjuncts(ps, gs, bases, used, next, i + 1) {
                return Some(done);
            }
            used[j] = false;
        }
    }
    None
}

/// Apply `σ` and produce a ground, normalized formula. Wildcard priorities
/// with no captured value default to 0.5.
pub fn substitute(pattern: &Formula, sigma: &Substitution) -> Result<Formula, SubstitutionError> {
    let mut counter = 0;
    build(pattern, sigma, &mut counter, true)
}

/// Like [`substitute`] but leaves uncaptured wildcard priorities in place,
/// yielding a pattern that still matches any priority.
pub fn instantiate(pattern: &Formula, sigma: &Substitution) -> Result<Formula, SubstitutionError> {
    let mut counter = 0;
    build(pattern, sigma, &mut counter, false)
}

/// Apply the bindings `σ` has and leave every other variable in place.
pub fn substitute_partial(pattern: &Formula, sigma: &Substitution) -> Formula {
    let mut counter = 0;
    build_with(pattern, sigma, &mut counter, false, true).expect("partial substitution leaves unbound variables")
}

fn build_term(t: &Term, sigma: &Substitution, partial: bool) -> Result<Term, SubstitutionError> {
    match t {
        Term::Sym(_) => Ok(t.clone()),
        Term::Var(v) => match sigma.get(v) {
            None if partial => Ok(t.clone()),
            None => Err(SubstitutionError::UnboundVariable(v.clone())),
            Some(Binding::Term(s)) => Ok(Term::Sym(s.clone())),
            Some(Binding::Formula(f)) => Ok(Term::Sym(f.term_key())),
            Some(Binding::Priority(_)) => {
                Err(SubstitutionError::KindMismatch { name: v.clone(), position: "term" })
            }
        },
    }
}

fn build(
    p: &Formula,
    sigma: &Substitution,
    any_counter: &mut usize,
    fill_defaults: bool,
) -> Result<Formula, SubstitutionError> {
    build_with(p, sigma, any_counter, fill_defaults, false)
}

fn build_with(
    p: &Formula,
    sigma: &Substitution,
    any_counter: &mut usize,
    fill_defaults: bool,
    partial: bool,
) -> Result<Formula, SubstitutionError> {
    Ok(match p {
        Formula::Var(v) => match sigma.get(v) {
            None if partial => p.clone(),
            None => return Err(SubstitutionError::UnboundVariable(v.clone())),
            Some(Binding::Formula(f)) => f.clone(),
            Some(Binding::Term(t)) => Formula::atom(t),
            Some(Binding::Priority(_)) => {
                return Err(SubstitutionError::KindMismatch { name: v.clone(), position: "formula" })
            }
        },
        Formula::Atom { pred, args } => Formula::Atom {
            pred: pred.clone(),
            args: args.iter().map(|t| build_term(t, sigma, partial)).collect::<Result<_, _>>()?,
        },
        Formula::Not(inner) => Formula::not(build_with(inner, sigma, any_counter, fill_defaults, partial)?),
        Formula::Modal { op, agent, inner, priority } => {
            let priority = match priority {
                None => None,
                Some(PrioritySlot::Value(v)) => Some(PrioritySlot::Value(*v)),
                Some(PrioritySlot::Any) => {
                    let key = format!("#{}", *any_counter);
                    *any_counter += 1;
                    match sigma.get(&key) {
                        Some(Binding::Priority(v)) => Some(PrioritySlot::Value(*v)),
                        _ if fill_defaults => Some(PrioritySlot::Value(Priority::DEFAULT)),
                        _ => Some(PrioritySlot::Any),
                    }
                }
                Some(PrioritySlot::Var(v)) => match sigma.get(v) {
                    Some(Binding::Priority(val)) => Some(PrioritySlot::Value(*val)),
                    None if partial => Some(PrioritySlot::Var(v.clone())),
                    None => return Err(SubstitutionError::UnboundVariable(v.clone())),
                    Some(_) => {
                        return Err(SubstitutionError::KindMismatch {
                            name: v.clone(),
                            position: "priority",
                        })
                    }
                },
            };
            Formula::Modal {
                op: *op,
                agent: build_term(agent, sigma, partial)?,
                inner: Box::new(build_with(inner, sigma, any_counter, fill_defaults, partial)?),
                priority,
            }
        }
        Formula::Emo { category, holder, target, inner } => Formula::Emo {
            category: *category,
            holder: build_term(holder, sigma, partial)?,
            target: target.as_ref().map(|t| build_term(t, sigma, partial)).transpose()?,
            inner: Box::new(build_with(inner, sigma, any_counter, fill_defaults, partial)?),
        },
        Formula::And(items) => Formula::and(
            items
                .iter()
                .map(|c| build_with(c, sigma, any_counter, fill_defaults, partial))
                .collect::<Result<_, _>>()?,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_pattern};

    fn pat(s: &str) -> Formula {
        parse_pattern(s).unwrap()
    }

    fn ground(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn responsibility_belief_binds_three_variables() {
        let s = match_pattern(&pat("Bel(?A, Resp(?B, ?F))"), &ground("Bel(nao, Resp(wafa, unplugged))"))
            .unwrap();
        assert_eq!(s.get("A"), Some(&Binding::Term("nao".into())));
        assert_eq!(s.get("B"), Some(&Binding::Term("wafa".into())));
        assert_eq!(s.get("F"), Some(&Binding::Formula(Formula::atom("unplugged"))));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn operator_mismatch_fails() {
        assert!(match_pattern(&pat("Goal(?A, ?F)"), &ground("Ideal(nao, p)")).is_none());
    }

    #[test]
    fn wildcard_priority_is_recorded() {
        let p = pat("Ideal(?A, ?F)");
        let g = ground("Ideal(nao, not unplugged, 0.8)");
        let s = match_pattern(&p, &g).unwrap();
        assert_eq!(s.get("#0"), Some(&Binding::Priority(Priority::new(0.8).unwrap())));
        assert_eq!(substitute(&p, &s).unwrap(), g);
    }

    #[test]
    fn negated_variable_absorbs_plain_content() {
        let p = pat("Goal(?I, not ?F)");
        let s = match_pattern(&p, &ground("Goal(nao, not tidy)")).unwrap();
        assert_eq!(s.formula("F"), Some(Formula::atom("tidy")));
        let s = match_pattern(&p, &ground("Goal(nao, tidy)")).unwrap();
        assert_eq!(s.formula("F"), Some(ground("not tidy")));
        assert_eq!(substitute(&p, &s).unwrap(), ground("Goal(nao, tidy)"));
    }

    #[test]
    fn repeated_variable_must_agree() {
        let p = pat("and(Goal(?I, ?F), Bel(?I, ?F))");
        assert!(match_pattern(&p, &ground("and(Goal(nao, p), Bel(nao, p))")).is_some());
        assert!(match_pattern(&p, &ground("and(Goal(nao, p), Bel(nao, q))")).is_none());
    }

    #[test]
    fn reproach_substitution() {
        let s = Substitution::new()
            .with_term("A", "nao")
            .with_term("B", "wafa")
            .with_formula("F", Formula::atom("unplugged"));
        let f = substitute(&pat("Emo(reproach, ?A, ?B, ?F)"), &s).unwrap();
        assert_eq!(f, ground("Emo(reproach, nao, wafa, unplugged)"));
    }

    #[test]
    fn ground_pattern_needs_no_bindings() {
        assert_eq!(substitute(&pat("p"), &Substitution::new()).unwrap(), ground("p"));
    }

    #[test]
    fn missing_binding_is_reported() {
        let s = Substitution::new().with_term("A", "nao");
        assert_eq!(
            substitute(&pat("Bel(?A, ?F)"), &s),
            Err(SubstitutionError::UnboundVariable("F".into()))
        );
    }

    #[test]
    fn formula_bound_in_term_position_uses_its_key() {
        let s = Substitution::new().with_formula("F", ground("fetched(ball)"));
        assert_eq!(substitute(&pat("addressed(?F)"), &s).unwrap(), ground("addressed(fetched_ball)"));
    }

    #[test]
    fn instantiate_keeps_wildcards() {
        let s = Substitution::new().with_term("S", "nao").with_formula("F", ground("tidy"));
        let f = instantiate(&pat("Goal(?S, ?F)"), &s).unwrap();
        assert!(!f.is_ground());
        assert!(match_pattern(&f, &ground("Goal(nao, tidy, 0.9)")).is_some());
    }
}
