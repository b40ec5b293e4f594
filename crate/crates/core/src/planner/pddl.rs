//! Domain and problem files in a STRIPS subset of PDDL: optional types,
//! conjunctive positive and negative preconditions, add and delete effects,
//! and an optional `:cost` per action.

use crate::error::ValidationError;
use crate::logic::{is_identifier, Formula, Term};

use super::sexpr::{read_all, SExpr, SExprError};
use super::{Literal, Operator, OperatorKind, Param};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

impl From<SExprError> for PddlError {
    fn from(e: SExprError) -> Self {
        PddlError::Syntax(e.to_string())
    }
}

/// A planning problem: objects, initial atoms and goal literals.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<String>,
    pub init: Vec<Formula>,
    pub goal: Vec<Literal>,
}

fn syntax(msg: impl Into<String>) -> PddlError {
    PddlError::Syntax(msg.into())
}

/// The body of a single `(define ...)` form, or nothing for empty input.
fn define_body(text: &str) -> Result<Option<Vec<SExpr>>, PddlError> {
    let forms = read_all(text)?;
    match forms.as_slice() {
        [] => Ok(None),
        [form] if form.head().as_deref() == Some("define") => {
            Ok(Some(form.as_list().unwrap()[1..].to_vec()))
        }
        _ => Err(syntax("expected a single (define ...) form")),
    }
}

fn ident(s: &SExpr, what: &str) -> Result<String, PddlError> {
    let raw = s.as_atom().ok_or_else(|| syntax(format!("expected {what}, found {s}")))?;
    let lower = raw.to_ascii_lowercase();
    if !is_identifier(&lower) {
        return Err(syntax(format!("`{raw}` is not a valid {what}")));
    }
    Ok(lower)
}

fn term(s: &SExpr) -> Result<Term, PddlError> {
    let raw = s.as_atom().ok_or_else(|| syntax(format!("expected a term, found {s}")))?;
    match raw.strip_prefix('?') {
        Some(v) if !v.is_empty() => Ok(Term::var(v)),
        Some(_) => Err(syntax("empty variable name")),
        None => Ok(Term::sym(&ident(s, "object name")?)),
    }
}

fn atom(s: &SExpr) -> Result<Formula, PddlError> {
    let items = s.as_list().ok_or_else(|| syntax(format!("expected an atom, found {s}")))?;
    let (head, args) = items.split_first().ok_or_else(|| syntax("empty atom"))?;
    let pred = ident(head, "predicate")?;
    if pred == "not" || pred == "and" {
        return Err(syntax(format!("`{pred}` is not allowed here")));
    }
    Ok(Formula::atom_with(&pred, args.iter().map(term).collect::<Result<_, _>>()?))
}

fn literal(s: &SExpr) -> Result<Literal, PddlError> {
    if s.head().as_deref() == Some("not") {
        let items = s.as_list().unwrap();
        if items.len() != 2 {
            return Err(syntax(format!("`not` takes one atom: {s}")));
        }
        return Ok(Literal::neg(atom(&items[1])?));
    }
    Ok(Literal::pos(atom(s)?))
}

fn conjunction(s: &SExpr) -> Result<Vec<Literal>, PddlError> {
    match s.as_list() {
        Some([]) => Ok(Vec::new()),
        Some(items) if s.head().as_deref() == Some("and") => items[1..].iter().map(literal).collect(),
        Some(_) => Ok(vec![literal(s)?]),
        None => Err(syntax(format!("expected a list, found {s}"))),
    }
}

fn parameters(s: &SExpr) -> Result<Vec<Param>, PddlError> {
    let items = s.as_list().ok_or_else(|| syntax("parameters must be a list"))?;
    let mut params: Vec<Param> = Vec::new();
    let mut untyped_from = 0;
    let mut i = 0;
    while i < items.len() {
        let raw = items[i].as_atom().ok_or_else(|| syntax("parameter must be a variable"))?;
        if raw == "-" {
            let ty = items.get(i + 1).ok_or_else(|| syntax("missing type after `-`"))?;
            let ty = ident(ty, "type")?;
            for p in &mut params[untyped_from..] {
                p.ty = Some(ty.clone());
            }
            untyped_from = params.len();
            i += 2;
            continue;
        }
        let name = raw.strip_prefix('?').ok_or_else(|| syntax(format!("parameter `{raw}` must start with ?")))?;
        if name.is_empty() {
            return Err(syntax("empty parameter name"));
        }
        params.push(Param { name: name.to_string(), ty: None });
        i += 1;
    }
    Ok(params)
}

fn action(items: &[SExpr]) -> Result<Operator, PddlError> {
    let name = ident(items.get(1).ok_or_else(|| syntax(":action without a name"))?, "action name")?;
    let mut op = Operator {
        name,
        params: Vec::new(),
        pre: Vec::new(),
        add: Vec::new(),
        del: Vec::new(),
        cost: 1,
        kind: OperatorKind::Physical,
        expresses: None,
        bound: Vec::new(),
    };
    let mut rest = items[2..].iter();
    while let Some(key) = rest.next() {
        let key = key.as_atom().map(str::to_ascii_lowercase).ok_or_else(|| syntax("expected a :keyword"))?;
        let value = rest.next().ok_or_else(|| syntax(format!("{key} without a value")))?;
        match key.as_str() {
            ":parameters" => op.params = parameters(value)?,
            ":precondition" => op.pre = conjunction(value)?,
            ":effect" => {
                for l in conjunction(value)? {
                    if l.positive {
                        op.add.push(l.atom);
                    } else {
                        op.del.push(l.atom);
                    }
                }
            }
            ":cost" => {
                op.cost = value
                    .as_atom()
                    .and_then(|c| c.parse::<u32>().ok())
                    .filter(|c| *c > 0)
                    .ok_or_else(|| syntax(format!("cost must be a positive integer, found {value}")))?;
            }
            other => return Err(syntax(format!("unsupported action field {other}"))),
        }
    }
    op.validate()?;
    Ok(op)
}

/// Parse a domain into its operators. Empty text is an empty domain.
pub fn parse_domain(text: &str) -> Result<Vec<Operator>, PddlError> {
    let Some(body) = define_body(text)? else { return Ok(Vec::new()) };
    let mut ops: Vec<Operator> = Vec::new();
    for item in &body {
        match item.head().as_deref() {
            Some("domain") | Some(":requirements") | Some(":types") | Some(":predicates") | Some(":constants") => {}
            Some(":action") => {
                let op = action(item.as_list().unwrap())?;
                if ops.iter().any(|o| o.name == op.name) {
                    return Err(ValidationError::new(format!("action {}", op.name), "duplicate action name").into());
                }
                ops.push(op);
            }
            _ => return Err(syntax(format!("unsupported domain element {item}"))),
        }
    }
    Ok(ops)
}

pub fn parse_problem(text: &str) -> Result<Problem, PddlError> {
    let body = define_body(text)?.ok_or_else(|| syntax("empty problem"))?;
    let mut problem =
        Problem { name: String::new(), domain: String::new(), objects: Vec::new(), init: Vec::new(), goal: Vec::new() };
    for item in &body {
        let items = item.as_list().ok_or_else(|| syntax(format!("unexpected {item}")))?;
        match item.head().as_deref() {
            Some("problem") => problem.name = ident(items.get(1).ok_or_else(|| syntax("unnamed problem"))?, "name")?,
            Some(":domain") => problem.domain = ident(items.get(1).ok_or_else(|| syntax(":domain"))?, "name")?,
            Some(":objects") => {
                for p in parameters_as_objects(&items[1..])? {
                    problem.objects.push(p);
                }
            }
            Some(":init") => {
                for a in &items[1..] {
                    let f = atom(a)?;
                    if !f.is_ground() {
                        return Err(ValidationError::new(":init", format!("{f} is not ground")).into());
                    }
                    problem.init.push(f);
                }
            }
            Some(":goal") => {
                let g = items.get(1).ok_or_else(|| syntax("empty goal"))?;
                problem.goal = conjunction(g)?;
                if let Some(l) = problem.goal.iter().find(|l| !l.atom.is_ground()) {
                    return Err(ValidationError::new(":goal", format!("{} is not ground", l.atom)).into());
                }
            }
            _ => return Err(syntax(format!("unsupported problem element {item}"))),
        }
    }
    Ok(problem)
}

fn parameters_as_objects(items: &[SExpr]) -> Result<Vec<String>, PddlError> {
    let mut out = Vec::new();
    let mut skip = false;
    for s in items {
        if skip {
            skip = false;
            continue;
        }
        if s.as_atom() == Some("-") {
            skip = true;
            continue;
        }
        out.push(ident(s, "object name")?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TICKET: &str = "(define (domain travel)
      (:action book-ticket
        :parameters (?from ?to ?t)
        :precondition (and (known ?from) (known ?to) (known ?t))
        :effect (booked ?from ?to ?t)))";

    #[test]
    fn ticket_action() {
        let ops = parse_domain(TICKET).unwrap();
        assert_eq!(ops.len(), 1);
        let op = &ops[0];
        assert_eq!(op.name, "book-ticket");
        assert_eq!(op.kind, OperatorKind::Physical);
        assert_eq!(op.params.len(), 3);
        assert_eq!(op.pre.len(), 3);
        assert_eq!(op.add[0].to_string(), "booked(?from, ?to, ?t)");
        assert_eq!(op.cost, 1);
    }

    #[test]
    fn undeclared_effect_variable() {
        let text = "(define (domain d) (:action a :parameters (?x) :precondition () :effect (p ?y)))";
        assert!(matches!(parse_domain(text), Err(PddlError::Validation(_))));
    }

    #[test]
    fn empty_domain() {
        assert!(parse_domain("").unwrap().is_empty());
        assert!(parse_domain("(define (domain d))").unwrap().is_empty());
    }

    #[test]
    fn typed_parameters_and_costs() {
        let text = "(define (domain d) (:requirements :strips :typing) (:types city)
          (:action go :parameters (?a ?b - city ?c) :precondition (at ?a) :effect (and (at ?b) (not (at ?a))) :cost 3))";
        let op = &parse_domain(text).unwrap()[0];
        assert_eq!(op.params[0].ty.as_deref(), Some("city"));
        assert_eq!(op.params[1].ty.as_deref(), Some("city"));
        assert_eq!(op.params[2].ty, None);
        assert_eq!(op.del.len(), 1);
        assert_eq!(op.cost, 3);
    }

    #[test]
    fn problem_file() {
        let text = "(define (problem trip) (:domain travel) (:objects paris lyon - city departure_time)
          (:init (known paris) (known lyon)) ; the time is missing
          (:goal (and (booked paris lyon departure_time))))";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.objects, vec!["paris", "lyon", "departure_time"]);
        assert_eq!(p.init.len(), 2);
        assert_eq!(p.goal.len(), 1);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_domain("(define (domain d)"), Err(PddlError::Syntax(_))));
        assert!(matches!(parse_domain("(define (domain d) (:action))"), Err(PddlError::Syntax(_))));
    }
}
