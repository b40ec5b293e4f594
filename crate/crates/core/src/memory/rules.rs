//! Horn-style rules over formulas and forward chaining to fixpoint.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::logic::{match_with, substitute, Formula, Substitution};

use super::episodic::{EpisodicStore, Fact, FactSource};
use super::{Clock, MemoryError};

/// `premises ⟹ conclusion`. Also used for the emotion definitions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceRule {
    pub name: String,
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
}

impl InferenceRule {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.premises.is_empty() {
            return Err(ValidationError::new(&self.name, "rule has no premises"));
        }
        let bound: BTreeSet<String> =
            self.premises.iter().flat_map(|p| p.variables()).collect();
        for v in self.conclusion.variables() {
            if !bound.contains(&v) {
                return Err(ValidationError::new(
                    format!("{}.conclusion", self.name),
                    format!("variable ?{v} does not occur in any premise"),
                ));
            }
        }
        Ok(())
    }

    /// All ways the premises can be matched jointly against `facts`, with
    /// the facts used for each premise.
    pub fn groundings<'a>(&self, facts: &[&'a Fact], seed: &Substitution) -> Vec<(Substitution, Vec<&'a Fact>)> {
        let mut out = Vec::new();
        join(&self.premises, facts, seed.clone(), Vec::new(), &mut out);
        out
    }
}

fn join<'a>(
    premises: &[Formula],
    facts: &[&'a Fact],
    sigma: Substitution,
    used: Vec<&'a Fact>,
    out: &mut Vec<(Substitution, Vec<&'a Fact>)>,
) {
    let Some((first, rest)) = premises.split_first() else {
        out.push((sigma, used));
        return;
    };
    for fact in facts {
        // wildcard captures are positional per pattern; drop them between premises
        if let Some(next) = match_with(first, &fact.formula, sigma.named()) {
            let mut used = used.clone();
            used.push(fact);
            let keep = if rest.is_empty() { next } else { next.named() };
            join(rest, facts, keep, used, out);
        }
    }
}

pub fn load_rules(json: &str) -> Result<Vec<InferenceRule>, ValidationError> {
    let rules: Vec<InferenceRule> = serde_json::from_str(json)
        .map_err(|e| ValidationError::new("$", e.to_string()))?;
    let mut names = BTreeSet::new();
    for (i, r) in rules.iter().enumerate() {
        r.validate().map_err(|e| ValidationError::new(format!("[{i}].{}", e.path), e.reason))?;
        if !names.insert(r.name.clone()) {
            return Err(ValidationError::new(format!("[{i}].name"), format!("duplicate rule {}", r.name)));
        }
    }
    Ok(rules)
}

/// The shipped default rule set: responsibility implies belief.
pub fn default_inference_rules() -> Vec<InferenceRule> {
    load_rules(include_str!("../../data/inference_rules.json")).expect("shipped inference rules are valid")
}

/// Forward chaining until no rule adds a new fact. A derivation is kept only
/// if its depth does not exceed the deepest matched premise by more than one.
pub fn run_inference(
    store: &mut EpisodicStore,
    rules: &[InferenceRule],
    clock: &mut Clock,
    max_derivations: usize,
) -> Result<Vec<Fact>, MemoryError> {
    let mut derived = Vec::new();
    loop {
        let mut fresh: Vec<Formula> = Vec::new();
        {
            let facts: Vec<&Fact> = store.facts().collect();
            for rule in rules {
                for (sigma, used) in rule.groundings(&facts, &Substitution::new()) {
                    let Ok(conclusion) = substitute(&rule.conclusion, &sigma) else { continue };
                    let bound = used.iter().map(|f| f.formula.depth()).max().unwrap_or(0) + 1;
                    if conclusion.depth() > bound || store.contains(&conclusion) || fresh.contains(&conclusion) {
                        continue;
                    }
                    fresh.push(conclusion);
                }
            }
        }
        if fresh.is_empty() {
            return Ok(derived);
        }
        for formula in fresh {
            if derived.len() >= max_derivations {
                return Err(MemoryError::DepthLimitExceeded(max_derivations));
            }
            let report = store.assert_fact(formula, FactSource::Inference, clock.advance())?;
            derived.extend(report.added);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_pattern};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn store_with(facts: &[&str], clock: &mut Clock) -> EpisodicStore {
        let mut store = EpisodicStore::new();
        for s in facts {
            store.assert_fact(f(s), FactSource::Perception, clock.advance()).unwrap();
        }
        store
    }

    #[test]
    fn responsibility_implies_belief() {
        let mut clock = Clock::default();
        let mut store = store_with(&["Bel(nao, Resp(wafa, unplugged))"], &mut clock);
        let out = run_inference(&mut store, &default_inference_rules(), &mut clock, 1000).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].formula, f("Bel(nao, unplugged)"));
        assert_eq!(out[0].source, FactSource::Inference);
        let again = run_inference(&mut store, &default_inference_rules(), &mut clock, 1000).unwrap();
        assert!(again.is_empty());
    }

    #[test]
    fn no_rules_derive_nothing() {
        let mut clock = Clock::default();
        let mut store = store_with(&["Bel(nao, p)"], &mut clock);
        assert!(run_inference(&mut store, &[], &mut clock, 1000).unwrap().is_empty());
    }

    #[test]
    fn conclusion_variables_must_be_bound() {
        let rule = InferenceRule {
            name: "bad".into(),
            premises: vec![parse_pattern("Bel(?A, ?F)").unwrap()],
            conclusion: parse_pattern("Bel(?B, ?F)").unwrap(),
        };
        assert!(rule.validate().is_err());
    }

    #[test]
    fn runaway_rules_hit_the_limit() {
        // each step nests one more level, within the depth bound
        let rule = InferenceRule {
            name: "grow".into(),
            premises: vec![parse_pattern("Bel(nao, ?F)").unwrap()],
            conclusion: parse_pattern("Bel(nao, Bel(nao, ?F))").unwrap(),
        };
        let mut clock = Clock::default();
        let mut store = store_with(&["Bel(nao, p)"], &mut clock);
        let err = run_inference(&mut store, &[rule], &mut clock, 50).unwrap_err();
        assert_eq!(err, MemoryError::DepthLimitExceeded(50));
    }

    #[test]
    fn depth_bound_blocks_deep_conclusions() {
        let rule = InferenceRule {
            name: "jump".into(),
            premises: vec![parse_pattern("p(?x)").unwrap()],
            conclusion: parse_pattern("Bel(nao, Bel(nao, q(?x)))").unwrap(),
        };
        let mut clock = Clock::default();
        let mut store = store_with(&["p(a)"], &mut clock);
        assert!(run_inference(&mut store, &[rule], &mut clock, 10).unwrap().is_empty());
    }
}
