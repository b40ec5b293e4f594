//! Text and stimulus input.
//!
//! Utterances are matched against an ordered list of case-insensitive
//! regular expressions; the first match names the act and builds its content
//! from the named captures.

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::catalog::{ActInstance, Catalog, Direction};
use crate::error::ValidationError;
use crate::logic::{is_identifier, parse_pattern, substitute, AgentId, Formula, Substitution};
use crate::memory::Tick;

#[derive(Clone, Debug)]
pub struct UtterancePattern {
    pub template: String,
    pub act: String,
    pub content: Formula,
    pub responsibility: bool,
    regex: Regex,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternSpec {
    template: String,
    act: String,
    content: String,
    #[serde(default)]
    responsibility: bool,
}

#[derive(Clone, Debug, Default)]
pub struct PatternSet {
    patterns: Vec<UtterancePattern>,
}

impl PatternSet {
    pub fn patterns(&self) -> &[UtterancePattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// Load a pattern file, checking every act against the catalog and every
/// content variable against the template's captures.
pub fn load_patterns(json: &str, catalog: &Catalog) -> Result<PatternSet, ValidationError> {
    let specs: Vec<PatternSpec> =
        serde_json::from_str(json).map_err(|e| ValidationError::new("patterns", e.to_string()))?;
    let mut patterns = Vec::new();
    for (i, spec) in specs.into_iter().enumerate() {
        let path = format!("patterns[{i}]");
        let regex = RegexBuilder::new(&spec.template)
            .case_insensitive(true)
            .build()
            .map_err(|e| ValidationError::new(&path, e.to_string()))?;
        if catalog.get(&spec.act).is_none() {
            return Err(ValidationError::new(&path, format!("unknown act `{}`", spec.act)));
        }
        let content = parse_pattern(&spec.content).map_err(|e| ValidationError::new(&path, e.to_string()))?;
        let captures: Vec<&str> = regex.capture_names().flatten().collect();
        if let Some(v) = content.variables().iter().find(|v| !captures.contains(&v.as_str())) {
            return Err(ValidationError::new(&path, format!("content variable ?{v} is not a named capture")));
        }
        patterns.push(UtterancePattern {
            template: spec.template,
            act: spec.act,
            content,
            responsibility: spec.responsibility,
            regex,
        });
    }
    Ok(PatternSet { patterns })
}

pub fn default_patterns(catalog: &Catalog) -> Result<PatternSet, ValidationError> {
    load_patterns(include_str!("../../data/patterns.json"), catalog)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perceived {
    Act(ActInstance),
    Unrecognized(String),
}

fn capture_symbol(text: &str) -> Option<String> {
    let slug = text.trim().to_lowercase().split_whitespace().collect::<Vec<_>>().join("_");
    is_identifier(&slug).then_some(slug)
}

/// The first pattern, in file order, that matches and yields ground content.
pub fn parse_utterance(
    text: &str,
    patterns: &PatternSet,
    speaker: &AgentId,
    addressee: &AgentId,
    tick: Tick,
) -> Perceived {
    for p in &patterns.patterns {
        let Some(caps) = p.regex.captures(text) else { continue };
        let mut sigma = Substitution::new();
        let mut ok = true;
        for name in p.regex.capture_names().flatten() {
            match caps.name(name).map(|m| capture_symbol(m.as_str())) {
                Some(Some(sym)) => sigma = sigma.with_term(name, &sym),
                Some(None) => ok = false,
                None => {}
            }
        }
        let Some(content) = ok.then(|| substitute(&p.content, &sigma).ok()).flatten() else { continue };
        let mut act =
            ActInstance::new(&p.act, speaker.clone(), addressee.clone(), content.normalize(), Direction::Received, tick);
        act.declares_responsibility = p.responsibility;
        return Perceived::Act(act);
    }
    Perceived::Unrecognized(text.to_string())
}

/// Something the agent perceives directly, outside the dialogue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    pub content: Formula,
    #[serde(default)]
    pub responsible: Option<AgentId>,
    pub perceiver: AgentId,
}

/// Beliefs the perceiver forms from a stimulus.
pub fn ingest_stimulus(s: &Stimulus) -> Vec<Formula> {
    let mut out = vec![Formula::bel(s.perceiver.term(), s.content.clone())];
    if let Some(agent) = &s.responsible {
        out.push(Formula::bel(s.perceiver.term(), Formula::resp(agent.term(), s.content.clone())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;
    use crate::logic::parse_formula;

    fn agents() -> (AgentId, AgentId) {
        (AgentId::new("wafa").unwrap(), AgentId::new("nao").unwrap())
    }

    fn parse(text: &str) -> Perceived {
        let (wafa, nao) = agents();
        parse_utterance(text, &default_patterns(&default_catalog()).unwrap(), &wafa, &nao, 7)
    }

    fn act(p: Perceived) -> ActInstance {
        match p {
            Perceived::Act(a) => a,
            Perceived::Unrecognized(t) => panic!("unrecognized: {t}"),
        }
    }

    #[test]
    fn unplug_announcement() {
        let a = act(parse("I am going to unplug you"));
        assert_eq!(a.act, "inform");
        assert_eq!(a.content, parse_formula("unplugged").unwrap());
        assert_eq!(a.speaker.as_str(), "wafa");
        assert_eq!(a.addressee.as_str(), "nao");
        assert!(a.declares_responsibility);
        assert_eq!(a.direction, Direction::Received);
        assert_eq!(a.id, "act-7");
        assert_eq!(act(parse("Nao, I am going to UNPLUG you, I need to dry my hair")).act, "inform");
    }

    #[test]
    fn thanks_for_tidying() {
        let a = act(parse("thank you for tidying"));
        assert_eq!(a.act, "thank");
        assert_eq!(a.content, parse_formula("tidy").unwrap());
        assert!(!a.declares_responsibility);
    }

    #[test]
    fn captures_fill_term_positions() {
        let a = act(parse("Could you fetch the ball?"));
        assert_eq!(a.act, "request");
        assert_eq!(a.content, parse_formula("fetched(ball)").unwrap());
        assert_eq!(act(parse("What time does the train leave?")).act, "ask-ref");
        assert_eq!(act(parse("Is it raining?")).content, parse_formula("raining").unwrap());
    }

    #[test]
    fn gibberish_is_unrecognized() {
        assert_eq!(parse("zzz gibberish"), Perceived::Unrecognized("zzz gibberish".into()));
        assert_eq!(parse(""), Perceived::Unrecognized(String::new()));
    }

    #[test]
    fn first_match_wins() {
        let json = r#"[
            {"template": "hello", "act": "say", "content": "greeted"},
            {"template": "hello there", "act": "inform", "content": "there"}
        ]"#;
        let set = load_patterns(json, &default_catalog()).unwrap();
        let (wafa, nao) = agents();
        assert_eq!(act(parse_utterance("Hello there", &set, &wafa, &nao, 1)).act, "say");
    }

    #[test]
    fn pattern_file_validation() {
        let cat = default_catalog();
        assert!(load_patterns(r#"[{"template": "x", "act": "dance", "content": "p"}]"#, &cat).is_err());
        assert!(load_patterns(r#"[{"template": "(", "act": "say", "content": "p"}]"#, &cat).is_err());
        assert!(load_patterns(r#"[{"template": "(?P<a>x)", "act": "say", "content": "p(?b)"}]"#, &cat).is_err());
        assert!(load_patterns("[]", &cat).unwrap().is_empty());
    }

    #[test]
    fn stimulus_beliefs() {
        let (wafa, nao) = agents();
        let s = Stimulus { content: parse_formula("unplugged").unwrap(), responsible: Some(wafa), perceiver: nao.clone() };
        let rendered: Vec<String> = ingest_stimulus(&s).iter().map(|f| f.to_string()).collect();
        assert_eq!(rendered, vec!["Bel(nao, unplugged)", "Bel(nao, Resp(wafa, unplugged))"]);
        let rain = Stimulus { content: parse_formula("raining").unwrap(), responsible: None, perceiver: nao };
        assert_eq!(ingest_stimulus(&rain), vec![parse_formula("Bel(nao, raining)").unwrap()]);
    }
}
