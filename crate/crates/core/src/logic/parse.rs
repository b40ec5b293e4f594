//! Recursive-descent parser for the formula surface syntax.
//!
//! ```text
//! formula := "not" formula | modal | "and" "(" formula ("," formula)+ ")" | atom
//! modal   := ("Bel"|"Goal"|"Ideal"|"Resp") "(" agent "," formula ["," priority] ")"
//!          | "Emo" "(" category "," agent ["," agent] "," formula ")"
//! atom    := ident ["(" ident ("," ident)* ")"]
//! ```
//!
//! Patterns additionally accept `?name` in formula, agent, argument and
//! priority positions.

use super::{
    is_agent_name, EmotionCategory, Formula, Modality, Priority, PrioritySlot, Term,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("syntax error at {position}: expected {expected}")]
pub struct SyntaxError {
    pub position: usize,
    pub expected: String,
}

/// Parse a ground formula. Missing priorities default to 0.5; variables are
/// rejected.
pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    Parser::new(text, Mode::Ground).parse_all()
}

/// Parse a pattern. Missing priorities become wildcards.
pub fn parse_pattern(text: &str) -> Result<Formula, SyntaxError> {
    Parser::new(text, Mode::Pattern).parse_all()
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Ground,
    Pattern,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    mode: Mode,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, mode: Mode) -> Self {
        Parser { src: text.as_bytes(), pos: 0, mode }
    }

    fn parse_all(mut self) -> Result<Formula, SyntaxError> {
        let f = self.formula()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error("end of input"));
        }
        Ok(f)
    }

    fn error(&self, expected: &str) -> SyntaxError {
        SyntaxError { position: self.pos, expected: expected.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), SyntaxError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("`{}`", c as char)))
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() => self.pos += 1,
            _ => return Err(self.error("identifier")),
        }
        while let Some(c) = self.src.get(self.pos) {
            if c.is_ascii_alphanumeric() || *c == b'_' || *c == b'-' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let raw = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Ok(raw.to_ascii_lowercase())
    }

    fn variable(&mut self) -> Result<String, SyntaxError> {
        let at = self.pos;
        self.expect(b'?')?;
        if self.mode == Mode::Ground {
            return Err(SyntaxError { position: at, expected: "ground term (no variables)".into() });
        }
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => self.pos += 1,
            _ => return Err(self.error("variable name")),
        }
        while let Some(c) = self.src.get(self.pos) {
            if c.is_ascii_alphanumeric() || *c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii").to_string())
    }

    /// True when the next non-space byte after the current identifier is `(`.
    fn followed_by_paren(&mut self) -> bool {
        self.peek() == Some(b'(')
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek() {
            Some(b'?') => return Ok(Formula::Var(self.variable()?)),
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return Err(self.error("formula")),
        }
        let word_start = self.pos;
        let word = self.ident()?;
        match word.as_str() {
            "not" => Ok(Formula::not(self.formula()?)),
            "and" if self.followed_by_paren() => {
                self.expect(b'(')?;
                let mut items = vec![self.formula()?];
                while self.eat(b',') {
                    items.push(self.formula()?);
                }
                self.expect(b')')?;
                if items.len() < 2 {
                    return Err(SyntaxError {
                        position: word_start,
                        expected: "at least two conjuncts".into(),
                    });
                }
                Ok(Formula::and(items))
            }
            "bel" | "goal" | "ideal" | "resp" if self.followed_by_paren() => {
                let op = match word.as_str() {
                    "bel" => Modality::Bel,
                    "goal" => Modality::Goal,
                    "ideal" => Modality::Ideal,
                    _ => Modality::Resp,
                };
                self.modal(op)
            }
            "emo" if self.followed_by_paren() => self.emotion(),
            _ => self.atom_rest(word),
        }
    }

    fn modal(&mut self, op: Modality) -> Result<Formula, SyntaxError> {
        self.expect(b'(')?;
        let agent = self.agent()?;
        self.expect(b',')?;
        let inner = self.formula()?;
        let priority = if op.has_priority() {
            if self.eat(b',') {
                Some(self.priority()?)
            } else if self.mode == Mode::Ground {
                Some(PrioritySlot::Value(Priority::DEFAULT))
            } else {
                Some(PrioritySlot::Any)
            }
        } else {
            None
        };
        self.expect(b')')?;
        Ok(Formula::Modal { op, agent, inner: Box::new(inner), priority })
    }

    fn emotion(&mut self) -> Result<Formula, SyntaxError> {
        self.expect(b'(')?;
        let at = self.pos;
        let cat_word = self.ident()?;
        let category: EmotionCategory = cat_word
            .parse()
            .map_err(|_| SyntaxError { position: at, expected: "emotion category".into() })?;
        self.expect(b',')?;
        let holder = self.agent()?;
        self.expect(b',')?;
        let target = if category.is_other_directed() {
            let t = self.agent()?;
            self.expect(b',')?;
            Some(t)
        } else {
            None
        };
        let inner = self.formula()?;
        self.expect(b')')?;
        Ok(Formula::Emo { category, holder, target, inner: Box::new(inner) })
    }

    fn agent(&mut self) -> Result<Term, SyntaxError> {
        if self.peek() == Some(b'?') {
            return Ok(Term::Var(self.variable()?));
        }
        let at = self.pos;
        let name = self.ident()?;
        if !is_agent_name(&name) {
            return Err(SyntaxError { position: at, expected: "agent name [a-z][a-z0-9_]*".into() });
        }
        Ok(Term::Sym(name))
    }

    fn argument(&mut self) -> Result<Term, SyntaxError> {
        if self.peek() == Some(b'?') {
            return Ok(Term::Var(self.variable()?));
        }
        Ok(Term::Sym(self.ident()?))
    }

    fn atom_rest(&mut self, pred: String) -> Result<Formula, SyntaxError> {
        let mut args = Vec::new();
        if self.eat(b'(') {
            args.push(self.argument()?);
            while self.eat(b',') {
                args.push(self.argument()?);
            }
            self.expect(b')')?;
        }
        Ok(Formula::Atom { pred, args })
    }

    fn priority(&mut self) -> Result<PrioritySlot, SyntaxError> {
        if self.peek() == Some(b'?') {
            return Ok(PrioritySlot::Var(self.variable()?));
        }
        let start = self.pos;
        while let Some(c) = self.src.get(self.pos) {
            if c.is_ascii_digit() || *c == b'.' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let raw = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let value: f64 = raw
            .parse()
            .map_err(|_| SyntaxError { position: start, expected: "priority in [0,1]".into() })?;
        Priority::new(value)
            .map(PrioritySlot::Value)
            .ok_or(SyntaxError { position: start, expected: "priority in [0,1]".into() })
    }
}
