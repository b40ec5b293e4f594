//! S-expression reader for the PDDL subset.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items) => Some(items),
            SExpr::Atom(_) => None,
        }
    }

    /// The leading keyword of a list, lowercased.
    pub fn head(&self) -> Option<String> {
        self.as_list()?.first()?.as_atom().map(str::to_ascii_lowercase)
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a) => f.write_str(a),
            SExpr::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SExprError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Read every top-level expression in `text`. `;` starts a comment that runs
/// to the end of the line.
pub fn read_all(text: &str) -> Result<Vec<SExpr>, SExprError> {
    let mut stack: Vec<(Vec<SExpr>, usize, usize)> = Vec::new();
    let mut top = Vec::new();
    let mut token = String::new();
    let (mut line, mut column) = (1, 0);
    let mut chars = text.chars().peekable();

    fn flush(token: &mut String, stack: &mut [(Vec<SExpr>, usize, usize)], top: &mut Vec<SExpr>) {
        if token.is_empty() {
            return;
        }
        let atom = SExpr::Atom(std::mem::take(token));
        match stack.last_mut() {
            Some((items, _, _)) => items.push(atom),
            None => top.push(atom),
        }
    }

    while let Some(c) = chars.next() {
        if c == '\n' {
            line += 1;
            column = 0;
        } else {
            column += 1;
        }
        match c {
            ';' => {
                flush(&mut token, &mut stack, &mut top);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                flush(&mut token, &mut stack, &mut top);
                stack.push((Vec::new(), line, column));
            }
            ')' => {
                flush(&mut token, &mut stack, &mut top);
                let Some((items, _, _)) = stack.pop() else {
                    return Err(SExprError { line, column, message: "unbalanced `)`".into() });
                };
                let list = SExpr::List(items);
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            c if c.is_whitespace() => flush(&mut token, &mut stack, &mut top),
            c => token.push(c),
        }
    }
    flush(&mut token, &mut stack, &mut top);
    if let Some((_, l, c)) = stack.pop() {
        return Err(SExprError { line: l, column: c, message: "unclosed `(`".into() });
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_skips_comments() {
        let out = read_all("(a (b c) ; note\n d)").unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to_string(), "(a (b c) d)");
    }

    #[test]
    fn reports_unbalanced_parentheses() {
        assert!(read_all("(a (b)").is_err());
        let err = read_all("a)\n").unwrap_err();
        assert_eq!((err.line, err.column), (1, 2));
    }

    #[test]
    fn empty_input() {
        assert!(read_all("  ; nothing\n").unwrap().is_empty());
    }
}
