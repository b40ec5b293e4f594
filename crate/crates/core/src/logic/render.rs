use std::fmt;

use super::{Formula, PrioritySlot, Term};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sym(s) => f.write_str(s),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { pred, args } => {
                f.write_str(pred)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    write_list(f, args)?;
                    f.write_str(")")?;
                }
                Ok(())
            }
            Formula::Not(inner) => write!(f, "not {inner}"),
            Formula::Modal { op, agent, inner, priority } => {
                write!(f, "{}({agent}, {inner}", op.name())?;
                match priority {
                    Some(PrioritySlot::Value(p)) => write!(f, ", {p}")?,
                    Some(PrioritySlot::Var(v)) => write!(f, ", ?{v}")?,
                    Some(PrioritySlot::Any) | None => {}
                }
                f.write_str(")")
            }
            Formula::Emo { category, holder, target, inner } => {
                write!(f, "Emo({category}, {holder}, ")?;
                if let Some(t) = target {
                    write!(f, "{t}, ")?;
                }
                write!(f, "{inner})")
            }
            Formula::And(items) => {
                f.write_str("and(")?;
                write_list(f, items)?;
                f.write_str(")")
            }
            Formula::Var(v) => write!(f, "?{v}"),
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}
