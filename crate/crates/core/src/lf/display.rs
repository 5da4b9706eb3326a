//! Canonical serialization. `Display` on [`LogicalForm`] produces the string
//! that [`parse_lf`](super::parse_lf) reads back to the same tree.

use std::fmt::{self, Write};

use super::ast::*;
use super::parser::is_special;

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == ANSWER_VAR
        || s == "_"
        || is_kb_path(s)
        || s.starts_with(' ')
        || s.ends_with(' ')
        || s.contains("  ")
        || s.chars().any(|c| is_special(c) || (c.is_whitespace() && c != ' '))
}

fn write_literal(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if !needs_quotes(s) {
        return f.write_str(s);
    }
    f.write_char('"')?;
    for c in s.chars() {
        if c == '"' || c == '\\' {
            f.write_char('\\')?;
        }
        f.write_char(c)?;
    }
    f.write_char('"')
}

fn write_binding(f: &mut fmt::Formatter<'_>, b: &Binding) -> fmt::Result {
    match b {
        Binding::AnswerVar => f.write_str(ANSWER_VAR),
        Binding::Literal(s) => write_literal(f, s),
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, o: &Operand) -> fmt::Result {
    match o {
        Operand::Kb(k) => write!(f, "{k}"),
        Operand::Literal(s) => write_literal(f, s),
    }
}

fn write_bound(f: &mut fmt::Formatter<'_>, o: &Option<Operand>) -> fmt::Result {
    match o {
        Some(o) => write_operand(f, o),
        None => f.write_str("_"),
    }
}

impl fmt::Display for AttributeSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let assign = |f: &mut fmt::Formatter<'_>| {
            write!(f, "{}=", self.name)?;
            write_binding(f, &self.binding)
        };
        match &self.operator {
            None => assign(f),
            Some(Operator::Compare { op, operand }) => {
                f.write_char('(')?;
                assign(f)?;
                write!(f, "){}", op.symbol())?;
                write_operand(f, operand)
            }
            Some(Operator::Sort(dir)) => {
                f.write_str("sort(")?;
                assign(f)?;
                let dir = match dir {
                    SortDirection::Asc => "asc",
                    SortDirection::Desc => "desc",
                };
                write!(f, ", {dir})")
            }
            Some(Operator::Range { lo, hi }) => {
                f.write_str("range(")?;
                assign(f)?;
                f.write_str(", ")?;
                write_bound(f, lo)?;
                f.write_str(", ")?;
                write_bound(f, hi)?;
                f.write_char(')')
            }
            Some(Operator::NullCheck { is_null }) => {
                f.write_str(if *is_null { "isnull(" } else { "notnull(" })?;
                assign(f)?;
                f.write_char(')')
            }
        }
    }
}

impl fmt::Display for EventNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (", self.name)?;
        match &self.arg {
            EventArg::Placeholder(t) => write!(f, "|{t}|")?,
            EventArg::AnswerVar => f.write_str(ANSWER_VAR)?,
            EventArg::Literal(s) => write_literal(f, s)?,
        }
        f.write_char(')')?;
        if !self.attributes.is_empty() {
            f.write_str(" [")?;
            for (i, a) in self.attributes.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_char(']')?;
        }
        Ok(())
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, node: &LfNode, braced: bool) -> fmt::Result {
    if braced {
        write!(f, "{{{node}}}")
    } else {
        write!(f, "{node}")
    }
}

impl fmt::Display for LfNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LfNode::Event(e) => write!(f, "{e}"),
            LfNode::Composite {
                left,
                connective,
                right,
            } => {
                let is_composite = |n: &LfNode| matches!(n, LfNode::Composite { .. });
                let (brace_left, brace_right) = if connective.is_relation() {
                    (is_composite(left), is_composite(right))
                } else {
                    let left_is_rel = matches!(
                        left.as_ref(),
                        LfNode::Composite { connective: c, .. } if c.is_relation()
                    );
                    (left_is_rel, is_composite(right))
                };
                write_child(f, left, brace_left)?;
                write!(f, " {connective} ")?;
                write_child(f, right, brace_right)
            }
        }
    }
}

impl fmt::Display for LogicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

/// Canonical surface string of `lf`.
pub fn serialize_lf(lf: &LogicalForm) -> String {
    lf.to_string()
}

/// Literal equality: two forms are equal iff their canonical strings are.
pub fn lf_equal(a: &LogicalForm, b: &LogicalForm) -> bool {
    serialize_lf(a) == serialize_lf(b)
}
