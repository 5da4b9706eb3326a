//! Recursive-descent parser for the logical-form surface syntax.
//!
//! ```text
//! lf        := rel_expr EOF
//! rel_expr  := bool_expr (RELATION bool_expr)*        left-assoc
//! bool_expr := primary (("OR" | "AND") primary)*      left-assoc, binds tighter
//! primary   := "{" rel_expr "}" | event
//! event     := NAME "(" arg ")" ("[" slot ("," slot)* "]")?
//! arg       := "x" | "|" TYPE "|" | literal
//! slot      := NAME "=" binding
//!            | "(" NAME "=" binding ")" CMP operand
//!            | "sort" "(" NAME "=" binding "," ("asc" | "desc") ")"
//!            | "range" "(" NAME "=" binding "," bound "," bound ")"
//!            | ("isnull" | "notnull") "(" NAME "=" binding ")"
//! ```
//!
//! A literal is either a double-quoted string with `\"` / `\\` escapes or a
//! run of bare words joined by single spaces. A bare operand that looks like
//! a dotted identifier path (`lab.refhigh`) is a knowledge-base reference; a
//! bare `_` range bound is absent.

use super::ast::*;

const MAX_NESTING: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LfParseError {
    #[error("empty logical form")]
    Empty,
    #[error("syntax error at byte {pos}: found {found}, expected one of: {}", expected.join(", "))]
    Syntax {
        pos: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unbalanced '{found}' at byte {pos}")]
    Unbalanced {
        pos: usize,
        found: char,
        /// The closer that would have matched the innermost open group.
        expected: Option<char>,
    },
    #[error("'{open}' opened at byte {pos} is never closed")]
    Unclosed { pos: usize, open: char },
    #[error("unterminated string starting at byte {pos}")]
    UnterminatedString { pos: usize },
    #[error("malformed placeholder at byte {pos}")]
    BadPlaceholder { pos: usize },
    #[error("duplicate attribute '{name}' at byte {pos}")]
    DuplicateAttribute { pos: usize, name: String },
    #[error("range at byte {pos} has no bounds")]
    EmptyRange { pos: usize },
    #[error("nesting deeper than {MAX_NESTING} at byte {pos}")]
    TooDeep { pos: usize },
}

impl LfParseError {
    pub fn position(&self) -> Option<usize> {
        match self {
            LfParseError::Empty => None,
            LfParseError::Syntax { pos, .. }
            | LfParseError::Unbalanced { pos, .. }
            | LfParseError::Unclosed { pos, .. }
            | LfParseError::UnterminatedString { pos }
            | LfParseError::BadPlaceholder { pos }
            | LfParseError::DuplicateAttribute { pos, .. }
            | LfParseError::EmptyRange { pos }
            | LfParseError::TooDeep { pos } => Some(*pos),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open(char),
    Close(char),
    Comma,
    Eq,
    Cmp(CompareOp),
    Placeholder(String),
    Quoted(String),
    Word(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Open(c) | Tok::Close(c) => format!("'{c}'"),
            Tok::Comma => "','".into(),
            Tok::Eq => "'='".into(),
            Tok::Cmp(op) => format!("'{}'", op.symbol()),
            Tok::Placeholder(t) => format!("placeholder |{t}|"),
            Tok::Quoted(s) => format!("string {s:?}"),
            Tok::Word(w) => format!("'{w}'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: usize,
}

pub(crate) fn is_special(c: char) -> bool {
    matches!(
        c,
        '(' | ')' | '[' | ']' | '{' | '}' | ',' | '=' | '<' | '>' | '|' | '"' | '≤' | '≥' | '\\'
    )
}

fn lex(src: &str) -> Result<Vec<Spanned>, LfParseError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        let tok = match c {
            '(' | '[' | '{' => {
                it.next();
                Tok::Open(c)
            }
            ')' | ']' | '}' => {
                it.next();
                Tok::Close(c)
            }
            ',' => {
                it.next();
                Tok::Comma
            }
            '=' => {
                it.next();
                Tok::Eq
            }
            '≤' => {
                it.next();
                Tok::Cmp(CompareOp::Le)
            }
            '≥' => {
                it.next();
                Tok::Cmp(CompareOp::Ge)
            }
            '<' | '>' => {
                it.next();
                let or_eq = matches!(it.peek(), Some(&(_, '=')));
                if or_eq {
                    it.next();
                }
                Tok::Cmp(match (c, or_eq) {
                    ('<', false) => CompareOp::Lt,
                    ('<', true) => CompareOp::Le,
                    ('>', false) => CompareOp::Gt,
                    _ => CompareOp::Ge,
                })
            }
            '|' => {
                it.next();
                let mut name = String::new();
                let mut closed = false;
                while let Some(&(_, n)) = it.peek() {
                    if n == '|' {
                        it.next();
                        closed = true;
                        break;
                    }
                    if !(n.is_ascii_alphanumeric() || n == '_') {
                        break;
                    }
                    name.push(n);
                    it.next();
                }
                if !closed || !is_identifier(&name) {
                    return Err(LfParseError::BadPlaceholder { pos });
                }
                Tok::Placeholder(name)
            }
            '"' => {
                it.next();
                let mut s = String::new();
                let mut closed = false;
                while let Some((_, n)) = it.next() {
                    match n {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match it.next() {
                            Some((_, e)) => s.push(e),
                            None => break,
                        },
                        _ => s.push(n),
                    }
                }
                if !closed {
                    return Err(LfParseError::UnterminatedString { pos });
                }
                Tok::Quoted(s)
            }
            '\\' => {
                return Err(LfParseError::Syntax {
                    pos,
                    found: "'\\'".into(),
                    expected: vec!["word", "quoted string"],
                })
            }
            _ => {
                let mut w = String::new();
                while let Some(&(_, n)) = it.peek() {
                    if n.is_whitespace() || is_special(n) {
                        break;
                    }
                    w.push(n);
                    it.next();
                }
                Tok::Word(w)
            }
        };
        out.push(Spanned { tok, pos });
    }
    Ok(out)
}

fn check_balance(toks: &[Spanned]) -> Result<(), LfParseError> {
    let mut stack: Vec<(char, usize)> = Vec::new();
    for t in toks {
        match t.tok {
            Tok::Open(c) => stack.push((c, t.pos)),
            Tok::Close(c) => {
                let want = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                match stack.pop() {
                    Some((open, _)) if open == want => {}
                    Some((open, _)) => {
                        return Err(LfParseError::Unbalanced {
                            pos: t.pos,
                            found: c,
                            expected: Some(closer(open)),
                        })
                    }
                    None => {
                        return Err(LfParseError::Unbalanced {
                            pos: t.pos,
                            found: c,
                            expected: None,
                        })
                    }
                }
            }
            _ => {}
        }
    }
    match stack.pop() {
        Some((open, pos)) => Err(LfParseError::Unclosed { pos, open }),
        None => Ok(()),
    }
}

fn closer(open: char) -> char {
    match open {
        '(' => ')',
        '[' => ']',
        _ => '}',
    }
}

pub(crate) fn is_relation_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    s != "OR" && s != "AND" && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '/' | '-'))
}

struct Parser<'a> {
    toks: &'a [Spanned],
    at: usize,
    end: usize,
    nesting: usize,
}

type PResult<T> = Result<T, LfParseError>;

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.at + 1).map(|s| &s.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |s| s.pos)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.at).map(|s| &s.tok);
        self.at += 1;
        t
    }

    fn error<T>(&self, expected: &[&'static str]) -> PResult<T> {
        Err(LfParseError::Syntax {
            pos: self.pos(),
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), Tok::describe),
            expected: expected.to_vec(),
        })
    }

    fn expect(&mut self, tok: Tok, desc: &'static str) -> PResult<()> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            self.error(&[desc])
        }
    }

    fn rel_expr(&mut self) -> PResult<LfNode> {
        let mut left = self.bool_expr()?;
        while let Some(Tok::Word(w)) = self.peek() {
            if w == "OR" || w == "AND" {
                break;
            }
            if !is_relation_name(w) {
                return self.error(&["relation name", "'OR'", "'AND'"]);
            }
            let name = w.clone();
            self.at += 1;
            let right = self.bool_expr()?;
            left = LfNode::composite(left, Connective::Rel(name), right);
        }
        Ok(left)
    }

    fn bool_expr(&mut self) -> PResult<LfNode> {
        let mut left = self.primary()?;
        loop {
            let connective = match self.peek() {
                Some(Tok::Word(w)) if w == "OR" => Connective::Or,
                Some(Tok::Word(w)) if w == "AND" => Connective::And,
                _ => break,
            };
            self.at += 1;
            let right = self.primary()?;
            left = LfNode::composite(left, connective, right);
        }
        Ok(left)
    }

    fn primary(&mut self) -> PResult<LfNode> {
        match self.peek() {
            Some(Tok::Open('{')) => {
                if self.nesting >= MAX_NESTING {
                    return Err(LfParseError::TooDeep { pos: self.pos() });
                }
                self.at += 1;
                self.nesting += 1;
                let inner = self.rel_expr()?;
                self.nesting -= 1;
                self.expect(Tok::Close('}'), "'}'")?;
                Ok(inner)
            }
            Some(Tok::Word(w)) if is_identifier(w) && w != "OR" && w != "AND" => {
                Ok(LfNode::Event(self.event()?))
            }
            _ => self.error(&["event name", "'{'"]),
        }
    }

    fn event(&mut self) -> PResult<EventNode> {
        let name = match self.bump() {
            Some(Tok::Word(w)) => w.clone(),
            _ => unreachable!("primary checked for an event name"),
        };
        self.expect(Tok::Open('('), "'('")?;
        let arg = match (self.peek(), self.peek2()) {
            (Some(Tok::Placeholder(t)), Some(Tok::Close(')'))) => {
                let t = t.clone();
                self.at += 1;
                EventArg::Placeholder(t)
            }
            _ => match self.value(&[')'])? {
                Value::AnswerVar => EventArg::AnswerVar,
                Value::Literal(s) => EventArg::Literal(s),
            },
        };
        self.expect(Tok::Close(')'), "')'")?;
        let mut event = EventNode::new(name, arg);
        if self.peek() == Some(&Tok::Open('[')) {
            self.at += 1;
            loop {
                let pos = self.pos();
                let slot = self.slot()?;
                if event.attribute(&slot.name).is_some() {
                    return Err(LfParseError::DuplicateAttribute {
                        pos,
                        name: slot.name,
                    });
                }
                event.attributes.push(slot);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.at += 1;
                    }
                    Some(Tok::Close(']')) => {
                        self.at += 1;
                        break;
                    }
                    _ => return self.error(&["','", "']'"]),
                }
            }
        }
        Ok(event)
    }

    /// `NAME "=" binding`, where the binding runs until one of `stops`.
    fn assignment(&mut self, stops: &[char]) -> PResult<(String, Binding)> {
        let name = match self.peek() {
            Some(Tok::Word(w)) if is_identifier(w) => w.clone(),
            _ => return self.error(&["attribute name"]),
        };
        self.at += 1;
        self.expect(Tok::Eq, "'='")?;
        let binding = match self.value(stops)? {
            Value::AnswerVar => Binding::AnswerVar,
            Value::Literal(s) => Binding::Literal(s),
        };
        Ok((name, binding))
    }

    fn slot(&mut self) -> PResult<AttributeSlot> {
        match (self.peek(), self.peek2()) {
            (Some(Tok::Open('(')), _) => {
                self.at += 1;
                let (name, binding) = self.assignment(&[')'])?;
                self.expect(Tok::Close(')'), "')'")?;
                let op = match self.bump() {
                    Some(Tok::Cmp(op)) => *op,
                    Some(Tok::Eq) => CompareOp::Eq,
                    _ => {
                        self.at -= 1;
                        return self.error(&["comparison operator"]);
                    }
                };
                let operand = match self.operand(&[',', ']'])? {
                    Some(o) => o,
                    None => return self.error(&["operand"]),
                };
                Ok(AttributeSlot {
                    name,
                    binding,
                    operator: Some(Operator::Compare { op, operand }),
                })
            }
            (Some(Tok::Word(w)), Some(Tok::Open('('))) => {
                let func = w.clone();
                let pos = self.pos();
                self.at += 2;
                let (name, binding) = self.assignment(&[',', ')'])?;
                let operator = match func.as_str() {
                    "sort" => {
                        self.expect(Tok::Comma, "','")?;
                        let dir = match self.peek() {
                            Some(Tok::Word(d)) if d == "asc" => SortDirection::Asc,
                            Some(Tok::Word(d)) if d == "desc" => SortDirection::Desc,
                            _ => return self.error(&["'asc'", "'desc'"]),
                        };
                        self.at += 1;
                        Operator::Sort(dir)
                    }
                    "range" => {
                        self.expect(Tok::Comma, "','")?;
                        let lo = self.operand(&[','])?;
                        self.expect(Tok::Comma, "','")?;
                        let hi = self.operand(&[')'])?;
                        if lo.is_none() && hi.is_none() {
                            return Err(LfParseError::EmptyRange { pos });
                        }
                        Operator::Range { lo, hi }
                    }
                    "isnull" => Operator::NullCheck { is_null: true },
                    "notnull" => Operator::NullCheck { is_null: false },
                    _ => {
                        return Err(LfParseError::Syntax {
                            pos,
                            found: format!("'{func}'"),
                            expected: vec!["'sort'", "'range'", "'isnull'", "'notnull'"],
                        })
                    }
                };
                self.expect(Tok::Close(')'), "')'")?;
                Ok(AttributeSlot {
                    name,
                    binding,
                    operator: Some(operator),
                })
            }
            _ => {
                let (name, binding) = self.assignment(&[',', ']'])?;
                Ok(AttributeSlot {
                    name,
                    binding,
                    operator: None,
                })
            }
        }
    }

    /// Operand, or `None` for a bare `_` (absent range bound).
    fn operand(&mut self, stops: &[char]) -> PResult<Option<Operand>> {
        match self.peek() {
            Some(Tok::Quoted(s)) => {
                let s = s.clone();
                self.at += 1;
                self.require_stop(stops)?;
                Ok(Some(Operand::Literal(s)))
            }
            Some(Tok::Word(w)) if w == "_" && self.stop_follows(stops, 1) => {
                self.at += 1;
                Ok(None)
            }
            Some(Tok::Word(w)) if is_kb_path(w) && self.stop_follows(stops, 1) => {
                let r = KbRef::new(w.clone()).expect("checked path");
                self.at += 1;
                Ok(Some(Operand::Kb(r)))
            }
            _ => {
                let words = self.bare_words(stops)?;
                Ok(Some(Operand::Literal(words)))
            }
        }
    }

    fn value(&mut self, stops: &[char]) -> PResult<Value> {
        match self.peek() {
            Some(Tok::Quoted(s)) => {
                let s = s.clone();
                self.at += 1;
                self.require_stop(stops)?;
                Ok(Value::Literal(s))
            }
            Some(Tok::Word(w)) if w == ANSWER_VAR && self.stop_follows(stops, 1) => {
                self.at += 1;
                Ok(Value::AnswerVar)
            }
            _ => Ok(Value::Literal(self.bare_words(stops)?)),
        }
    }

    fn stop_follows(&self, stops: &[char], offset: usize) -> bool {
        matches!(
            self.toks.get(self.at + offset).map(|s| &s.tok),
            Some(t) if is_stop(t, stops)
        )
    }

    fn require_stop(&self, stops: &[char]) -> PResult<()> {
        match self.peek() {
            Some(t) if is_stop(t, stops) => Ok(()),
            _ => self.error(stop_desc(stops)),
        }
    }

    fn bare_words(&mut self, stops: &[char]) -> PResult<String> {
        let mut parts = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            parts.push(w.clone());
            self.at += 1;
        }
        if parts.is_empty() {
            return self.error(&["value"]);
        }
        self.require_stop(stops)?;
        Ok(parts.join(" "))
    }
}

enum Value {
    AnswerVar,
    Literal(String),
}

fn is_stop(t: &Tok, stops: &[char]) -> bool {
    match t {
        Tok::Close(c) => stops.contains(c),
        Tok::Comma => stops.contains(&','),
        _ => false,
    }
}

fn stop_desc(stops: &[char]) -> &'static [&'static str] {
    match stops {
        [')'] => &["')'"],
        [','] => &["','"],
        [',', ']'] => &["','", "']'"],
        [',', ')'] => &["','", "')'"],
        _ => &["delimiter"],
    }
}

/// Parses a logical form from its surface string.
pub fn parse_lf(text: &str) -> Result<LogicalForm, LfParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(LfParseError::Empty);
    }
    check_balance(&toks)?;
    let mut p = Parser {
        toks: &toks,
        at: 0,
        end: text.len(),
        nesting: 0,
    };
    let root = p.rel_expr()?;
    if p.at < toks.len() {
        return p.error(&["relation name", "'OR'", "'AND'", "end of input"]);
    }
    Ok(LogicalForm { root })
}
