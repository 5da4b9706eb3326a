use std::collections::BTreeMap;
use std::fmt;

/// The answer variable, written `x` in surface syntax.
pub const ANSWER_VAR: &str = "x";

/// Argument of a medical event.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventArg {
    /// Typed slot filled at instantiation time, written `|type|`.
    Placeholder(String),
    /// The requested entity.
    AnswerVar,
    Literal(String),
}

/// Value side of an attribute slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Binding {
    AnswerVar,
    Literal(String),
}

/// Reference into an external knowledge base, e.g. `lab.refhigh`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KbRef {
    path: String,
}

impl KbRef {
    /// Builds a reference from a dotted path; requires at least two
    /// identifier segments.
    pub fn new(path: impl Into<String>) -> Option<Self> {
        let path = path.into();
        if is_kb_path(&path) {
            Some(Self { path })
        } else {
            None
        }
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.path.split('.')
    }
}

impl fmt::Display for KbRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.path)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_kb_path(s: &str) -> bool {
    let mut n = 0;
    for seg in s.split('.') {
        if !is_identifier(seg) {
            return false;
        }
        n += 1;
    }
    n >= 2
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Literal(String),
    Kb(KbRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
            CompareOp::Eq => "=",
        }
    }

    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CompareOp::Lt => lhs < rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SortDirection {
    Asc,
    Desc,
}

/// Constraint attached to an attribute slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operator {
    Sort(SortDirection),
    /// At least one bound is present.
    Range {
        lo: Option<Operand>,
        hi: Option<Operand>,
    },
    /// `is_null == true` keeps candidates without a value for the field.
    NullCheck {
        is_null: bool,
    },
    Compare {
        op: CompareOp,
        operand: Operand,
    },
}

impl Operator {
    pub fn kb_refs(&self) -> Vec<&KbRef> {
        let operands: Vec<&Operand> = match self {
            Operator::Range { lo, hi } => lo.iter().chain(hi.iter()).collect(),
            Operator::Compare { operand, .. } => vec![operand],
            Operator::Sort(_) | Operator::NullCheck { .. } => Vec::new(),
        };
        operands
            .into_iter()
            .filter_map(|o| match o {
                Operand::Kb(k) => Some(k),
                Operand::Literal(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeSlot {
    pub name: String,
    pub binding: Binding,
    pub operator: Option<Operator>,
}

impl AttributeSlot {
    pub fn requests_answer(&self) -> bool {
        self.binding == Binding::AnswerVar
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventNode {
    pub name: String,
    pub arg: EventArg,
    pub attributes: Vec<AttributeSlot>,
}

impl EventNode {
    pub fn new(name: impl Into<String>, arg: EventArg) -> Self {
        Self {
            name: name.into(),
            arg,
            attributes: Vec::new(),
        }
    }

    pub fn with_attr(mut self, name: impl Into<String>, binding: Binding) -> Self {
        self.attributes.push(AttributeSlot {
            name: name.into(),
            binding,
            operator: None,
        });
        self
    }

    pub fn with_op(mut self, name: impl Into<String>, binding: Binding, op: Operator) -> Self {
        self.attributes.push(AttributeSlot {
            name: name.into(),
            binding,
            operator: Some(op),
        });
        self
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSlot> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Connective {
    Or,
    And,
    /// Named relation from the schema, e.g. `conducted/reveals`.
    Rel(String),
}

impl Connective {
    pub fn is_relation(&self) -> bool {
        matches!(self, Connective::Rel(_))
    }
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Connective::Or => f.write_str("OR"),
            Connective::And => f.write_str("AND"),
            Connective::Rel(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LfNode {
    Event(EventNode),
    Composite {
        left: Box<LfNode>,
        connective: Connective,
        right: Box<LfNode>,
    },
}

impl LfNode {
    pub fn composite(left: LfNode, connective: Connective, right: LfNode) -> Self {
        LfNode::Composite {
            left: Box::new(left),
            connective,
            right: Box::new(right),
        }
    }

    pub fn events(&self) -> Vec<&EventNode> {
        let mut out = Vec::new();
        self.collect_events(&mut out);
        out
    }

    fn collect_events<'a>(&'a self, out: &mut Vec<&'a EventNode>) {
        match self {
            LfNode::Event(e) => out.push(e),
            LfNode::Composite { left, right, .. } => {
                left.collect_events(out);
                right.collect_events(out);
            }
        }
    }

    pub fn connectives(&self) -> Vec<&Connective> {
        let mut out = Vec::new();
        self.collect_connectives(&mut out);
        out
    }

    fn collect_connectives<'a>(&'a self, out: &mut Vec<&'a Connective>) {
        if let LfNode::Composite {
            left,
            connective,
            right,
        } = self
        {
            left.collect_connectives(out);
            out.push(connective);
            right.collect_connectives(out);
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            LfNode::Event(_) => 1,
            LfNode::Composite { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn map_events(&self, f: &mut impl FnMut(&EventNode) -> EventNode) -> LfNode {
        match self {
            LfNode::Event(e) => LfNode::Event(f(e)),
            LfNode::Composite {
                left,
                connective,
                right,
            } => LfNode::Composite {
                left: Box::new(left.map_events(f)),
                connective: connective.clone(),
                right: Box::new(right.map_events(f)),
            },
        }
    }
}

/// A parsed logical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LogicalForm {
    pub root: LfNode,
}

/// Error raised when placeholders cannot be substituted.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FillError {
    #[error("no fill of type {0} for placeholder")]
    Missing(String),
    #[error("{provided} fills of type {entity_type} for {expected} placeholders")]
    Arity {
        entity_type: String,
        expected: usize,
        provided: usize,
    },
}

impl LogicalForm {
    pub fn new(root: LfNode) -> Self {
        Self { root }
    }

    pub fn event(e: EventNode) -> Self {
        Self {
            root: LfNode::Event(e),
        }
    }

    pub fn events(&self) -> Vec<&EventNode> {
        self.root.events()
    }

    /// Placeholder entity types in left-to-right order, with repetition.
    pub fn placeholders(&self) -> Vec<&str> {
        self.events()
            .into_iter()
            .filter_map(|e| match &e.arg {
                EventArg::Placeholder(t) => Some(t.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn has_placeholders(&self) -> bool {
        !self.placeholders().is_empty()
    }

    pub fn has_answer_var(&self) -> bool {
        self.events().iter().any(|e| {
            e.arg == EventArg::AnswerVar || e.attributes.iter().any(|a| a.requests_answer())
        })
    }

    pub fn relation_names(&self) -> Vec<&str> {
        self.root
            .connectives()
            .into_iter()
            .filter_map(|c| match c {
                Connective::Rel(n) => Some(n.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn kb_refs(&self) -> Vec<&KbRef> {
        self.events()
            .into_iter()
            .flat_map(|e| e.attributes.iter())
            .filter_map(|a| a.operator.as_ref())
            .flat_map(|o| o.kb_refs())
            .collect()
    }

    /// Replaces placeholders with literal entity surfaces.
    ///
    /// `fills` maps an entity type to the surfaces given for it, in order.
    /// When a type has exactly one fill, every placeholder of that type
    /// receives it (e.g. `{LabEvent (|test|) OR ProcedureEvent (|test|)}`
    /// refers to one test). Otherwise the number of fills must equal the
    /// number of placeholders of that type and they are assigned in order.
    pub fn instantiate(&self, fills: &BTreeMap<String, Vec<String>>) -> Result<Self, FillError> {
        let mut needed: BTreeMap<&str, usize> = BTreeMap::new();
        for t in self.placeholders() {
            *needed.entry(t).or_default() += 1;
        }
        for (t, &n) in &needed {
            match fills.get(*t).map(Vec::len) {
                None | Some(0) => return Err(FillError::Missing((*t).to_string())),
                Some(1) => {}
                Some(k) if k == n => {}
                Some(k) => {
                    return Err(FillError::Arity {
                        entity_type: (*t).to_string(),
                        expected: n,
                        provided: k,
                    })
                }
            }
        }
        let mut cursor: BTreeMap<String, usize> = BTreeMap::new();
        let root = self.root.map_events(&mut |e| {
            let mut e = e.clone();
            if let EventArg::Placeholder(t) = &e.arg {
                let list = &fills[t];
                let idx = cursor.entry(t.clone()).or_default();
                let surface = if list.len() == 1 {
                    list[0].clone()
                } else {
                    list[*idx].clone()
                };
                *idx += 1;
                e.arg = EventArg::Literal(surface);
            }
            e
        });
        Ok(Self { root })
    }
}
