use super::ast::*;

/// Structural properties of a logical form used to characterize question
/// templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct LfProperties {
    /// An attribute binds the answer variable.
    pub fine_grained_answer: bool,
    /// An event argument is the answer variable.
    pub coarse_grained_answer: bool,
    pub has_operator: bool,
    pub needs_kb: bool,
    pub relation_count: usize,
}

pub fn classify_lf(lf: &LogicalForm) -> LfProperties {
    let mut p = LfProperties::default();
    for e in lf.events() {
        p.coarse_grained_answer |= e.arg == EventArg::AnswerVar;
        for a in &e.attributes {
            p.fine_grained_answer |= a.requests_answer();
            if let Some(op) = &a.operator {
                p.has_operator = true;
                p.needs_kb |= !op.kb_refs().is_empty();
            }
        }
    }
    p.relation_count = lf.root.connectives().iter().filter(|c| c.is_relation()).count();
    p
}
