//! Random logical forms for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ast::*;

const EVENTS: &[&str] = &[
    "MedicationEvent",
    "LabEvent",
    "ConditionEvent",
    "SymptomEvent",
    "ProcedureEvent",
];
const ATTRS: &[&str] = &["dosage", "date", "result", "enddate", "startdate", "frequency", "status"];
const RELATIONS: &[&str] = &["given", "conducted/reveals", "improves/worsens/causes", "conducted", "reveals"];
const TYPES: &[&str] = &["problem", "test", "treatment", "mode", "medication"];
const LITERALS: &[&str] = &[
    "insulin",
    "ascending aortic root replacement",
    "40mg",
    "2115-12-14",
    "100",
    "x",
    "_",
    "a, b",
    "lab.refmid",
    "O'Brien",
    "",
    "(paren)",
    "say \"hi\"",
    "OR",
    "x ray",
];
const KB: &[&str] = &["lab.refhigh", "lab.reflow"];

fn literal<R: Rng + ?Sized>(rng: &mut R) -> String {
    (*LITERALS.choose(rng).expect("non-empty")).to_string()
}

fn operand<R: Rng + ?Sized>(rng: &mut R) -> Operand {
    if rng.gen_bool(0.3) {
        Operand::Kb(KbRef::new(*KB.choose(rng).expect("non-empty")).expect("valid path"))
    } else {
        Operand::Literal(literal(rng))
    }
}

fn operator<R: Rng + ?Sized>(rng: &mut R) -> Operator {
    match rng.gen_range(0..4) {
        0 => Operator::Sort(if rng.gen() {
            SortDirection::Asc
        } else {
            SortDirection::Desc
        }),
        1 => {
            let lo = rng.gen_bool(0.7).then(|| operand(rng));
            let hi = if lo.is_none() || rng.gen_bool(0.7) {
                Some(operand(rng))
            } else {
                None
            };
            Operator::Range { lo, hi }
        }
        2 => Operator::NullCheck { is_null: rng.gen() },
        _ => {
            let op = *[CompareOp::Lt, CompareOp::Gt, CompareOp::Le, CompareOp::Ge, CompareOp::Eq]
                .choose(rng)
                .expect("non-empty");
            Operator::Compare {
                op,
                operand: operand(rng),
            }
        }
    }
}

pub fn sample_event<R: Rng + ?Sized>(rng: &mut R) -> EventNode {
    let name = *EVENTS.choose(rng).expect("non-empty");
    let arg = match rng.gen_range(0..3) {
        0 => EventArg::AnswerVar,
        1 => EventArg::Placeholder((*TYPES.choose(rng).expect("non-empty")).to_string()),
        _ => EventArg::Literal(literal(rng)),
    };
    let mut event = EventNode::new(name, arg);
    let n = rng.gen_range(0..=3);
    for attr in ATTRS.choose_multiple(rng, n) {
        let binding = if rng.gen_bool(0.6) {
            Binding::AnswerVar
        } else {
            Binding::Literal(literal(rng))
        };
        let operator = rng.gen_bool(0.4).then(|| operator(rng));
        event.attributes.push(AttributeSlot {
            name: (*attr).to_string(),
            binding,
            operator,
        });
    }
    event
}

fn sample_node<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> LfNode {
    if depth <= 1 || rng.gen_bool(0.35) {
        return LfNode::Event(sample_event(rng));
    }
    let connective = match rng.gen_range(0..4) {
        0 => Connective::Or,
        1 => Connective::And,
        _ => Connective::Rel((*RELATIONS.choose(rng).expect("non-empty")).to_string()),
    };
    let left = sample_node(rng, depth - 1);
    let right = sample_node(rng, depth - 1);
    LfNode::composite(left, connective, right)
}

/// Samples a grammatical logical form whose tree depth is at most
/// `max_depth` (an event alone has depth 1).
pub fn sample_lf<R: Rng + ?Sized>(rng: &mut R, max_depth: usize) -> LogicalForm {
    LogicalForm::new(sample_node(rng, max_depth.max(1)))
}
