use std::cmp::Ordering;

use chrono::NaiveDate;

use super::kb::{MissingKbEntry, RefRangeKb};
use crate::corpus::{parse_date, DateConfig};
use crate::lf::{CompareOp, Operand, Operator, SortDirection};

/// Whether an attribute holds dates or numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Numeric,
    Date,
}

impl FieldKind {
    pub fn of(attribute: &str) -> Self {
        let a = attribute.to_ascii_lowercase();
        if a.ends_with("date") || a == "time" {
            FieldKind::Date
        } else {
            FieldKind::Numeric
        }
    }
}

/// A candidate answer with the values an operator may inspect.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCandidate<T> {
    pub item: T,
    /// Lab name used to resolve reference-range operands.
    pub lab: Option<String>,
    pub number: Option<f64>,
    pub date: Option<NaiveDate>,
    /// Whether the constrained field has any value at all.
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorOutcome<T> {
    pub kept: Vec<OperatorCandidate<T>>,
    /// Candidates dropped because the field had no usable value.
    pub unparseable: usize,
    /// Candidates dropped because their lab has no reference range.
    pub missing_lab: usize,
    /// Candidates dropped for naming a different lab than requested.
    pub other_lab: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OperatorError {
    #[error(transparent)]
    MissingKb(#[from] MissingKbEntry),
    #[error("operand {0:?} is not a valid value for this field")]
    BadOperand(String),
}

enum Key {
    Num(f64),
    Date(NaiveDate),
}

impl Key {
    fn cmp(&self, other: &Key) -> Option<Ordering> {
        match (self, other) {
            (Key::Num(a), Key::Num(b)) => a.partial_cmp(b),
            (Key::Date(a), Key::Date(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

fn key_of<T>(c: &OperatorCandidate<T>, field: FieldKind) -> Option<Key> {
    match field {
        FieldKind::Numeric => c.number.filter(|n| n.is_finite()).map(Key::Num),
        FieldKind::Date => c.date.map(Key::Date),
    }
}

fn holds(op: CompareOp, a: &Key, b: &Key) -> bool {
    match a.cmp(b) {
        None => false,
        Some(o) => match op {
            CompareOp::Lt => o == Ordering::Less,
            CompareOp::Gt => o == Ordering::Greater,
            CompareOp::Le => o != Ordering::Greater,
            CompareOp::Ge => o != Ordering::Less,
            CompareOp::Eq => o == Ordering::Equal,
        },
    }
}

/// Operand value for a candidate; `Ok(None)` means the candidate's lab has
/// no reference range.
fn operand_key(
    operand: &Operand,
    field: FieldKind,
    kb: &RefRangeKb,
    lab: Option<&str>,
    dates: DateConfig,
) -> Result<Option<Key>, OperatorError> {
    match operand {
        Operand::Literal(s) => match field {
            FieldKind::Numeric => s
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(|v| Some(Key::Num(v)))
                .ok_or_else(|| OperatorError::BadOperand(s.clone())),
            FieldKind::Date => parse_date(s, dates)
                .map(|d| Some(Key::Date(d)))
                .ok_or_else(|| OperatorError::BadOperand(s.clone())),
        },
        Operand::Kb(r) => {
            if field == FieldKind::Date {
                return Err(OperatorError::BadOperand(r.to_string()));
            }
            let Some(lab) = lab else { return Ok(None) };
            match kb.resolve(r, lab) {
                Ok(v) => Ok(Some(Key::Num(v))),
                Err(_) if kb.get(lab).is_none() => Ok(None),
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Applies one operator to candidate answers.
///
/// When `lab_name` is given the question names a specific lab: candidates for
/// other labs are dropped and a missing reference range for that lab is an
/// error. Otherwise each candidate's own lab resolves reference operands and
/// candidates without a range are dropped.
pub fn eval_operator<T: Clone>(
    op: &Operator,
    field: FieldKind,
    candidates: &[OperatorCandidate<T>],
    kb: &RefRangeKb,
    lab_name: Option<&str>,
    dates: DateConfig,
) -> Result<OperatorOutcome<T>, OperatorError> {
    let mut out = OperatorOutcome {
        kept: Vec::new(),
        unparseable: 0,
        missing_lab: 0,
        other_lab: 0,
    };
    if let Some(lab) = lab_name {
        for r in op.kb_refs() {
            kb.resolve(r, lab)?;
        }
    }
    let mut pool = Vec::new();
    for c in candidates {
        if let (Some(want), Some(have)) = (lab_name, c.lab.as_deref()) {
            if !want.eq_ignore_ascii_case(have) {
                out.other_lab += 1;
                continue;
            }
        }
        pool.push(c);
    }
    match op {
        Operator::NullCheck { is_null } => {
            out.kept = pool.into_iter().filter(|c| c.present != *is_null).cloned().collect();
        }
        Operator::Sort(dir) => {
            let mut keyed = Vec::new();
            for c in pool {
                match key_of(c, field) {
                    Some(k) => keyed.push((k, c)),
                    None => out.unparseable += 1,
                }
            }
            keyed.sort_by(|a, b| {
                let o = a.0.cmp(&b.0).unwrap_or(Ordering::Equal);
                match dir {
                    SortDirection::Asc => o,
                    SortDirection::Desc => o.reverse(),
                }
            });
            out.kept = keyed.into_iter().map(|(_, c)| c.clone()).collect();
        }
        Operator::Compare { op, operand } => {
            for c in pool {
                let lab = lab_name.or(c.lab.as_deref());
                let Some(rhs) = operand_key(operand, field, kb, lab, dates)? else {
                    out.missing_lab += 1;
                    continue;
                };
                match key_of(c, field) {
                    None => out.unparseable += 1,
                    Some(v) => {
                        if holds(*op, &v, &rhs) {
                            out.kept.push(c.clone());
                        }
                    }
                }
            }
        }
        Operator::Range { lo, hi } => {
            for c in pool {
                let lab = lab_name.or(c.lab.as_deref());
                let lo_k = match lo {
                    Some(o) => match operand_key(o, field, kb, lab, dates)? {
                        Some(k) => Some(k),
                        None => {
                            out.missing_lab += 1;
                            continue;
                        }
                    },
                    None => None,
                };
                let hi_k = match hi {
                    Some(o) => match operand_key(o, field, kb, lab, dates)? {
                        Some(k) => Some(k),
                        None => {
                            out.missing_lab += 1;
                            continue;
                        }
                    },
                    None => None,
                };
                match key_of(c, field) {
                    None => out.unparseable += 1,
                    Some(v) => {
                        let above = lo_k.as_ref().map_or(true, |l| holds(CompareOp::Ge, &v, l));
                        let below = hi_k.as_ref().map_or(true, |h| holds(CompareOp::Le, &v, h));
                        if above && below {
                            out.kept.push(c.clone());
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
