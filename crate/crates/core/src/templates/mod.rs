//! Question templates: storage, paraphrase groups, normalization of raw
//! questions and instantiation with entities.

mod recognize;
mod store;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::generator::preprocess_entity;
use crate::lf::{FillError, LogicalForm};
use crate::schema::Schema;
use crate::text::{placeholder_type, tokenize};

pub use recognize::{EntityRecognizer, Gazetteer, Recognized};
pub use store::{
    check_placeholders, load_templates, placeholders_in, ParaphraseGroup, QuestionTemplate,
    TemplateError, TemplateSet,
};

/// An entity bound to a placeholder.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotFill {
    pub entity_type: String,
    pub surface: String,
    /// Annotation the surface came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl SlotFill {
    pub fn new(entity_type: impl Into<String>, surface: impl Into<String>) -> Self {
        Self {
            entity_type: entity_type.into(),
            surface: surface.into(),
            source: None,
        }
    }
}

/// Replaces recognized entities by `|type|` placeholders. The result is
/// lowercased and tokenized with single spaces; fills keep original case.
pub fn normalize_question(
    recognizer: &dyn EntityRecognizer,
    question: &str,
) -> (String, Vec<SlotFill>) {
    let found = recognizer.recognize(question);
    let mut parts: Vec<String> = Vec::new();
    let mut fills = Vec::new();
    let mut at = 0;
    let push_text = |parts: &mut Vec<String>, s: &str| {
        parts.extend(tokenize(s).into_iter().map(|t| t.text.to_lowercase()));
    };
    for r in found {
        if r.span.start < at || r.span.end > question.len() {
            continue;
        }
        push_text(&mut parts, &question[at..r.span.start]);
        parts.push(format!("|{}|", r.entity_type));
        fills.push(SlotFill::new(r.entity_type, r.surface));
        at = r.span.end;
    }
    push_text(&mut parts, &question[at..]);
    (parts.join(" "), fills)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstantiateError {
    #[error("template {template} has {expected} placeholders, got {provided} fills")]
    Arity {
        template: String,
        expected: usize,
        provided: usize,
    },
    #[error("fill {position} of template {template} is {found}, expected {expected}")]
    Type {
        template: String,
        position: usize,
        expected: String,
        found: String,
    },
    #[error("entity {0:?} is empty after preprocessing")]
    EmptyEntity(String),
    #[error(transparent)]
    Lf(#[from] FillError),
}

/// Fills a question template and its LF template with entities, given in
/// placeholder order. Surfaces are preprocessed first; question text outside
/// the placeholders is left untouched.
pub fn instantiate_template(
    t: &QuestionTemplate,
    lf_t: &LogicalForm,
    fills: &[SlotFill],
) -> Result<(String, LogicalForm), InstantiateError> {
    if fills.len() != t.placeholder_types.len() {
        return Err(InstantiateError::Arity {
            template: t.template_id.clone(),
            expected: t.placeholder_types.len(),
            provided: fills.len(),
        });
    }
    let mut surfaces = Vec::with_capacity(fills.len());
    for (i, (f, want)) in fills.iter().zip(&t.placeholder_types).enumerate() {
        if f.entity_type != *want {
            return Err(InstantiateError::Type {
                template: t.template_id.clone(),
                position: i,
                expected: want.clone(),
                found: f.entity_type.clone(),
            });
        }
        let s = preprocess_entity(&f.surface)
            .map_err(|_| InstantiateError::EmptyEntity(f.surface.clone()))?;
        surfaces.push(s);
    }
    let mut question = String::with_capacity(t.text.len());
    let mut at = 0;
    let mut next = surfaces.iter();
    for tok in tokenize(&t.text) {
        if placeholder_type(tok.text).is_some() {
            question.push_str(&t.text[at..tok.start]);
            question.push_str(next.next().expect("counted above"));
            at = tok.end;
        }
    }
    question.push_str(&t.text[at..]);

    let mut by_type: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (f, s) in fills.iter().zip(&surfaces) {
        by_type.entry(f.entity_type.clone()).or_default().push(s.clone());
    }
    let lf = lf_t.instantiate(&by_type)?;
    Ok((question, lf))
}

/// Schema checks for every template's LF: undeclared names and placeholder
/// types that cannot fill their events.
pub fn validate_templates(set: &TemplateSet, schema: &Schema) -> Vec<String> {
    let mut out = Vec::new();
    for g in set.groups() {
        if let Some(lf) = set.lf(&g.lf_template_id) {
            for v in schema
                .validate_lf(lf)
                .into_iter()
                .chain(schema.validate_placeholders(lf))
            {
                out.push(format!("LF template {}: {v}", g.lf_template_id));
            }
        }
    }
    out
}
