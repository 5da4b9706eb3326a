use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::lf::{LfTemplate, LogicalForm};
use crate::text::{placeholder_type, tokenize};

/// A question with typed placeholders, bound to one LF template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionTemplate {
    pub template_id: String,
    pub text: String,
    pub lf_template_id: String,
    /// Placeholder types in order of appearance in `text`.
    pub placeholder_types: Vec<String>,
    /// `key=value` flags from the optional fourth column, e.g. `class=obesity`.
    pub flags: BTreeMap<String, String>,
}

impl QuestionTemplate {
    /// The class-prediction task this template asks about, if flagged.
    pub fn class_task(&self) -> Option<&str> {
        self.flags.get("class").map(String::as_str)
    }

    pub fn distinct_types(&self) -> BTreeSet<&str> {
        self.placeholder_types.iter().map(String::as_str).collect()
    }
}

/// Templates that share an LF template, i.e. paraphrases of one question type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParaphraseGroup {
    pub lf_template_id: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    templates: Vec<QuestionTemplate>,
    groups: Vec<ParaphraseGroup>,
    lfs: BTreeMap<String, LogicalForm>,
    index: BTreeMap<String, usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected 'template_id<TAB>lf_template_id<TAB>text[<TAB>flags]'")]
    Malformed { line: usize },
    #[error("line {line}: duplicate template id {id}")]
    Duplicate { line: usize, id: String },
    #[error("line {line}: template {id} refers to unknown LF template {lf_id}")]
    DanglingLf {
        line: usize,
        id: String,
        lf_id: String,
    },
    #[error("line {line}: placeholders of template {id} do not match its LF: {detail}")]
    PlaceholderMismatch {
        line: usize,
        id: String,
        detail: String,
    },
    #[error("line {line}: bad flag {flag:?}")]
    BadFlag { line: usize, flag: String },
}

/// Placeholder types in `text`, in order.
pub fn placeholders_in(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter_map(|t| placeholder_type(t.text).map(str::to_string))
        .collect()
}

fn count(types: &[impl AsRef<str>]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for t in types {
        *m.entry(t.as_ref().to_string()).or_default() += 1;
    }
    m
}

/// Checks that question and LF placeholders agree by type; a single question
/// placeholder may stand for several LF occurrences of the same type.
pub fn check_placeholders(question: &[String], lf: &LogicalForm) -> Result<(), String> {
    let q = count(question);
    let l = count(&lf.placeholders());
    for (t, n) in &q {
        match l.get(t) {
            None => return Err(format!("|{t}| not in LF")),
            Some(m) if *n != 1 && n != m => {
                return Err(format!("{n} |{t}| in question, {m} in LF"))
            }
            _ => {}
        }
    }
    if let Some(t) = l.keys().find(|t| !q.contains_key(*t)) {
        return Err(format!("|{t}| in LF but not in question"));
    }
    Ok(())
}

impl TemplateSet {
    pub fn parse(text: &str, lf_templates: &[LfTemplate]) -> Result<Self, TemplateError> {
        let lfs: BTreeMap<String, LogicalForm> = lf_templates
            .iter()
            .map(|t| (t.id.clone(), t.lf.clone()))
            .collect();
        let mut templates = Vec::new();
        let mut index = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if !(3..=4).contains(&cols.len()) {
                return Err(TemplateError::Malformed { line });
            }
            let (id, lf_id, body) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            if id.is_empty() || lf_id.is_empty() || body.is_empty() {
                return Err(TemplateError::Malformed { line });
            }
            let mut flags = BTreeMap::new();
            if let Some(f) = cols.get(3) {
                for flag in f.split(';').map(str::trim).filter(|f| !f.is_empty()) {
                    let (k, v) = flag.split_once('=').ok_or_else(|| TemplateError::BadFlag {
                        line,
                        flag: flag.to_string(),
                    })?;
                    flags.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            let lf = lfs.get(lf_id).ok_or_else(|| TemplateError::DanglingLf {
                line,
                id: id.to_string(),
                lf_id: lf_id.to_string(),
            })?;
            let placeholder_types = placeholders_in(body);
            check_placeholders(&placeholder_types, lf).map_err(|detail| {
                TemplateError::PlaceholderMismatch {
                    line,
                    id: id.to_string(),
                    detail,
                }
            })?;
            if index.insert(id.to_string(), templates.len()).is_some() {
                return Err(TemplateError::Duplicate {
                    line,
                    id: id.to_string(),
                });
            }
            templates.push(QuestionTemplate {
                template_id: id.to_string(),
                text: body.to_string(),
                lf_template_id: lf_id.to_string(),
                placeholder_types,
                flags,
            });
        }
        let mut by_lf: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for t in &templates {
            by_lf
                .entry(t.lf_template_id.clone())
                .or_default()
                .push(t.template_id.clone());
        }
        let groups = by_lf
            .into_iter()
            .map(|(lf_template_id, members)| ParaphraseGroup {
                lf_template_id,
                members,
            })
            .collect();
        Ok(Self {
            templates,
            groups,
            lfs,
            index,
        })
    }

    pub fn templates(&self) -> &[QuestionTemplate] {
        &self.templates
    }

    /// Paraphrase groups ordered by LF template id.
    pub fn groups(&self) -> &[ParaphraseGroup] {
        &self.groups
    }

    pub fn get(&self, template_id: &str) -> Option<&QuestionTemplate> {
        self.index.get(template_id).map(|&i| &self.templates[i])
    }

    pub fn lf(&self, lf_template_id: &str) -> Option<&LogicalForm> {
        self.lfs.get(lf_template_id)
    }

    /// LF template of a question template.
    pub fn lf_for(&self, template_id: &str) -> Option<&LogicalForm> {
        self.get(template_id).and_then(|t| self.lf(&t.lf_template_id))
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Number of distinct LF templates referenced by the question templates.
    pub fn lf_count(&self) -> usize {
        self.groups.len()
    }

    /// A copy restricted to the given template ids (order preserved).
    pub fn subset(&self, ids: &BTreeSet<String>) -> Self {
        let templates: Vec<QuestionTemplate> = self
            .templates
            .iter()
            .filter(|t| ids.contains(&t.template_id))
            .cloned()
            .collect();
        let index = templates
            .iter()
            .enumerate()
            .map(|(i, t)| (t.template_id.clone(), i))
            .collect();
        let groups = self
            .groups
            .iter()
            .filter_map(|g| {
                let members: Vec<String> =
                    g.members.iter().filter(|m| ids.contains(*m)).cloned().collect();
                (!members.is_empty()).then(|| ParaphraseGroup {
                    lf_template_id: g.lf_template_id.clone(),
                    members,
                })
            })
            .collect();
        Self {
            templates,
            groups,
            lfs: self.lfs.clone(),
            index,
        }
    }
}

pub fn load_templates(path: &Path, lf_templates: &[LfTemplate]) -> Result<TemplateSet, TemplateError> {
    let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    TemplateSet::parse(&text, lf_templates)
}
