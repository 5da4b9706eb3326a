use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationCorpus, Document};
use crate::lf::{parse_lf, LogicalForm};
use crate::templates::SlotFill;

/// One answer evidence: a full note line, or the whole note (`line == 0`)
/// for class questions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EvidenceSpan {
    pub doc_id: String,
    pub line: usize,
    /// Character offsets of the evidence within the note text.
    pub char_start: usize,
    pub char_end: usize,
    pub line_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_entity: Option<String>,
}

impl EvidenceSpan {
    /// Evidence for line `line` of `doc`, with an optional answer given as a
    /// byte range within that line.
    pub fn for_line(doc: &Document, line: usize, answer: Option<std::ops::Range<usize>>) -> Option<Self> {
        let text = doc.line(line)?;
        let (char_start, char_end) = doc.line_char_span(line)?;
        Some(Self {
            doc_id: doc.doc_id.clone(),
            line,
            char_start,
            char_end,
            line_text: text.to_string(),
            answer_entity: answer.and_then(|r| text.get(r)).map(str::to_string),
        })
    }

    pub fn whole_document(doc: &Document) -> Self {
        Self {
            doc_id: doc.doc_id.clone(),
            line: 0,
            char_start: 0,
            char_end: doc.char_len(),
            line_text: doc.text(),
            answer_entity: None,
        }
    }

    pub fn is_whole_document(&self) -> bool {
        self.line == 0
    }
}

mod lf_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(lf: &LogicalForm, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(lf)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<LogicalForm, D::Error> {
        let s = String::deserialize(d)?;
        parse_lf(&s).map_err(serde::de::Error::custom)
    }
}

/// An instantiated question with its logical form and answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QARecord {
    pub record_id: String,
    pub patient_id: String,
    pub question: String,
    #[serde(rename = "logical_form", with = "lf_string")]
    pub lf: LogicalForm,
    pub lf_template_id: String,
    pub question_template_id: String,
    pub evidences: Vec<EvidenceSpan>,
    /// Sorted label set for class questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_class: Option<Vec<String>>,
    pub slot_fills: Vec<SlotFill>,
}

impl QARecord {
    /// Has an answer (evidence or class); otherwise the record only pairs a
    /// question with its logical form.
    pub fn is_answered(&self) -> bool {
        !self.evidences.is_empty() || self.answer_class.is_some()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Reads records written one JSON object per line.
pub fn read_records(text: &str) -> Result<Vec<QARecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

pub fn write_records(records: &[QARecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_json_line());
        s.push('\n');
    }
    s
}

/// Lists every evidence whose text, offsets or answer disagree with the
/// corpus, and every record whose LF still holds placeholders.
pub fn check_evidence_integrity(records: &[QARecord], corpus: &AnnotationCorpus) -> Vec<String> {
    let mut out = Vec::new();
    let mut texts: std::collections::HashMap<&str, Vec<char>> = std::collections::HashMap::new();
    for r in records {
        if r.lf.has_placeholders() {
            out.push(format!("{}: logical form has placeholders", r.record_id));
        }
        for e in &r.evidences {
            let Some(doc) = corpus.document(&e.doc_id) else {
                out.push(format!("{}: unknown document {}", r.record_id, e.doc_id));
                continue;
            };
            let expected = if e.line == 0 {
                Some(EvidenceSpan::whole_document(doc))
            } else {
                EvidenceSpan::for_line(doc, e.line, None)
            };
            let Some(expected) = expected else {
                out.push(format!("{}: {} has no line {}", r.record_id, e.doc_id, e.line));
                continue;
            };
            if expected.line_text != e.line_text {
                out.push(format!("{}: text of {}:{} differs", r.record_id, e.doc_id, e.line));
            }
            if (expected.char_start, expected.char_end) != (e.char_start, e.char_end) {
                out.push(format!("{}: offsets of {}:{} differ", r.record_id, e.doc_id, e.line));
            }
            let chars = texts
                .entry(doc.doc_id.as_str())
                .or_insert_with(|| doc.text().chars().collect());
            let full: String = chars
                .get(e.char_start..e.char_end.min(chars.len()))
                .unwrap_or_default()
                .iter()
                .collect();
            if full != e.line_text {
                out.push(format!("{}: span of {}:{} does not cover its text", r.record_id, e.doc_id, e.line));
            }
            if let Some(a) = &e.answer_entity {
                if a.is_empty() || !e.line_text.contains(a.as_str()) {
                    out.push(format!("{}: answer {a:?} not in {}:{}", r.record_id, e.doc_id, e.line));
                }
            }
        }
    }
    out
}
