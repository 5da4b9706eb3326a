use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::AnnotationCorpus;
use crate::generator::QARecord;
use crate::text::words;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SourceCounts {
    pub records: usize,
    pub answered: usize,
    pub notes: usize,
}

/// Averaged dataset properties, lengths in tokens. A mean is `None` when
/// there is nothing to average.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DatasetStats {
    pub question_len: Option<f64>,
    /// Over line evidences; whole-note class evidence is excluded.
    pub evidence_len: Option<f64>,
    pub lf_len: Option<f64>,
    pub note_len: Option<f64>,
    /// Evidences per answered record.
    pub evidences_per_question: Option<f64>,
    /// Answered records per note.
    pub questions_per_note: Option<f64>,
    pub per_source: BTreeMap<String, SourceCounts>,
}

fn mean(sum: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| sum as f64 / n as f64)
}

pub fn corpus_stats(records: &[QARecord], corpus: &AnnotationCorpus) -> DatasetStats {
    let mut s = DatasetStats::default();
    let q: usize = records.iter().map(|r| words(&r.question).len()).sum();
    s.question_len = mean(q, records.len());
    let lf: usize = records.iter().map(|r| words(&r.lf.to_string()).len()).sum();
    s.lf_len = mean(lf, records.len());

    let (mut ev_tokens, mut ev_n) = (0, 0);
    for e in records.iter().flat_map(|r| &r.evidences) {
        if !e.is_whole_document() {
            ev_tokens += words(&e.line_text).len();
            ev_n += 1;
        }
    }
    s.evidence_len = mean(ev_tokens, ev_n);

    let docs = corpus.documents();
    let note: usize = docs.iter().map(|d| words(&d.text()).len()).sum();
    s.note_len = mean(note, docs.len());

    let answered: Vec<&QARecord> = records.iter().filter(|r| r.is_answered()).collect();
    let ev: usize = answered.iter().map(|r| r.evidences.len()).sum();
    s.evidences_per_question = mean(ev, answered.len());
    s.questions_per_note = mean(answered.len(), docs.len());

    for d in docs {
        let src = d.source.clone().unwrap_or_else(|| "unknown".into());
        s.per_source.entry(src).or_default().notes += 1;
    }
    for r in records {
        let src = r
            .evidences
            .first()
            .and_then(|e| corpus.source_of(&e.doc_id))
            .or_else(|| {
                corpus
                    .patient_documents(&r.patient_id)
                    .first()
                    .and_then(|d| d.source.as_deref())
            })
            .unwrap_or("unknown")
            .to_string();
        let c = s.per_source.entry(src).or_default();
        c.records += 1;
        c.answered += usize::from(r.is_answered());
    }
    s
}
