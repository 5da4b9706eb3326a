use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::engine::{Strategy, Tally};
use super::record::{check_evidence_integrity, QARecord};
use crate::corpus::AnnotationCorpus;
use crate::templates::TemplateSet;

/// Dataset size for one source: answered records (question-answer pairs),
/// distinct question/LF pairs and notes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SourceRow {
    pub source: String,
    pub qa: usize,
    pub ql: usize,
    pub notes: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StrategyCounts {
    pub records: usize,
    pub answered: usize,
    pub evidences: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GenerationReport {
    pub sources: Vec<SourceRow>,
    pub total: SourceRow,
    pub strategies: BTreeMap<Strategy, StrategyCounts>,
    /// Question types (LF templates) with at least one answered record.
    pub question_types_answered: usize,
    pub question_types: usize,
    pub skipped: BTreeMap<String, usize>,
    pub empty_entities: usize,
    pub unparseable_values: usize,
    pub missing_lab_ranges: usize,
    pub integrity_violations: usize,
}

impl GenerationReport {
    pub(crate) fn build(
        corpus: &AnnotationCorpus,
        templates: &TemplateSet,
        records: &[QARecord],
        strategies: &HashMap<&str, Strategy>,
        tally: Tally,
    ) -> Self {
        let source_of = |r: &QARecord| -> String {
            r.evidences
                .first()
                .and_then(|e| corpus.source_of(&e.doc_id))
                .or_else(|| {
                    corpus
                        .patient_documents(&r.patient_id)
                        .first()
                        .and_then(|d| d.source.as_deref())
                })
                .unwrap_or("unknown")
                .to_string()
        };
        let mut rows: BTreeMap<String, (usize, BTreeSet<(&str, String)>, usize)> = BTreeMap::new();
        let mut all_ql = BTreeSet::new();
        for d in corpus.documents() {
            let s = d.source.clone().unwrap_or_else(|| "unknown".into());
            rows.entry(s).or_default().2 += 1;
        }
        let mut counts: BTreeMap<Strategy, StrategyCounts> = BTreeMap::new();
        let mut answered_types = BTreeSet::new();
        for r in records {
            let row = rows.entry(source_of(r)).or_default();
            let lf = r.lf.to_string();
            row.1.insert((r.question.as_str(), lf.clone()));
            all_ql.insert((r.question.as_str(), lf));
            if let Some(s) = strategies.get(r.question_template_id.as_str()) {
                let c = counts.entry(*s).or_default();
                c.records += 1;
                c.evidences += r.evidences.len();
                if r.is_answered() {
                    c.answered += 1;
                }
            }
            if r.is_answered() {
                row.0 += 1;
                answered_types.insert(r.lf_template_id.as_str());
            }
        }
        let sources: Vec<SourceRow> = rows
            .into_iter()
            .map(|(source, (qa, ql, notes))| SourceRow {
                source,
                qa,
                ql: ql.len(),
                notes,
            })
            .collect();
        let total = SourceRow {
            source: "total".into(),
            qa: sources.iter().map(|r| r.qa).sum(),
            ql: all_ql.len(),
            notes: corpus.documents().len(),
        };
        Self {
            sources,
            total,
            strategies: counts,
            question_types_answered: answered_types.len(),
            question_types: templates.lf_count(),
            skipped: tally.skipped,
            empty_entities: tally.empty_entities,
            unparseable_values: tally.unparseable_values,
            missing_lab_ranges: tally.missing_lab_ranges,
            integrity_violations: check_evidence_integrity(records, corpus).len(),
        }
    }

    /// Plain-text summary: one row per source, then strategy counts.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let w = self
            .sources
            .iter()
            .map(|r| r.source.len())
            .max()
            .unwrap_or(0)
            .max(8);
        writeln!(s, "{:<w$}  {:>8}  {:>8}  {:>6}", "source", "#QA", "#QL", "#notes").unwrap();
        for r in self.sources.iter().chain(std::iter::once(&self.total)) {
            writeln!(s, "{:<w$}  {:>8}  {:>8}  {:>6}", r.source, r.qa, r.ql, r.notes).unwrap();
        }
        writeln!(s).unwrap();
        writeln!(s, "{:<w$}  {:>8}  {:>8}  {:>9}", "strategy", "records", "answered", "evidences").unwrap();
        for (k, c) in &self.strategies {
            writeln!(s, "{:<w$}  {:>8}  {:>8}  {:>9}", k.name(), c.records, c.answered, c.evidences).unwrap();
        }
        writeln!(s).unwrap();
        writeln!(
            s,
            "question types with answers: {}/{}",
            self.question_types_answered, self.question_types
        )
        .unwrap();
        writeln!(
            s,
            "empty entities: {}  unparseable values: {}  labs without range: {}  integrity violations: {}",
            self.empty_entities, self.unparseable_values, self.missing_lab_ranges, self.integrity_violations
        )
        .unwrap();
        for (reason, n) in &self.skipped {
            writeln!(s, "skipped {n}: {reason}").unwrap();
        }
        s
    }
}

/// A seeded sample of up to `n` records for manually checking question
/// wording, in record order.
pub fn audit_sample(records: &[QARecord], n: usize, seed: u64) -> Vec<&QARecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut rng);
    idx.truncate(n);
    idx.sort_unstable();
    idx.into_iter().map(|i| &records[i]).collect()
}
