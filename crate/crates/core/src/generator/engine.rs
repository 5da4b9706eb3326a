use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::Range;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::kb::RefRangeKb;
use super::operators::{eval_operator, FieldKind, OperatorCandidate, OperatorError};
use super::preprocess::preprocess_entity;
use super::record::{EvidenceSpan, QARecord};
use super::report::GenerationReport;
use crate::corpus::{find_date, parse_date, AnnotationCorpus, ConceptAnn, DateConfig, Document};
use crate::lf::{classify_lf, Binding, Connective, EventArg, EventNode, LfNode, LogicalForm};
use crate::schema::Schema;
use crate::templates::{instantiate_template, QuestionTemplate, SlotFill, TemplateSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Pattern for numbers read from note text when a value has no
    /// attribute annotation.
    pub value_pattern: String,
    pub dates: DateConfig,
    /// Size of the question sample written for manual audit.
    pub audit_sample: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            value_pattern: r"[-+]?\d+(?:\.\d+)?".into(),
            dates: DateConfig::default(),
            audit_sample: 500,
            seed: 42,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("bad value pattern: {0}")]
    BadPattern(#[from] regex::Error),
}

/// How a template's answers are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Attribute,
    Relation,
    Operator,
    Class,
}

impl Strategy {
    pub fn of(t: &QuestionTemplate, lf: &LogicalForm) -> Self {
        let p = classify_lf(lf);
        if t.class_task().is_some() {
            Strategy::Class
        } else if p.relation_count > 0 {
            Strategy::Relation
        } else if p.has_operator {
            Strategy::Operator
        } else {
            Strategy::Attribute
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Attribute => "attribute",
            Strategy::Relation => "relation",
            Strategy::Operator => "operator",
            Strategy::Class => "class",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub records: Vec<QARecord>,
    pub report: GenerationReport,
}

/// Per-worker counters merged into the report.
#[derive(Debug, Default, Clone)]
pub(crate) struct Tally {
    pub skipped: BTreeMap<String, usize>,
    pub empty_entities: usize,
    pub unparseable_values: usize,
    pub missing_lab_ranges: usize,
}

impl Tally {
    fn skip(&mut self, reason: impl Into<String>) {
        *self.skipped.entry(reason.into()).or_default() += 1;
    }

    fn merge(&mut self, o: Tally) {
        for (k, v) in o.skipped {
            *self.skipped.entry(k).or_default() += v;
        }
        self.empty_entities += o.empty_entities;
        self.unparseable_values += o.unparseable_values;
        self.missing_lab_ranges += o.missing_lab_ranges;
    }
}

struct Ctx<'a> {
    corpus: &'a AnnotationCorpus,
    schema: &'a Schema,
    kb: &'a RefRangeKb,
    dates: DateConfig,
    value_re: Regex,
}

/// A record before ids are assigned, with its ordering anchor.
struct Draft {
    anchor: (String, usize),
    record: QARecord,
}

#[derive(Clone, Copy)]
struct Cand<'a> {
    concept: &'a ConceptAnn,
    event: &'a EventNode,
}

type Bound<'a> = HashMap<&'a str, &'a ConceptAnn>;

/// Emits one record per (template, binding) pair over every patient.
pub fn generate_dataset(
    corpus: &AnnotationCorpus,
    templates: &TemplateSet,
    schema: &Schema,
    kb: &RefRangeKb,
    config: &GeneratorConfig,
) -> Result<Generated, GenerateError> {
    let ctx = Ctx {
        corpus,
        schema,
        kb,
        dates: config.dates,
        value_re: Regex::new(&config.value_pattern)?,
    };
    let mut tally = Tally::default();
    let mut usable: Vec<(&QuestionTemplate, &LogicalForm, Strategy)> = Vec::new();
    for t in templates.templates() {
        let Some(lf) = templates.lf(&t.lf_template_id) else {
            tally.skip(format!("template {}: unknown LF template", t.template_id));
            continue;
        };
        let arity = t.distinct_types().len();
        let doubled = arity == 2 && t.placeholder_types.len() != 2;
        if t.class_task().is_some() && arity > 0 || arity > 2 || doubled {
            log::warn!("template {} has an unsupported placeholder set", t.template_id);
            tally.skip(format!("template {}: unsupported placeholders", t.template_id));
            continue;
        }
        usable.push((t, lf, Strategy::of(t, lf)));
    }

    let patients: Vec<&str> = corpus.patient_ids().collect();
    let parts: Vec<(Vec<Draft>, Tally)> = patients
        .par_iter()
        .map(|p| {
            let mut drafts = Vec::new();
            let mut tally = Tally::default();
            for &(t, lf, _) in &usable {
                ctx.patient_template(p, t, lf, &mut drafts, &mut tally);
            }
            (drafts, tally)
        })
        .collect();

    let mut drafts = Vec::new();
    for (d, t) in parts {
        drafts.extend(d);
        tally.merge(t);
    }
    let mut keyed: Vec<((String, usize, String, String, String), String, QARecord)> = drafts
        .into_iter()
        .map(|d| {
            let json = d.record.to_json_line();
            let key = (
                d.anchor.0,
                d.anchor.1,
                d.record.question_template_id.clone(),
                d.record.question.clone(),
                d.record.lf.to_string(),
            );
            (key, json, d.record)
        })
        .collect();
    keyed.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    keyed.dedup_by(|a, b| a.1 == b.1);
    let records: Vec<QARecord> = keyed
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, mut r))| {
            r.record_id = format!("r{:06}", i + 1);
            r
        })
        .collect();
    let strategies: HashMap<&str, Strategy> = usable
        .iter()
        .map(|(t, _, s)| (t.template_id.as_str(), *s))
        .collect();
    let report = GenerationReport::build(corpus, templates, &records, &strategies, tally);
    Ok(Generated { records, report })
}

impl<'a> Ctx<'a> {
    fn patient_template(
        &self,
        patient: &str,
        t: &QuestionTemplate,
        lf: &'a LogicalForm,
        out: &mut Vec<Draft>,
        tally: &mut Tally,
    ) {
        let docs = self.corpus.patient_documents(patient);
        let Some(first) = docs.first() else { return };
        if let Some(task) = t.class_task() {
            for d in &docs {
                let labels = self
                    .corpus
                    .class_for(&d.doc_id, task)
                    .or_else(|| self.corpus.class_for(patient, task));
                let (evidences, answer_class) = match labels {
                    Some(c) => (
                        vec![EvidenceSpan::whole_document(d)],
                        Some(c.labels.iter().cloned().collect()),
                    ),
                    None => (Vec::new(), None),
                };
                self.emit(patient, t, lf, &[], (d.doc_id.clone(), 0), evidences, answer_class, out, tally);
            }
            return;
        }

        let types: Vec<&str> = t.distinct_types().into_iter().collect();
        match types.len() {
            0 => {
                let ev = self.answer(patient, lf, &Bound::new(), tally);
                if let Some(ev) = ev {
                    self.emit(patient, t, lf, &[], (first.doc_id.clone(), 0), ev, None, out, tally);
                }
            }
            1 => {
                let ty = types[0];
                for d in &docs {
                    for c in self.corpus.concepts_in_doc(&d.doc_id) {
                        if c.entity_type != ty {
                            continue;
                        }
                        let Ok(surface) = preprocess_entity(&c.surface) else {
                            tally.empty_entities += 1;
                            continue;
                        };
                        let fill = SlotFill {
                            entity_type: ty.to_string(),
                            surface,
                            source: Some(c.ann_id.clone()),
                        };
                        let fills = vec![fill; t.placeholder_types.len()];
                        let bound: Bound = [(ty, c)].into();
                        if let Some(ev) = self.answer(patient, lf, &bound, tally) {
                            self.emit(patient, t, lf, &fills, (c.doc_id.clone(), c.line), ev, None, out, tally);
                        }
                    }
                }
            }
            _ => {
                // Two placeholder types are bound from related mention pairs;
                // such questions carry no answer.
                for d in &docs {
                    for r in self.corpus.relations().iter().filter(|r| r.doc_id == d.doc_id) {
                        let (Some(h), Some(tl)) = (self.corpus.concept(&r.head), self.corpus.concept(&r.tail)) else {
                            continue;
                        };
                        let pair: HashMap<&str, &ConceptAnn> = if types == [h.entity_type.as_str(), tl.entity_type.as_str()]
                            || types == [tl.entity_type.as_str(), h.entity_type.as_str()]
                        {
                            [(h.entity_type.as_str(), h), (tl.entity_type.as_str(), tl)].into()
                        } else {
                            continue;
                        };
                        let mut fills = Vec::new();
                        for ty in &t.placeholder_types {
                            let c = pair[ty.as_str()];
                            match preprocess_entity(&c.surface) {
                                Ok(surface) => fills.push(SlotFill {
                                    entity_type: ty.clone(),
                                    surface,
                                    source: Some(c.ann_id.clone()),
                                }),
                                Err(_) => {
                                    tally.empty_entities += 1;
                                    break;
                                }
                            }
                        }
                        if fills.len() == t.placeholder_types.len() {
                            self.emit(patient, t, lf, &fills, (h.doc_id.clone(), h.line), Vec::new(), None, out, tally);
                        }
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(
        &self,
        patient: &str,
        t: &QuestionTemplate,
        lf_t: &LogicalForm,
        fills: &[SlotFill],
        anchor: (String, usize),
        evidences: Vec<EvidenceSpan>,
        answer_class: Option<Vec<String>>,
        out: &mut Vec<Draft>,
        tally: &mut Tally,
    ) {
        match instantiate_template(t, lf_t, fills) {
            Ok((question, lf)) => out.push(Draft {
                anchor,
                record: QARecord {
                    record_id: String::new(),
                    patient_id: patient.to_string(),
                    question,
                    lf,
                    lf_template_id: t.lf_template_id.clone(),
                    question_template_id: t.template_id.clone(),
                    evidences,
                    answer_class,
                    slot_fills: fills.to_vec(),
                },
            }),
            Err(e) => tally.skip(format!("template {}: {e}", t.template_id)),
        }
    }

    /// Evidence for one binding; `None` when the record must be skipped.
    fn answer(&self, patient: &str, lf: &'a LogicalForm, bound: &Bound<'a>, tally: &mut Tally) -> Option<Vec<EvidenceSpan>> {
        let (groups, rels) = match flatten(&lf.root) {
            Some(g) => g,
            None => {
                tally.skip("relation nested under OR/AND");
                return None;
            }
        };
        let mut cands = Vec::with_capacity(groups.len());
        for g in &groups {
            match self.eval_group(patient, g, bound, tally) {
                Ok(c) => cands.push(c),
                Err(e) => {
                    tally.skip(e);
                    return None;
                }
            }
        }
        let answers = if groups.len() == 1 {
            cands.swap_remove(0)
        } else {
            let a = answer_group(&groups);
            let k = anchor_group(&groups, a);
            let mut frontier = cands[k].clone();
            let mut i = k;
            while i != a {
                let j = if a > i { i + 1 } else { i - 1 };
                let lo = i.min(j);
                let next_is_head = j == lo;
                frontier = self.step(&frontier, &cands[j], rels[lo], next_is_head);
                i = j;
            }
            frontier
        };
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for c in answers {
            for e in self.evidence(c) {
                if seen.insert((e.doc_id.clone(), e.line, e.answer_entity.clone())) {
                    out.push(e);
                }
            }
        }
        Some(out)
    }

    /// Candidates of `next` linked by a `rel` relation to the coref closure
    /// of `frontier`.
    fn step(&self, frontier: &[Cand<'a>], next: &[Cand<'a>], rel: &str, next_is_head: bool) -> Vec<Cand<'a>> {
        let mut reach: HashSet<&str> = HashSet::new();
        for c in frontier {
            for m in self.corpus.resolve_coref(&c.concept.ann_id) {
                reach.insert(m.ann_id.as_str());
            }
        }
        next.iter()
            .filter(|c| {
                let id = c.concept.ann_id.as_str();
                if next_is_head {
                    self.corpus
                        .relations_from(id)
                        .iter()
                        .any(|r| reach.contains(r.tail.as_str()) && self.schema.relation_covers(rel, &r.relation_type))
                } else {
                    self.corpus
                        .relations_to(id)
                        .iter()
                        .any(|r| reach.contains(r.head.as_str()) && self.schema.relation_covers(rel, &r.relation_type))
                }
            })
            .copied()
            .collect()
    }

    fn eval_group(&self, patient: &str, node: &'a LfNode, bound: &Bound<'a>, tally: &mut Tally) -> Result<Vec<Cand<'a>>, String> {
        match node {
            LfNode::Event(e) => self.eval_event(patient, e, bound, tally),
            LfNode::Composite { left, connective, right } => {
                let l = self.eval_group(patient, left, bound, tally)?;
                let r = self.eval_group(patient, right, bound, tally)?;
                Ok(match connective {
                    Connective::Or => {
                        let mut out = l;
                        for c in r {
                            if !out.iter().any(|o| o.concept.ann_id == c.concept.ann_id) {
                                out.push(c);
                            }
                        }
                        out
                    }
                    Connective::And => l
                        .into_iter()
                        .filter(|c| r.iter().any(|o| o.concept.ann_id == c.concept.ann_id))
                        .collect(),
                    Connective::Rel(_) => return Err("relation nested under OR/AND".into()),
                })
            }
        }
    }

    fn patient_mentions(&self, patient: &str) -> impl Iterator<Item = &'a ConceptAnn> + '_ {
        self.corpus
            .patient_documents(patient)
            .into_iter()
            .flat_map(|d| self.corpus.concepts_in_doc(&d.doc_id))
    }

    fn eval_event(&self, patient: &str, e: &'a EventNode, bound: &Bound<'a>, tally: &mut Tally) -> Result<Vec<Cand<'a>>, String> {
        let fills = |c: &ConceptAnn| self.schema.fills_event(&c.entity_type, &e.name);
        let leaf: Vec<&'a ConceptAnn> = match &e.arg {
            EventArg::Placeholder(ty) => match bound.get(ty.as_str()) {
                Some(c) => self.corpus.resolve_coref(&c.ann_id).into_iter().filter(|c| fills(c)).collect(),
                None => return Err(format!("unbound placeholder |{ty}|")),
            },
            EventArg::Literal(s) => self
                .patient_mentions(patient)
                .filter(|c| fills(c) && preprocess_entity(&c.surface).is_ok_and(|p| p.eq_ignore_ascii_case(s)))
                .collect(),
            EventArg::AnswerVar => self.patient_mentions(patient).filter(|c| fills(c)).collect(),
        };
        let mut cands: Vec<Cand<'a>> = leaf.into_iter().map(|concept| Cand { concept, event: e }).collect();

        for slot in &e.attributes {
            if let (Binding::Literal(v), None) = (&slot.binding, &slot.operator) {
                cands.retain(|c| {
                    self.corpus
                        .attributes_of(&c.concept.ann_id)
                        .iter()
                        .any(|a| a.name == slot.name && a.value.trim().eq_ignore_ascii_case(v.trim()))
                });
            }
        }

        let lab_name: Option<String> = match &e.arg {
            EventArg::Placeholder(ty) => bound.get(ty.as_str()).and_then(|c| preprocess_entity(&c.surface).ok()),
            EventArg::Literal(s) => Some(s.clone()),
            EventArg::AnswerVar => None,
        };
        for slot in &e.attributes {
            let Some(op) = &slot.operator else { continue };
            let field = FieldKind::of(&slot.name);
            let ocands: Vec<OperatorCandidate<Cand<'a>>> = cands
                .iter()
                .map(|c| {
                    let number = self.number(c.concept, &slot.name);
                    let date = self.date(c.concept, &slot.name);
                    OperatorCandidate {
                        item: *c,
                        lab: preprocess_entity(&c.concept.surface).ok(),
                        present: self.present(c.concept, &slot.name, number.is_some(), date.is_some()),
                        number,
                        date,
                    }
                })
                .collect();
            match eval_operator(op, field, &ocands, self.kb, lab_name.as_deref(), self.dates) {
                Ok(o) => {
                    tally.unparseable_values += o.unparseable;
                    tally.missing_lab_ranges += o.missing_lab;
                    cands = o.kept.into_iter().map(|c| c.item).collect();
                }
                Err(OperatorError::MissingKb(_)) => return Err("missing KB entry".into()),
                Err(e) => return Err(e.to_string()),
            }
        }
        Ok(cands)
    }

    fn doc(&self, c: &ConceptAnn) -> Option<&'a Document> {
        self.corpus.document(&c.doc_id)
    }

    /// First number after the mention on its line, ignoring dates, as a
    /// byte range within the line.
    fn derived_number(&self, c: &ConceptAnn) -> Option<Range<usize>> {
        let line = self.corpus.concept_line(c);
        let start = c.byte_range.end.min(line.len());
        let rest = &line[start..];
        let mut dates = Vec::new();
        let mut at = 0;
        while let Some((_, r)) = find_date(&rest[at..], self.dates) {
            dates.push(at + r.start..at + r.end);
            at += r.end;
        }
        self.value_re
            .find_iter(rest)
            .find(|m| !dates.iter().any(|d| m.start() < d.end && d.start < m.end()))
            .map(|m| start + m.start()..start + m.end())
    }

    fn number(&self, c: &ConceptAnn, name: &str) -> Option<f64> {
        for a in self.corpus.attributes_of(&c.ann_id) {
            if a.name == name {
                if let Some(v) = self.value_re.find(&a.value).and_then(|m| m.as_str().parse().ok()) {
                    return Some(v);
                }
            }
        }
        if name == "result" {
            let r = self.derived_number(c)?;
            return self.corpus.concept_line(c)[r].parse().ok();
        }
        None
    }

    fn date(&self, c: &ConceptAnn, name: &str) -> Option<chrono::NaiveDate> {
        for a in self.corpus.attributes_of(&c.ann_id) {
            if a.name == name {
                if let Some(d) = parse_date(&a.value, self.dates) {
                    return Some(d);
                }
            }
        }
        if name == "date" {
            return c.time.or_else(|| self.doc(c).and_then(|d| d.record_date));
        }
        None
    }

    fn present(&self, c: &ConceptAnn, name: &str, number: bool, date: bool) -> bool {
        self.corpus.attributes_of(&c.ann_id).iter().any(|a| a.name == name)
            || (name == "result" && number)
            || (name == "date" && date)
    }

    /// Located values of attribute `name` on a mention: annotated values,
    /// else for `result` the derived number on the mention line.
    fn located(&self, c: &ConceptAnn, name: &str) -> Vec<(usize, Range<usize>)> {
        let v: Vec<(usize, Range<usize>)> = self
            .corpus
            .attributes_of(&c.ann_id)
            .into_iter()
            .filter(|a| a.name == name)
            .map(|a| (a.line, a.value_range.clone()))
            .collect();
        if v.is_empty() && name == "result" {
            if let Some(r) = self.derived_number(c) {
                return vec![(c.line, r)];
            }
        }
        v
    }

    /// Evidence for one answer: the rightmost answer-bound attribute with
    /// located values, else the mention line itself when the event is the
    /// answer or survived an operator.
    fn evidence(&self, c: Cand<'a>) -> Vec<EvidenceSpan> {
        let Some(doc) = self.doc(c.concept) else { return Vec::new() };
        for slot in c.event.attributes.iter().rev() {
            if slot.binding != Binding::AnswerVar {
                continue;
            }
            let v = self.located(c.concept, &slot.name);
            if !v.is_empty() {
                return v
                    .into_iter()
                    .filter_map(|(line, r)| EvidenceSpan::for_line(doc, line, Some(r)))
                    .collect();
            }
        }
        let line = c.concept.line;
        if c.event.arg == EventArg::AnswerVar {
            EvidenceSpan::for_line(doc, line, Some(c.concept.byte_range.clone())).into_iter().collect()
        } else if c.event.attributes.iter().any(|a| a.operator.is_some()) {
            EvidenceSpan::for_line(doc, line, None).into_iter().collect()
        } else {
            Vec::new()
        }
    }
}

/// Splits a relation chain into its operand groups and relation names.
/// `None` when a relation sits below an OR/AND.
fn flatten(node: &LfNode) -> Option<(Vec<&LfNode>, Vec<&str>)> {
    match node {
        LfNode::Composite {
            left,
            connective: Connective::Rel(name),
            right,
        } => {
            let (mut g, mut r) = flatten(left)?;
            let (g2, r2) = flatten(right)?;
            r.push(name.as_str());
            g.extend(g2);
            r.extend(r2);
            Some((g, r))
        }
        other => {
            if other.connectives().iter().any(|c| c.is_relation()) {
                None
            } else {
                Some((vec![other], Vec::new()))
            }
        }
    }
}

fn answer_group(groups: &[&LfNode]) -> usize {
    groups
        .iter()
        .position(|g| g.events().iter().any(|e| e.arg == EventArg::AnswerVar))
        .or_else(|| {
            groups
                .iter()
                .position(|g| g.events().iter().any(|e| e.attributes.iter().any(|a| a.requests_answer())))
        })
        .unwrap_or(0)
}

fn anchor_group(groups: &[&LfNode], answer: usize) -> usize {
    let named = |g: &&LfNode| {
        g.events()
            .iter()
            .any(|e| matches!(e.arg, EventArg::Placeholder(_) | EventArg::Literal(_)))
    };
    (0..groups.len())
        .find(|&i| i != answer && named(&groups[i]))
        .or_else(|| (0..groups.len()).find(|&i| i != answer))
        .unwrap_or(answer)
}

fn dedup_spans(spans: Vec<EvidenceSpan>) -> Vec<EvidenceSpan> {
    let mut seen = HashSet::new();
    spans
        .into_iter()
        .filter(|e| seen.insert((e.doc_id.clone(), e.line, e.answer_entity.clone())))
        .collect()
}

/// One evidence per `attribute_name` annotation on the concept or its
/// coreferent mentions, answering with the attribute value.
pub fn answers_by_attribute(corpus: &AnnotationCorpus, concept_id: &str, attribute_name: &str) -> Vec<EvidenceSpan> {
    let mut out = Vec::new();
    for m in corpus.resolve_coref(concept_id) {
        let Some(doc) = corpus.document(&m.doc_id) else { continue };
        for a in corpus.attributes_of(&m.ann_id) {
            if a.name == attribute_name {
                out.extend(EvidenceSpan::for_line(doc, a.line, Some(a.value_range.clone())));
            }
        }
    }
    dedup_spans(out)
}

/// Lines of concepts related to the concept or any coreferent mention by a
/// relation of one of `relation_types`, in either direction.
pub fn answers_by_relation(corpus: &AnnotationCorpus, concept_id: &str, relation_types: &[&str]) -> Vec<EvidenceSpan> {
    let wanted = |t: &str| relation_types.iter().any(|r| r.eq_ignore_ascii_case(t));
    let mut out = Vec::new();
    for m in corpus.resolve_coref(concept_id) {
        let linked = corpus
            .relations_from(&m.ann_id)
            .into_iter()
            .filter(|r| wanted(&r.relation_type))
            .map(|r| r.tail.as_str())
            .chain(
                corpus
                    .relations_to(&m.ann_id)
                    .into_iter()
                    .filter(|r| wanted(&r.relation_type))
                    .map(|r| r.head.as_str()),
            );
        for other in linked {
            let Some(c) = corpus.concept(other) else { continue };
            let Some(doc) = corpus.document(&c.doc_id) else { continue };
            out.extend(EvidenceSpan::for_line(doc, c.line, Some(c.byte_range.clone())));
        }
    }
    dedup_spans(out)
}

/// Label set and whole-note evidence for a document, falling back to the
/// patient's labels.
pub fn answers_by_class(corpus: &AnnotationCorpus, doc_id: &str, task: &str) -> Option<(Vec<String>, EvidenceSpan)> {
    let doc = corpus.document(doc_id)?;
    let c = corpus
        .class_for(doc_id, task)
        .or_else(|| corpus.class_for(&doc.patient_id, task))?;
    Some((c.labels.iter().cloned().collect(), EvidenceSpan::whole_document(doc)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_concept_line, CorpusBuilder};
    use crate::lf::parse_lf_templates;

    const NOTE: &str = "Record Date: 2115-12-16\n\
        Lasix 40mg daily\n\
        Lasix 20mg daily , then BNP 900\n\
        ascending aortic root replacement on 08/31/96\n\
        The patient tolerated the procedure fairly well and the chest pain resolved .\n\
        the repair caused bleeding .";

    fn corpus(anns: &[&str]) -> AnnotationCorpus {
        let mut b = CorpusBuilder::new(DateConfig::default());
        b.add_document("d1", "p1", Some("relations"), NOTE);
        for (i, a) in anns.iter().enumerate() {
            b.add_annotation("d1", parse_concept_line(a).unwrap(), format!("ann:{i}"));
        }
        b.add_class("d1", "obesity", vec!["No".into()], "classes");
        let c = b.finish();
        assert!(c.violations().is_empty(), "{:?}", c.violations());
        c
    }

    fn standard() -> AnnotationCorpus {
        corpus(&[
            r#"c="lasix" 2:0 2:0||t="medication""#,
            r#"c="lasix" 2:0 2:0||t="medication"||a="dosage"="40mg" 2:1 2:1"#,
            r#"c="lasix" 2:0 2:0||t="medication"||a="dosage"="20mg" 3:1 3:1"#,
            r#"c="bnp" 3:5 3:5||t="test""#,
            r#"c="ascending aortic root replacement" 4:0 4:3||t="treatment""#,
            r#"c="the procedure" 5:3 5:4||t="treatment""#,
            r#"c="the chest pain" 5:8 5:10||t="problem""#,
            r#"c="the repair" 6:0 6:1||t="treatment""#,
            r#"c="bleeding" 6:3 6:3||t="problem""#,
            r#"c="the procedure" 5:3 5:4||r="TrIP"||c="the chest pain" 5:8 5:10"#,
            r#"c="the repair" 6:0 6:1||r="TrCP"||c="bleeding" 6:3 6:3"#,
            r#"c="ascending aortic root replacement" 4:0 4:3||c="the procedure" 5:3 5:4||c="the repair" 6:0 6:1"#,
        ])
    }

    fn id(c: &AnnotationCorpus, surface: &str) -> String {
        c.concepts().iter().find(|m| m.surface == surface).unwrap().ann_id.clone()
    }

    #[test]
    fn attribute_answers_one_per_annotation() {
        let c = standard();
        let ev = answers_by_attribute(&c, &id(&c, "Lasix"), "dosage");
        let got: Vec<_> = ev.iter().map(|e| (e.line, e.answer_entity.clone().unwrap())).collect();
        assert_eq!(got, [(2, "40mg".to_string()), (3, "20mg".to_string())]);
        assert!(answers_by_attribute(&c, &id(&c, "BNP"), "dosage").is_empty());
    }

    #[test]
    fn relation_answers_merge_coreferent_mentions() {
        let c = standard();
        let ev = answers_by_relation(&c, &id(&c, "ascending aortic root replacement"), &["TrIP", "TrWP", "TrCP"]);
        let got: Vec<_> = ev.iter().map(|e| e.line_text.as_str()).collect();
        assert_eq!(
            got,
            [
                "The patient tolerated the procedure fairly well and the chest pain resolved .",
                "the repair caused bleeding ."
            ]
        );
        assert_eq!(ev[0].answer_entity.as_deref(), Some("the chest pain"));
        assert!(answers_by_relation(&c, &id(&c, "BNP"), &["TeRP"]).is_empty());
    }

    #[test]
    fn class_answer_is_whole_note() {
        let c = standard();
        let (labels, ev) = answers_by_class(&c, "d1", "obesity").unwrap();
        assert_eq!(labels, ["No"]);
        assert_eq!(ev.line_text, NOTE);
        assert!(answers_by_class(&c, "d1", "smoking").is_none());
    }

    fn run(c: &AnnotationCorpus, lf: &str, question: &str, kb: &RefRangeKb) -> Generated {
        let lfs = parse_lf_templates(&format!("L1\t{lf}\n")).unwrap();
        let set = TemplateSet::parse(&format!("T1\tL1\t{question}\n"), &lfs).unwrap();
        generate_dataset(c, &set, &Schema::default_schema(), kb, &GeneratorConfig::default()).unwrap()
    }

    #[test]
    fn empty_corpus_gives_nothing() {
        let g = run(
            &AnnotationCorpus::default(),
            "MedicationEvent (|medication|) [dosage=x]",
            "What is the dosage of |medication| ?",
            &RefRangeKb::new(),
        );
        assert!(g.records.is_empty());
        assert_eq!(g.report.total.ql, 0);
        assert!(g.report.sources.is_empty());
    }

    #[test]
    fn lab_without_range_skips_record() {
        let c = standard();
        let g = run(&c, "LabEvent (|test|) [(result=x)>lab.refhigh]", "Is |test| high ?", &RefRangeKb::new());
        assert!(g.records.is_empty());
        assert_eq!(g.report.skipped.get("missing KB entry"), Some(&1));
        let kb = RefRangeKb::parse("BNP\t0\t100\n").unwrap();
        let g = run(&c, "LabEvent (|test|) [(result=x)>lab.refhigh]", "Is |test| high ?", &kb);
        assert_eq!(g.records.len(), 1);
        assert_eq!(g.records[0].evidences[0].answer_entity.as_deref(), Some("900"));
    }

    #[test]
    fn derived_numbers_skip_dates() {
        let mut b = CorpusBuilder::new(DateConfig::default());
        b.add_document("d1", "p1", None, "Record Date: 2115-12-16\nHBA1C 12/14/2115 11.80");
        b.add_annotation("d1", parse_concept_line(r#"c="hba1c" 2:0 2:0||t="test""#).unwrap(), "a");
        let c = b.finish();
        let g = run(&c, "LabEvent (|test|) [(result=x)>10]", "Is |test| above 10 ?", &RefRangeKb::new());
        assert_eq!(g.records[0].evidences[0].answer_entity.as_deref(), Some("11.80"));
    }

    #[test]
    fn relation_under_or_is_skipped() {
        let c = standard();
        let g = run(
            &c,
            "MedicationEvent (|medication|) OR {MedicationEvent (x) given ConditionEvent (x)}",
            "What about |medication| ?",
            &RefRangeKb::new(),
        );
        assert!(g.records.is_empty());
        assert_eq!(g.report.skipped.get("relation nested under OR/AND"), Some(&1));
    }

    #[test]
    fn literal_event_matches_mentions_by_surface() {
        let c = standard();
        let g = run(&c, "ConditionEvent (chest pain) [status=x]", "Any chest pain ?", &RefRangeKb::new());
        assert_eq!(g.records.len(), 1);
        assert!(!g.records[0].is_answered());
        let g = run(
            &c,
            "{MedicationEvent (x) OR ProcedureEvent (x)} improves/worsens/causes ConditionEvent (chest pain)",
            "What helped the chest pain ?",
            &RefRangeKb::new(),
        );
        let ev = &g.records[0].evidences;
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].answer_entity.as_deref(), Some("the procedure"));
    }
}
