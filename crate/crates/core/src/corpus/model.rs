use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;

use chrono::NaiveDate;
use serde::Serialize;

use super::annfmt::{AnnLine, MentionRef};
use super::dates::{parse_date, DateConfig};
use crate::text::{collapse_whitespace, line_tokens};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Document {
    pub doc_id: String,
    pub patient_id: String,
    /// Source dataset tag, used for per-source reporting.
    pub source: Option<String>,
    pub record_date: Option<NaiveDate>,
    /// Note lines; line `n` (1-based) is `lines[n - 1]`.
    pub lines: Vec<String>,
}

impl Document {
    pub fn line(&self, n: usize) -> Option<&str> {
        n.checked_sub(1)
            .and_then(|i| self.lines.get(i))
            .map(String::as_str)
    }

    /// Full note text, lines joined by `\n`.
    pub fn text(&self) -> String {
        self.lines.join("\n")
    }

    /// Character offsets `[start, end)` of line `n` within [`Document::text`].
    pub fn line_char_span(&self, n: usize) -> Option<(usize, usize)> {
        let line = self.line(n)?;
        let start: usize = self.lines[..n - 1]
            .iter()
            .map(|l| l.chars().count() + 1)
            .sum();
        Some((start, start + line.chars().count()))
    }

    pub fn char_len(&self) -> usize {
        let n: usize = self.lines.iter().map(|l| l.chars().count()).sum();
        n + self.lines.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptAnn {
    pub ann_id: String,
    pub doc_id: String,
    pub line: usize,
    /// Inclusive whitespace-token indices within the line.
    pub token_span: (usize, usize),
    /// The annotated tokens as they appear in the note.
    pub surface: String,
    /// Byte range of the surface within the line.
    #[serde(skip)]
    pub byte_range: Range<usize>,
    pub entity_type: String,
    pub assertion: Option<String>,
    pub time: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationAnn {
    pub ann_id: String,
    pub doc_id: String,
    pub relation_type: String,
    pub head: String,
    pub tail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttributeAnn {
    pub ann_id: String,
    pub doc_id: String,
    pub owner: String,
    pub name: String,
    pub value: String,
    /// Line holding the value; the owner's line unless a position was given.
    pub line: usize,
    /// Byte range of the value within that line.
    #[serde(skip)]
    pub value_range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorefChain {
    pub chain_id: String,
    pub doc_id: String,
    pub members: Vec<String>,
    pub coref_type: Option<String>,
}

/// Document- or patient-level class labels for one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassAnn {
    pub target: String,
    pub task: String,
    pub labels: BTreeSet<String>,
}

/// An integrity problem found while loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// A fully cross-linked annotated corpus. Built through [`CorpusBuilder`].
#[derive(Debug, Clone, Default)]
pub struct AnnotationCorpus {
    documents: Vec<Document>,
    concepts: Vec<ConceptAnn>,
    relations: Vec<RelationAnn>,
    attributes: Vec<AttributeAnn>,
    chains: Vec<CorefChain>,
    classes: Vec<ClassAnn>,
    violations: Vec<Violation>,

    doc_index: HashMap<String, usize>,
    concept_index: HashMap<String, usize>,
    patients: BTreeMap<String, Vec<usize>>,
    concepts_by_doc: HashMap<String, Vec<usize>>,
    attrs_by_owner: HashMap<String, Vec<usize>>,
    rels_by_head: HashMap<String, Vec<usize>>,
    rels_by_tail: HashMap<String, Vec<usize>>,
    coref_group: Vec<usize>,
    groups: Vec<Vec<usize>>,
    class_index: HashMap<(String, String), usize>,
}

impl AnnotationCorpus {
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.doc_index.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn concepts(&self) -> &[ConceptAnn] {
        &self.concepts
    }

    pub fn concept(&self, ann_id: &str) -> Option<&ConceptAnn> {
        self.concept_index.get(ann_id).map(|&i| &self.concepts[i])
    }

    pub fn relations(&self) -> &[RelationAnn] {
        &self.relations
    }

    pub fn attributes(&self) -> &[AttributeAnn] {
        &self.attributes
    }

    pub fn chains(&self) -> &[CorefChain] {
        &self.chains
    }

    pub fn classes(&self) -> &[ClassAnn] {
        &self.classes
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Patient ids in sorted order.
    pub fn patient_ids(&self) -> impl Iterator<Item = &str> {
        self.patients.keys().map(String::as_str)
    }

    /// Documents of one patient, ordered by doc id.
    pub fn patient_documents(&self, patient_id: &str) -> Vec<&Document> {
        self.patients
            .get(patient_id)
            .map(|ix| ix.iter().map(|&i| &self.documents[i]).collect())
            .unwrap_or_default()
    }

    pub fn concepts_in_doc(&self, doc_id: &str) -> Vec<&ConceptAnn> {
        self.concepts_by_doc
            .get(doc_id)
            .map(|ix| ix.iter().map(|&i| &self.concepts[i]).collect())
            .unwrap_or_default()
    }

    pub fn attributes_of(&self, concept_id: &str) -> Vec<&AttributeAnn> {
        self.attrs_by_owner
            .get(concept_id)
            .map(|ix| ix.iter().map(|&i| &self.attributes[i]).collect())
            .unwrap_or_default()
    }

    /// Relations whose head is `concept_id`.
    pub fn relations_from(&self, concept_id: &str) -> Vec<&RelationAnn> {
        self.rels_by_head
            .get(concept_id)
            .map(|ix| ix.iter().map(|&i| &self.relations[i]).collect())
            .unwrap_or_default()
    }

    /// Relations whose tail is `concept_id`.
    pub fn relations_to(&self, concept_id: &str) -> Vec<&RelationAnn> {
        self.rels_by_tail
            .get(concept_id)
            .map(|ix| ix.iter().map(|&i| &self.relations[i]).collect())
            .unwrap_or_default()
    }

    /// All mentions coreferent with `concept_id`, itself included, in
    /// corpus order. A concept outside every chain yields just itself.
    pub fn resolve_coref(&self, concept_id: &str) -> Vec<&ConceptAnn> {
        match self.concept_index.get(concept_id) {
            None => Vec::new(),
            Some(&i) => self.groups[self.coref_group[i]]
                .iter()
                .map(|&j| &self.concepts[j])
                .collect(),
        }
    }

    /// Label set for a document or patient on `task`.
    pub fn class_for(&self, target: &str, task: &str) -> Option<&ClassAnn> {
        self.class_index
            .get(&(target.to_string(), task.to_string()))
            .map(|&i| &self.classes[i])
    }

    pub fn source_of(&self, doc_id: &str) -> Option<&str> {
        self.document(doc_id).and_then(|d| d.source.as_deref())
    }

    /// Text of the concept's line.
    pub fn concept_line(&self, c: &ConceptAnn) -> &str {
        self.document(&c.doc_id)
            .and_then(|d| d.line(c.line))
            .unwrap_or("")
    }
}

/// Collects documents and raw annotations, then resolves every cross
/// reference in [`CorpusBuilder::finish`].
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    dates: DateConfig,
    documents: Vec<Document>,
    annotations: Vec<(String, AnnLine, String)>,
    classes: Vec<(String, String, Vec<String>, String)>,
    violations: Vec<Violation>,
}

fn violation(location: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation {
        location: location.into(),
        message: message.into(),
    }
}

fn same_text(a: &str, b: &str) -> bool {
    collapse_whitespace(a).to_lowercase() == collapse_whitespace(b).to_lowercase()
}

/// Byte range covered by inclusive whitespace tokens `start..=end`.
fn token_range(line: &str, start: usize, end: usize) -> Option<Range<usize>> {
    let toks = line_tokens(line);
    let first = toks.get(start)?;
    let last = toks.get(end)?;
    Some(first.0..last.0 + last.1.len())
}

fn find_ignore_case(hay: &str, needle: &str) -> Option<Range<usize>> {
    if needle.is_empty() {
        return None;
    }
    let lower_hay = hay.to_lowercase();
    let lower_needle = needle.to_lowercase();
    // Lowercasing can change byte lengths outside ASCII; only trust the
    // position when the lengths agree.
    if lower_hay.len() != hay.len() || lower_needle.len() != needle.len() {
        return hay.find(needle).map(|s| s..s + needle.len());
    }
    lower_hay.find(&lower_needle).map(|s| s..s + needle.len())
}

impl CorpusBuilder {
    pub fn new(dates: DateConfig) -> Self {
        Self {
            dates,
            ..Default::default()
        }
    }

    pub fn date_config(&self) -> DateConfig {
        self.dates
    }

    /// Adds a note. A first line `Record Date: <date>` sets the record date;
    /// it stays in the text as line 1.
    pub fn add_document(
        &mut self,
        doc_id: &str,
        patient_id: &str,
        source: Option<&str>,
        text: &str,
    ) {
        if self.documents.iter().any(|d| d.doc_id == doc_id) {
            self.violations
                .push(violation(doc_id, "duplicate document id"));
            return;
        }
        let lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut record_date = None;
        if let Some(first) = lines.first() {
            let lower = first.to_lowercase();
            if let Some(rest) = lower.strip_prefix("record date:") {
                record_date = parse_date(rest, self.dates);
                if record_date.is_none() {
                    self.violations.push(violation(
                        format!("{doc_id}:1"),
                        format!("unparseable record date {:?}", rest.trim()),
                    ));
                }
            }
        }
        self.documents.push(Document {
            doc_id: doc_id.to_string(),
            patient_id: patient_id.to_string(),
            source: source.map(str::to_string),
            record_date,
            lines,
        });
    }

    /// Queues an annotation for `doc_id`; `location` names its origin in
    /// violation messages.
    pub fn add_annotation(&mut self, doc_id: &str, ann: AnnLine, location: impl Into<String>) {
        self.annotations
            .push((doc_id.to_string(), ann, location.into()));
    }

    pub fn add_class(&mut self, target: &str, task: &str, labels: Vec<String>, location: impl Into<String>) {
        self.classes
            .push((target.to_string(), task.to_string(), labels, location.into()));
    }

    pub fn add_violation(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(violation(location, message));
    }

    pub fn has_document(&self, doc_id: &str) -> bool {
        self.documents.iter().any(|d| d.doc_id == doc_id)
    }

    pub fn set_patient(&mut self, doc_id: &str, patient_id: &str, source: Option<&str>) -> bool {
        match self.documents.iter_mut().find(|d| d.doc_id == doc_id) {
            Some(d) => {
                d.patient_id = patient_id.to_string();
                if source.is_some() {
                    d.source = source.map(str::to_string);
                }
                true
            }
            None => false,
        }
    }

    pub fn finish(self) -> AnnotationCorpus {
        let CorpusBuilder {
            dates,
            mut documents,
            annotations,
            classes: raw_classes,
            mut violations,
        } = self;
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let doc_index: HashMap<String, usize> = documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.clone(), i))
            .collect();

        // Concepts first so that every other kind can resolve against them.
        let mut concepts = Vec::new();
        let mut by_pos: HashMap<(String, usize, usize, usize), usize> = HashMap::new();
        let mut counters: HashMap<(String, char), usize> = HashMap::new();
        let mut next_id = |doc: &str, kind: char| {
            let n = counters.entry((doc.to_string(), kind)).or_default();
            *n += 1;
            format!("{doc}#{kind}{n}")
        };
        for (doc_id, ann, loc) in &annotations {
            let AnnLine::Concept {
                mention,
                entity_type,
                assertion,
                time,
            } = ann
            else {
                continue;
            };
            let Some(&di) = doc_index.get(doc_id) else {
                violations.push(violation(loc, format!("unknown document {doc_id}")));
                continue;
            };
            let doc = &documents[di];
            let Some(line) = doc.line(mention.line) else {
                violations.push(violation(loc, format!("line {} out of range", mention.line)));
                continue;
            };
            let Some(range) = token_range(line, mention.start, mention.end) else {
                violations.push(violation(
                    loc,
                    format!("tokens {}..{} out of range on line {}", mention.start, mention.end, mention.line),
                ));
                continue;
            };
            let surface = collapse_whitespace(&line[range.clone()]);
            if !same_text(&surface, &mention.text) {
                violations.push(violation(
                    loc,
                    format!("concept text {:?} does not match note text {:?}", mention.text, surface),
                ));
                continue;
            }
            let key = (doc_id.clone(), mention.line, mention.start, mention.end);
            if by_pos.contains_key(&key) {
                violations.push(violation(loc, "duplicate concept span"));
                continue;
            }
            if entity_type.trim().is_empty() {
                violations.push(violation(loc, "empty entity type"));
                continue;
            }
            let time = match time {
                Some(t) => {
                    let d = parse_date(t, dates);
                    if d.is_none() {
                        violations.push(violation(loc, format!("unparseable time {t:?}")));
                    }
                    d
                }
                None => None,
            };
            by_pos.insert(key, concepts.len());
            concepts.push(ConceptAnn {
                ann_id: next_id(doc_id, 'C'),
                doc_id: doc_id.clone(),
                line: mention.line,
                token_span: (mention.start, mention.end),
                surface,
                byte_range: range,
                entity_type: entity_type.clone(),
                assertion: assertion.clone(),
                time,
            });
        }

        let resolve = |doc_id: &str, m: &MentionRef| -> Result<usize, String> {
            let key = (doc_id.to_string(), m.line, m.start, m.end);
            match by_pos.get(&key) {
                Some(&i) if same_text(&concepts[i].surface, &m.text) => Ok(i),
                _ => Err(format!(
                    "unresolved concept c=\"{}\" {}:{} {}:{}",
                    m.text, m.line, m.start, m.line, m.end
                )),
            }
        };

        let mut relations = Vec::new();
        let mut attributes = Vec::new();
        let mut chains = Vec::new();
        for (doc_id, ann, loc) in &annotations {
            if !doc_index.contains_key(doc_id) {
                if !matches!(ann, AnnLine::Concept { .. }) {
                    violations.push(violation(loc, format!("unknown document {doc_id}")));
                }
                continue;
            }
            match ann {
                AnnLine::Concept { .. } => {}
                AnnLine::Relation {
                    head,
                    relation_type,
                    tail,
                } => match (resolve(doc_id, head), resolve(doc_id, tail)) {
                    (Ok(h), Ok(t)) => relations.push(RelationAnn {
                        ann_id: next_id(doc_id, 'R'),
                        doc_id: doc_id.clone(),
                        relation_type: relation_type.clone(),
                        head: concepts[h].ann_id.clone(),
                        tail: concepts[t].ann_id.clone(),
                    }),
                    (h, t) => {
                        for e in [h.err(), t.err()].into_iter().flatten() {
                            violations.push(violation(loc, e));
                        }
                    }
                },
                AnnLine::Attribute {
                    owner,
                    owner_type,
                    name,
                    value,
                    value_at,
                } => {
                    let o = match resolve(doc_id, owner) {
                        Ok(o) => o,
                        Err(e) => {
                            violations.push(violation(loc, e));
                            continue;
                        }
                    };
                    let c = &concepts[o];
                    if let Some(t) = owner_type {
                        if *t != c.entity_type {
                            violations.push(violation(
                                loc,
                                format!("owner type {t} differs from concept type {}", c.entity_type),
                            ));
                            continue;
                        }
                    }
                    let doc = &documents[doc_index[doc_id]];
                    let (vline, range) = match value_at {
                        Some(p) => {
                            let range = doc
                                .line(p.line)
                                .and_then(|l| token_range(l, p.start, p.end).map(|r| (l, r)));
                            match range {
                                Some((l, r)) if same_text(&l[r.clone()], value) => (p.line, r),
                                _ => {
                                    violations.push(violation(
                                        loc,
                                        format!("value {value:?} not found at {}:{}", p.line, p.start),
                                    ));
                                    continue;
                                }
                            }
                        }
                        None => {
                            let line = doc.line(c.line).unwrap_or("");
                            match find_ignore_case(line, value.trim()) {
                                Some(r) => (c.line, r),
                                None => {
                                    violations.push(violation(
                                        loc,
                                        format!("value {value:?} does not occur on line {}", c.line),
                                    ));
                                    continue;
                                }
                            }
                        }
                    };
                    attributes.push(AttributeAnn {
                        ann_id: next_id(doc_id, 'A'),
                        doc_id: doc_id.clone(),
                        owner: c.ann_id.clone(),
                        name: name.clone(),
                        value: value.clone(),
                        line: vline,
                        value_range: range,
                    });
                }
                AnnLine::Chain {
                    members,
                    coref_type,
                } => {
                    let mut ids = Vec::new();
                    for m in members {
                        match resolve(doc_id, m) {
                            Ok(i) => ids.push(i),
                            Err(e) => violations.push(violation(loc, e)),
                        }
                    }
                    ids.dedup();
                    if ids.len() < 2 {
                        violations.push(violation(loc, "chain has fewer than two resolved members"));
                        continue;
                    }
                    let ty = &concepts[ids[0]].entity_type;
                    if ids.iter().any(|&i| concepts[i].entity_type != *ty) {
                        violations.push(violation(loc, "chain mixes entity types"));
                        continue;
                    }
                    chains.push(CorefChain {
                        chain_id: next_id(doc_id, 'K'),
                        doc_id: doc_id.clone(),
                        members: ids.iter().map(|&i| concepts[i].ann_id.clone()).collect(),
                        coref_type: coref_type.clone(),
                    });
                }
            }
        }

        let mut classes = Vec::new();
        let mut class_index = HashMap::new();
        let patient_set: BTreeSet<&str> = documents.iter().map(|d| d.patient_id.as_str()).collect();
        for (target, task, labels, loc) in raw_classes {
            if !doc_index.contains_key(&target) && !patient_set.contains(target.as_str()) {
                violations.push(violation(&loc, format!("unknown class target {target}")));
                continue;
            }
            let labels: BTreeSet<String> = labels
                .into_iter()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect();
            if labels.is_empty() || task.trim().is_empty() {
                violations.push(violation(&loc, "class annotation needs a task and labels"));
                continue;
            }
            let key = (target.clone(), task.clone());
            if class_index.contains_key(&key) {
                violations.push(violation(&loc, format!("duplicate {task} labels for {target}")));
                continue;
            }
            class_index.insert(key, classes.len());
            classes.push(ClassAnn {
                target,
                task,
                labels,
            });
        }

        let mut corpus = AnnotationCorpus {
            documents,
            concepts,
            relations,
            attributes,
            chains,
            classes,
            violations,
            doc_index,
            class_index,
            ..Default::default()
        };
        corpus.index();
        corpus
    }
}

impl AnnotationCorpus {
    fn index(&mut self) {
        for (i, d) in self.documents.iter().enumerate() {
            self.patients.entry(d.patient_id.clone()).or_default().push(i);
        }
        for (i, c) in self.concepts.iter().enumerate() {
            self.concept_index.insert(c.ann_id.clone(), i);
            self.concepts_by_doc.entry(c.doc_id.clone()).or_default().push(i);
        }
        for ix in self.concepts_by_doc.values_mut() {
            let cs = &self.concepts;
            ix.sort_by_key(|&i| (cs[i].line, cs[i].token_span));
        }
        for (i, a) in self.attributes.iter().enumerate() {
            self.attrs_by_owner.entry(a.owner.clone()).or_default().push(i);
        }
        for (i, r) in self.relations.iter().enumerate() {
            self.rels_by_head.entry(r.head.clone()).or_default().push(i);
            self.rels_by_tail.entry(r.tail.clone()).or_default().push(i);
        }

        let n = self.concepts.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for chain in &self.chains {
            let ids: Vec<usize> = chain.members.iter().map(|m| self.concept_index[m]).collect();
            for w in ids.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut root_group: HashMap<usize, usize> = HashMap::new();
        self.coref_group = vec![0; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            let g = *root_group.entry(r).or_insert_with(|| {
                self.groups.push(Vec::new());
                self.groups.len() - 1
            });
            self.coref_group[i] = g;
            self.groups[g].push(i);
        }
    }
}
