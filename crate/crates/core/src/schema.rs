//! Ontology schema: events and attributes, relations, entity-type mapping and
//! knowledge-base paths.
//!
//! ```text
//! [events]
//! MedicationEvent: dosage, frequency, enddate
//! [relations]
//! given: TrAP
//! [entity_map]
//! medication: MedicationEvent
//! [kb]
//! lab: reflow, refhigh
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::lf::{is_relation_name, LogicalForm};

const DEFAULT_SCHEMA: &str = include_str!("../data/default_schema.cfg");

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema has no events")]
    NoEvents,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    events: BTreeMap<String, BTreeSet<String>>,
    /// LF relation name to the lowercased corpus relation types it covers.
    relations: BTreeMap<String, BTreeSet<String>>,
    entity_map: BTreeMap<String, BTreeSet<String>>,
    kb_paths: BTreeSet<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Events,
    Relations,
    EntityMap,
    Kb,
}

fn parse_err(line: usize, message: impl Into<String>) -> SchemaError {
    SchemaError::Parse {
        line,
        message: message.into(),
    }
}

fn is_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-'))
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let mut schema = Schema {
            events: BTreeMap::new(),
            relations: BTreeMap::new(),
            entity_map: BTreeMap::new(),
            kb_paths: BTreeSet::new(),
        };
        let mut kb_roots = BTreeSet::new();
        let mut entity_lines = BTreeMap::new();
        let mut section = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                section = Some(match name.trim() {
                    "events" => Section::Events,
                    "relations" => Section::Relations,
                    "entity_map" => Section::EntityMap,
                    "kb" => Section::Kb,
                    other => return Err(parse_err(line, format!("unknown section [{other}]"))),
                });
                continue;
            }
            let section = section.ok_or_else(|| parse_err(line, "entry outside of a section"))?;
            let (key, values) = s
                .split_once(':')
                .ok_or_else(|| parse_err(line, "expected 'name: value, value'"))?;
            let key = key.trim();
            let values: BTreeSet<String> = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
                .collect();
            if let Some(bad) = values.iter().find(|v| !is_name(v)) {
                return Err(parse_err(line, format!("invalid name '{bad}'")));
            }
            match section {
                Section::Events => {
                    if !crate::lf::is_identifier(key) {
                        return Err(parse_err(line, format!("invalid event name '{key}'")));
                    }
                    if schema.events.insert(key.to_string(), values).is_some() {
                        return Err(parse_err(line, format!("duplicate event {key}")));
                    }
                }
                Section::Relations => {
                    if !is_relation_name(key) {
                        return Err(parse_err(line, format!("invalid relation name '{key}'")));
                    }
                    let mut aligned: BTreeSet<String> =
                        values.iter().map(|v| v.to_lowercase()).collect();
                    aligned.insert(key.to_lowercase());
                    if schema.relations.insert(key.to_string(), aligned).is_some() {
                        return Err(parse_err(line, format!("duplicate relation {key}")));
                    }
                }
                Section::EntityMap => {
                    if !is_name(key) || values.is_empty() {
                        return Err(parse_err(line, "expected 'entity_type: Event, Event'"));
                    }
                    if schema.entity_map.insert(key.to_string(), values).is_some() {
                        return Err(parse_err(line, format!("duplicate entity type {key}")));
                    }
                    entity_lines.insert(key.to_string(), line);
                }
                Section::Kb => {
                    if !crate::lf::is_identifier(key) || values.is_empty() {
                        return Err(parse_err(line, "expected 'source: field, field'"));
                    }
                    if !kb_roots.insert(key.to_string()) {
                        return Err(parse_err(line, format!("duplicate kb entry {key}")));
                    }
                    for v in values {
                        schema.kb_paths.insert(format!("{key}.{v}"));
                    }
                }
            }
        }
        if schema.events.is_empty() {
            return Err(SchemaError::NoEvents);
        }
        for (ty, events) in &schema.entity_map {
            if let Some(ev) = events.iter().find(|e| !schema.events.contains_key(*e)) {
                return Err(parse_err(
                    entity_lines[ty],
                    format!("entity type {ty} maps to undeclared event {ev}"),
                ));
            }
        }
        Ok(schema)
    }

    /// The built-in schema covering the five standard events.
    pub fn default_schema() -> Self {
        Self::parse(DEFAULT_SCHEMA).expect("embedded default schema is valid")
    }

    pub fn default_source() -> &'static str {
        DEFAULT_SCHEMA
    }

    pub fn events(&self) -> impl Iterator<Item = &str> {
        self.events.keys().map(String::as_str)
    }

    pub fn has_event(&self, name: &str) -> bool {
        self.events.contains_key(name)
    }

    pub fn event_attributes(&self, event: &str) -> Option<&BTreeSet<String>> {
        self.events.get(event)
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    pub fn has_relation(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    /// Whether a corpus relation of type `corpus_type` realizes the LF
    /// relation `name`. Comparison is case-insensitive.
    pub fn relation_covers(&self, name: &str, corpus_type: &str) -> bool {
        self.relations
            .get(name)
            .is_some_and(|s| s.contains(&corpus_type.to_lowercase()))
    }

    /// Whether `corpus_type` is covered by any declared relation.
    pub fn is_aligned_relation_type(&self, corpus_type: &str) -> bool {
        let t = corpus_type.to_lowercase();
        self.relations.values().any(|s| s.contains(&t))
    }

    pub fn entity_types(&self) -> impl Iterator<Item = &str> {
        self.entity_map.keys().map(String::as_str)
    }

    pub fn entity_events(&self, entity_type: &str) -> Option<&BTreeSet<String>> {
        self.entity_map.get(entity_type)
    }

    /// Whether concepts of `entity_type` can fill `event`.
    pub fn fills_event(&self, entity_type: &str, event: &str) -> bool {
        self.entity_map
            .get(entity_type)
            .is_some_and(|s| s.contains(event))
    }

    pub fn kb_paths(&self) -> &BTreeSet<String> {
        &self.kb_paths
    }

    /// Names every undeclared event, attribute, relation and KB path in `lf`.
    pub fn validate_lf(&self, lf: &LogicalForm) -> Vec<String> {
        let mut out = Vec::new();
        for e in lf.events() {
            match self.events.get(&e.name) {
                None => out.push(format!("unknown event {}", e.name)),
                Some(attrs) => {
                    for a in &e.attributes {
                        if !attrs.contains(&a.name) {
                            out.push(format!("unknown attribute {} on {}", a.name, e.name));
                        }
                    }
                }
            }
        }
        for r in lf.relation_names() {
            if !self.relations.contains_key(r) {
                out.push(format!("unknown relation {r}"));
            }
        }
        for k in lf.kb_refs() {
            if !self.kb_paths.contains(k.path()) {
                out.push(format!("unknown kb path {k}"));
            }
        }
        out
    }

    /// Checks that each placeholder type is mapped to the event it appears in.
    pub fn validate_placeholders(&self, lf: &LogicalForm) -> Vec<String> {
        let mut out = Vec::new();
        for e in lf.events() {
            if let crate::lf::EventArg::Placeholder(t) = &e.arg {
                match self.entity_map.get(t) {
                    None => out.push(format!("unknown entity type {t}")),
                    Some(evs) if !evs.contains(&e.name) => {
                        out.push(format!("entity type {t} cannot fill {}", e.name))
                    }
                    Some(_) => {}
                }
            }
        }
        out
    }
}

impl Default for Schema {
    fn default() -> Self {
        Self::default_schema()
    }
}

pub fn load_schema(path: &Path) -> Result<Schema, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Schema::parse(&text)
}
