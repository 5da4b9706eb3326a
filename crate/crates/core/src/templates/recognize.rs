use std::collections::HashMap;
use std::ops::Range;

use crate::corpus::AnnotationCorpus;
use crate::text::tokenize;

/// An entity found in a question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recognized {
    /// Byte range within the question.
    pub span: Range<usize>,
    pub entity_type: String,
    pub surface: String,
}

/// Finds typed entity mentions in question text. Implementations return
/// non-overlapping spans in ascending order.
pub trait EntityRecognizer: Send + Sync {
    fn recognize(&self, question: &str) -> Vec<Recognized>;
}

/// Lexicon recognizer: case-insensitive, token-aligned, longest match first,
/// scanning left to right.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<Vec<String>, String>,
    max_len: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry; an existing entry for the same surface keeps its type.
    pub fn insert(&mut self, surface: &str, entity_type: &str) {
        let key: Vec<String> = tokenize(surface)
            .into_iter()
            .map(|t| t.text.to_lowercase())
            .collect();
        if key.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(key.len());
        self.entries
            .entry(key)
            .or_insert_with(|| entity_type.to_string());
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut g = Self::new();
        for (s, t) in entries {
            g.insert(s, t);
        }
        g
    }

    /// Lexicon of every concept surface in the corpus after entity
    /// preprocessing, in corpus order.
    pub fn from_corpus(corpus: &AnnotationCorpus) -> Self {
        let mut g = Self::new();
        for c in corpus.concepts() {
            if let Ok(s) = crate::generator::preprocess_entity(&c.surface) {
                g.insert(&s, &c.entity_type);
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries as (lowercased token sequence joined by spaces, type), sorted.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = self
            .entries
            .iter()
            .map(|(k, t)| (k.join(" "), t.clone()))
            .collect();
        v.sort();
        v
    }

    /// A copy without the given entries (matched by lowercased token text).
    pub fn without(&self, surfaces: &[String]) -> Self {
        let drop: Vec<Vec<String>> = surfaces
            .iter()
            .map(|s| tokenize(s).into_iter().map(|t| t.text.to_lowercase()).collect())
            .collect();
        let entries: HashMap<Vec<String>, String> = self
            .entries
            .iter()
            .filter(|(k, _)| !drop.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let max_len = entries.keys().map(Vec::len).max().unwrap_or(0);
        Self { entries, max_len }
    }
}

impl EntityRecognizer for Gazetteer {
    fn recognize(&self, question: &str) -> Vec<Recognized> {
        let toks = tokenize(question);
        let lower: Vec<String> = toks.iter().map(|t| t.text.to_lowercase()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < toks.len() {
            let longest = (1..=self.max_len.min(toks.len() - i))
                .rev()
                .find_map(|n| self.entries.get(&lower[i..i + n]).map(|t| (n, t)));
            match longest {
                Some((n, ty)) => {
                    let span = toks[i].start..toks[i + n - 1].end;
                    out.push(Recognized {
                        surface: question[span.clone()].to_string(),
                        span,
                        entity_type: ty.clone(),
                    });
                    i += n;
                }
                None => i += 1,
            }
        }
        out
    }
}
