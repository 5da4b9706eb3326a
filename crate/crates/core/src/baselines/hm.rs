use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::vectors::{cosine, SentenceEncoder, SentenceMode, VectorError, WordVectors};
use crate::generator::QARecord;
use crate::lf::LogicalForm;
use crate::templates::{normalize_question, EntityRecognizer, Gazetteer, SlotFill, TemplateSet};
use crate::text::lower_words;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HmMode {
    /// Exact match of the normalized question against a train template.
    Hm1,
    /// Closest train template by cosine of sentence vectors.
    Hm2,
}

impl std::str::FromStr for HmMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hm1" => Ok(Self::Hm1),
            "hm2" => Ok(Self::Hm2),
            _ => Err(format!("unknown matcher {s:?} (expected hm1 or hm2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NoMatch {
    #[error("no train template equals {0:?}")]
    NotFound(String),
    #[error("no in-vocabulary tokens in {0:?}")]
    NoKnownTokens(String),
    #[error("no train templates")]
    Empty,
    #[error("matched template {template}, but its LF cannot take the recognized entities: {reason}")]
    Fill { template: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmPrediction {
    pub template_id: String,
    /// Cosine for HM-2, 1 for an exact match.
    pub score: f64,
    pub lf: LogicalForm,
}

struct Entry<'a> {
    template_id: &'a str,
    lf: &'a LogicalForm,
    vector: Option<Vec<f64>>,
}

/// Question to LF matching against a fixed set of train templates.
pub struct TemplateMatcher<'a> {
    mode: HmMode,
    entries: Vec<Entry<'a>>,
    exact: HashMap<String, usize>,
    encoder: Option<SentenceEncoder<'a>>,
}

impl<'a> TemplateMatcher<'a> {
    /// Exact-match model.
    pub fn hm1(train: &'a TemplateSet) -> Self {
        Self::build(HmMode::Hm1, train, None)
    }

    /// Cosine model. Train templates without known tokens cannot be matched.
    pub fn hm2(train: &'a TemplateSet, vectors: &'a WordVectors, sentence: SentenceMode) -> Self {
        Self::build(HmMode::Hm2, train, Some((vectors, sentence)))
    }

    fn build(mode: HmMode, train: &'a TemplateSet, vectors: Option<(&'a WordVectors, SentenceMode)>) -> Self {
        let mut ts: Vec<_> = train.templates().iter().collect();
        ts.sort_by(|a, b| a.template_id.cmp(&b.template_id));
        let tokens: Vec<Vec<String>> = ts.iter().map(|t| lower_words(&t.text)).collect();
        let encoder = vectors.map(|(v, m)| SentenceEncoder::new(v, m, &tokens));
        let mut exact = HashMap::new();
        let mut entries = Vec::with_capacity(ts.len());
        for (i, (t, toks)) in ts.iter().zip(&tokens).enumerate() {
            exact.entry(toks.join(" ")).or_insert(i);
            entries.push(Entry {
                template_id: &t.template_id,
                lf: train.lf(&t.lf_template_id).expect("template sets resolve their LFs"),
                vector: encoder.as_ref().and_then(|e| e.encode(toks).ok()),
            });
        }
        Self {
            mode,
            entries,
            exact,
            encoder,
        }
    }

    pub fn mode(&self) -> HmMode {
        self.mode
    }

    /// Normalizes the question with `recognizer`, picks a train template and
    /// fills its LF with the recognized entities.
    pub fn predict(&self, recognizer: &dyn EntityRecognizer, question: &str) -> Result<HmPrediction, NoMatch> {
        let (normalized, fills) = normalize_question(recognizer, question);
        let (i, score) = match self.mode {
            HmMode::Hm1 => (
                *self
                    .exact
                    .get(&normalized)
                    .ok_or_else(|| NoMatch::NotFound(normalized.clone()))?,
                1.0,
            ),
            HmMode::Hm2 => self.nearest(&normalized)?,
        };
        let e = &self.entries[i];
        let lf = fill_lf(e.lf, &fills).map_err(|reason| NoMatch::Fill {
            template: e.template_id.to_string(),
            reason,
        })?;
        Ok(HmPrediction {
            template_id: e.template_id.to_string(),
            score,
            lf,
        })
    }

    /// Index and cosine of the most similar train template; ties go to the
    /// lowest template id.
    fn nearest(&self, normalized: &str) -> Result<(usize, f64), NoMatch> {
        let enc = self.encoder.as_ref().expect("HM-2 matchers carry an encoder");
        let toks: Vec<&str> = normalized.split(' ').filter(|t| !t.is_empty()).collect();
        let q = enc.encode(&toks).map_err(|e| match e {
            VectorError::NoKnownTokens(s) => NoMatch::NoKnownTokens(s),
            other => NoMatch::NoKnownTokens(other.to_string()),
        })?;
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let Some(v) = &e.vector else { continue };
            let c = cosine(&q, v);
            if best.map_or(true, |(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        best.ok_or(NoMatch::Empty)
    }
}

/// Fills the LF template's placeholders with the recognized entities, in
/// order of appearance per type.
pub fn fill_lf(lf: &LogicalForm, fills: &[SlotFill]) -> Result<LogicalForm, String> {
    let mut by_type: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for f in fills {
        by_type.entry(f.entity_type.clone()).or_default().push(f.surface.clone());
    }
    lf.instantiate(&by_type).map_err(|e| e.to_string())
}

/// One-shot convenience over [`TemplateMatcher`].
pub fn hm_match(
    train: &TemplateSet,
    question: &str,
    mode: HmMode,
    recognizer: &dyn EntityRecognizer,
    vectors: Option<(&WordVectors, SentenceMode)>,
) -> Result<HmPrediction, NoMatch> {
    let m = match (mode, vectors) {
        (HmMode::Hm1, _) => TemplateMatcher::hm1(train),
        (HmMode::Hm2, Some((v, s))) => TemplateMatcher::hm2(train, v, s),
        (HmMode::Hm2, None) => return Err(NoMatch::NoKnownTokens(question.to_string())),
    };
    m.predict(recognizer, question)
}

/// Lexicon of every slot fill in `records`: an oracle recognizer for
/// questions generated from them.
pub fn oracle_lexicon(records: &[QARecord]) -> Gazetteer {
    let mut g = Gazetteer::new();
    for f in records.iter().flat_map(|r| &r.slot_fills) {
        g.insert(&f.surface, &f.entity_type);
    }
    g
}

/// A copy of `lexicon` with `round(fraction · len)` entries removed, chosen
/// by a seeded shuffle of the sorted entries.
pub fn thin_lexicon(lexicon: &Gazetteer, fraction: f64, seed: u64) -> Gazetteer {
    let mut entries: Vec<String> = lexicon.entries().into_iter().map(|(s, _)| s).collect();
    let n = ((fraction.clamp(0.0, 1.0)) * entries.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entries.shuffle(&mut rng);
    entries.truncate(n);
    lexicon.without(&entries)
}

/// Predictions for each record's question, in record order.
pub fn predict_records(
    matcher: &TemplateMatcher<'_>,
    recognizer: &dyn EntityRecognizer,
    records: &[QARecord],
) -> Vec<Result<HmPrediction, NoMatch>> {
    records
        .par_iter()
        .map(|r| matcher.predict(recognizer, &r.question))
        .collect()
}
