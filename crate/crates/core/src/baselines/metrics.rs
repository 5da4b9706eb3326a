use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::generator::EvidenceSpan;
use crate::lf::{lf_equal, LogicalForm};
use crate::text::lower_words;

/// Predictions beyond this rank are ignored by [`eval_answers`].
pub const TOP_K: usize = 10;
/// Character tolerance of the span rule.
pub const SPAN_TOLERANCE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{predictions} predictions for {gold} gold items")]
pub struct LengthMismatch {
    pub predictions: usize,
    pub gold: usize,
}

fn check_len(p: usize, g: usize) -> Result<(), LengthMismatch> {
    if p == g {
        Ok(())
    } else {
        Err(LengthMismatch {
            predictions: p,
            gold: g,
        })
    }
}

/// Fraction of predictions equal to their gold LF; missing predictions are
/// wrong. 0 for empty input.
pub fn eval_ql_accuracy(predictions: &[Option<LogicalForm>], gold: &[LogicalForm]) -> Result<f64, LengthMismatch> {
    check_len(predictions.len(), gold.len())?;
    if gold.is_empty() {
        return Ok(0.0);
    }
    let correct = predictions
        .iter()
        .zip(gold)
        .filter(|(p, g)| p.as_ref().is_some_and(|p| lf_equal(p, g)))
        .count();
    Ok(correct as f64 / gold.len() as f64)
}

/// Fraction of items whose predicted label set equals the gold set.
pub fn subset_accuracy(predictions: &[BTreeSet<String>], gold: &[BTreeSet<String>]) -> Result<f64, LengthMismatch> {
    check_len(predictions.len(), gold.len())?;
    if gold.is_empty() {
        return Ok(0.0);
    }
    let correct = predictions.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(correct as f64 / gold.len() as f64)
}

/// A predicted answer: text and, when known, its character span in the note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
}

impl RankedPrediction {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            span: None,
        }
    }

    pub fn with_span(text: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            text: text.into(),
            span: Some((start, end)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanRule {
    /// Both predicted endpoints within the tolerance of the gold endpoints.
    #[default]
    Endpoints,
    /// Predicted span inside the gold span widened by the tolerance.
    Window,
}

/// Exact-match credit of one prediction for one gold evidence: the gold
/// answer entity occurs in the prediction, or the prediction's span is close
/// enough to the gold span, or (without a span) the prediction is the gold
/// text.
pub fn em_credit(pred: &RankedPrediction, gold: &EvidenceSpan, rule: SpanRule) -> bool {
    if let Some(a) = gold.answer_entity.as_deref() {
        if !a.is_empty() && pred.text.contains(a) {
            return true;
        }
    }
    match pred.span {
        Some((s, e)) => {
            let t = SPAN_TOLERANCE;
            match rule {
                SpanRule::Endpoints => s.abs_diff(gold.char_start) <= t && e.abs_diff(gold.char_end) <= t,
                SpanRule::Window => s + t >= gold.char_start && e <= gold.char_end + t && s <= e,
            }
        }
        None => pred.text.trim() == gold.line_text.trim(),
    }
}

/// Bag-of-tokens F1 over lowercased tokens. Two empty texts score 1.
pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    let p = lower_words(prediction);
    let g = lower_words(gold);
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AnswerScores {
    pub em: f64,
    pub f1: f64,
    /// Questions scored.
    pub questions: usize,
    /// Questions skipped for having no gold evidence.
    pub skipped: usize,
}

/// Exact-match and F1 credit for one question. Gold evidences are taken in
/// order; each takes the unused top-ranked prediction with the best
/// (EM, F1) credit, earliest rank on ties. Credits are summed and divided by
/// the number of gold evidences.
pub fn score_question(preds: &[RankedPrediction], gold: &[EvidenceSpan], rule: SpanRule) -> (f64, f64) {
    if gold.is_empty() {
        return (0.0, 0.0);
    }
    let top = &preds[..preds.len().min(TOP_K)];
    let mut used = vec![false; top.len()];
    let (mut em, mut f1) = (0.0, 0.0);
    for g in gold {
        let mut best: Option<(usize, bool, f64)> = None;
        for (i, p) in top.iter().enumerate() {
            if used[i] {
                continue;
            }
            let e = em_credit(p, g, rule);
            let f = token_f1(&p.text, &g.line_text);
            let better = match best {
                None => true,
                Some((_, be, bf)) => (e, f) > (be, bf),
            };
            if better {
                best = Some((i, e, f));
            }
        }
        if let Some((i, e, f)) = best {
            if e || f > 0.0 {
                used[i] = true;
                em += if e { 1.0 } else { 0.0 };
                f1 += f;
            }
        }
    }
    (em / gold.len() as f64, f1 / gold.len() as f64)
}

/// Mean per-question EM and F1. Questions without gold evidence are skipped.
pub fn eval_answers(
    predictions: &[Vec<RankedPrediction>],
    gold: &[Vec<EvidenceSpan>],
    rule: SpanRule,
) -> Result<AnswerScores, LengthMismatch> {
    check_len(predictions.len(), gold.len())?;
    let mut out = AnswerScores::default();
    for (p, g) in predictions.iter().zip(gold) {
        if g.is_empty() {
            out.skipped += 1;
            continue;
        }
        let (e, f) = score_question(p, g, rule);
        out.em += e;
        out.f1 += f;
        out.questions += 1;
    }
    if out.questions > 0 {
        out.em /= out.questions as f64;
        out.f1 /= out.questions as f64;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PredictionFileError {
    #[error("line {line}: expected 'record_id<TAB>rank<TAB>text[<TAB>start<TAB>end]'")]
    Malformed { line: usize },
    #[error("line {line}: {what} is not a number")]
    Number { line: usize, what: &'static str },
    #[error("line {line}: rank {rank} repeated for {record}")]
    DuplicateRank { line: usize, record: String, rank: usize },
}

/// Reads a predictions file: `record_id<TAB>rank<TAB>text`, optionally
/// followed by `<TAB>start<TAB>end`. Lists come back sorted by rank.
pub fn parse_predictions(text: &str) -> Result<BTreeMap<String, Vec<RankedPrediction>>, PredictionFileError> {
    let mut ranked: BTreeMap<String, BTreeMap<usize, RankedPrediction>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(cols.len() == 3 || cols.len() == 5) {
            return Err(PredictionFileError::Malformed { line: line_no });
        }
        let num = |s: &str, what| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| PredictionFileError::Number { line: line_no, what })
        };
        let rank = num(cols[1], "rank")?;
        let span = if cols.len() == 5 {
            Some((num(cols[3], "start")?, num(cols[4], "end")?))
        } else {
            None
        };
        let record = cols[0].to_string();
        let slot = ranked.entry(record.clone()).or_default();
        if slot.contains_key(&rank) {
            return Err(PredictionFileError::DuplicateRank {
                line: line_no,
                record,
                rank,
            });
        }
        slot.insert(
            rank,
            RankedPrediction {
                text: cols[2].to_string(),
                span,
            },
        );
    }
    Ok(ranked
        .into_iter()
        .map(|(k, v)| (k, v.into_values().collect()))
        .collect())
}

/// Writes predictions in the format read by [`parse_predictions`], ranks
/// starting at 1.
pub fn format_predictions<'a>(items: impl IntoIterator<Item = (&'a str, &'a [RankedPrediction])>) -> String {
    let mut s = String::new();
    for (id, preds) in items {
        for (i, p) in preds.iter().enumerate() {
            let text = p.text.replace(['\t', '\n'], " ");
            match p.span {
                Some((a, b)) => s.push_str(&format!("{id}\t{}\t{text}\t{a}\t{b}\n", i + 1)),
                None => s.push_str(&format!("{id}\t{}\t{text}\n", i + 1)),
            }
        }
    }
    s
}
