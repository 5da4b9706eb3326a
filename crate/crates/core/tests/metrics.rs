#[path = "support/metric_oracles.rs"]
mod metric_oracles;

use std::collections::BTreeSet;

use annoqa::analysis::{bleu, jaccard, BleuVariant};
use annoqa::baselines::{eval_answers, subset_accuracy, RankedPrediction, SpanRule};
use annoqa::EvidenceSpan;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

#[test]
fn bleu_and_jaccard_match_brute_force() {
    for (i, (a, b)) in metric_oracles::token_pairs(11, 200).iter().enumerate() {
        for (variant, smoothed) in [(BleuVariant::Smoothed, true), (BleuVariant::Unsmoothed, false)] {
            let got = bleu(a, b, variant);
            let want = metric_oracles::bleu(a, b, smoothed);
            assert!((got - want).abs() < TOL, "case {i} {variant:?}: {got} vs {want} for {a:?} / {b:?}");
        }
        let got = jaccard(a, b);
        let want = metric_oracles::jaccard(a, b);
        assert!((got - want).abs() < TOL, "case {i}: {got} vs {want}");
    }
}

#[test]
fn eval_answers_matches_brute_force() {
    for (i, (p, g)) in metric_oracles::answer_cases(12, 200).iter().enumerate() {
        let got = eval_answers(p, g, SpanRule::Endpoints).unwrap();
        let (em, f1) = metric_oracles::answers(p, g);
        assert!((got.em - em).abs() < TOL && (got.f1 - f1).abs() < TOL, "case {i}: {got:?} vs {em} {f1}");
    }
}

#[test]
fn subset_accuracy_matches_brute_force() {
    for (i, (p, g)) in metric_oracles::label_cases(13, 200).iter().enumerate() {
        let sets = |v: &Vec<Vec<String>>| -> Vec<BTreeSet<String>> { v.iter().map(|s| s.iter().cloned().collect()).collect() };
        let got = subset_accuracy(&sets(p), &sets(g)).unwrap();
        let want = metric_oracles::subset(p, g);
        assert!((got - want).abs() < TOL, "case {i}: {got} vs {want}");
    }
}

#[test]
fn table_two_pair_similarity() {
    // The first two treatment paraphrases compared as plain word sets.
    let a: Vec<&str> = "how was the problem managed".split(' ').collect();
    let b: Vec<&str> = "how was the patient's problem treated".split(' ').collect();
    let j = jaccard(&a, &b);
    assert!((j - 4.0 / 7.0).abs() < 1e-12, "{j}");
    let a: Vec<&str> = "how was managed".split(' ').collect();
    let b: Vec<&str> = "how was treated patient's".split(' ').collect();
    assert!((jaccard(&a, &b) - 2.0 / 5.0).abs() < 1e-12);
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "the", "The", "lasix", "40mg", "x"]).prop_map(str::to_string)
}

fn span_strategy() -> impl Strategy<Value = EvidenceSpan> {
    (prop::collection::vec(word(), 1..6), 0usize..100, any::<bool>()).prop_map(|(w, start, answer)| {
        let text = w.join(" ");
        EvidenceSpan {
            doc_id: "d".into(),
            line: 1,
            char_start: start,
            char_end: start + text.len(),
            answer_entity: answer.then(|| w[0].clone()),
            line_text: text,
        }
    })
}

proptest! {
    #[test]
    fn bleu_bounds_and_identity(a in prop::collection::vec(word(), 0..10), b in prop::collection::vec(word(), 0..10)) {
        for v in [BleuVariant::Smoothed, BleuVariant::Unsmoothed] {
            let s = bleu(&a, &b, v);
            prop_assert!((0.0..=1.0).contains(&s));
            // Without smoothing a sentence shorter than four tokens has no
            // 4-grams and scores 0 even against itself.
            if a.len() >= 4 || (v == BleuVariant::Smoothed && !a.is_empty()) {
                prop_assert!((bleu(&a, &a, v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jaccard_bounds_and_symmetry(a in prop::collection::vec(word(), 0..10), b in prop::collection::vec(word(), 0..10)) {
        let j = jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(j, jaccard(&b, &a));
        if !a.is_empty() {
            prop_assert_eq!(jaccard(&a, &a), 1.0);
        }
    }

    #[test]
    fn answer_scores_bounded(
        gold in prop::collection::vec(prop::collection::vec(span_strategy(), 0..4), 1..5),
        junk in prop::collection::vec(prop::collection::vec(word(), 1..6), 0..12),
    ) {
        let preds: Vec<Vec<RankedPrediction>> = gold
            .iter()
            .map(|_| junk.iter().map(|w| RankedPrediction::text(w.join(" "))).collect())
            .collect();
        let s = eval_answers(&preds, &gold, SpanRule::Endpoints).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.em) && (0.0..=1.0).contains(&s.f1));
    }

    #[test]
    fn gold_as_prediction_scores_one(gold in prop::collection::vec(prop::collection::vec(span_strategy(), 1..4), 1..5)) {
        let preds: Vec<Vec<RankedPrediction>> = gold
            .iter()
            .map(|g| g.iter().map(|e| RankedPrediction::with_span(e.line_text.clone(), e.char_start, e.char_end)).collect())
            .collect();
        let s = eval_answers(&preds, &gold, SpanRule::Endpoints).unwrap();
        prop_assert!((s.em - 1.0).abs() < 1e-12, "{:?}", s);
        prop_assert!((s.f1 - 1.0).abs() < 1e-12, "{:?}", s);
    }
}
