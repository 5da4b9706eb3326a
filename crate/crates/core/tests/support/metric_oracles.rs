//! Slow, direct implementations of the evaluation metrics, written from
//! their definitions without sharing code with the library, plus seeded
//! random case generators.
#![allow(dead_code)]

use annoqa::baselines::RankedPrediction;
use annoqa::EvidenceSpan;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn count_ngram(tokens: &[String], gram: &[String]) -> usize {
    let n = gram.len();
    let mut c = 0;
    let mut i = 0;
    while i + n <= tokens.len() {
        if tokens[i..i + n] == *gram {
            c += 1;
        }
        i += 1;
    }
    c
}

/// BLEU-4 against one reference; `smoothed` adds one to the numerator and
/// denominator of the 2- to 4-gram precisions.
pub fn bleu(cand: &[String], reference: &[String], smoothed: bool) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut product = 1.0f64;
    for n in 1..=4usize {
        let mut seen: Vec<Vec<String>> = Vec::new();
        let mut matched = 0usize;
        let mut total = 0usize;
        if cand.len() >= n {
            for start in 0..=cand.len() - n {
                let g = cand[start..start + n].to_vec();
                total += 1;
                if seen.contains(&g) {
                    continue;
                }
                let in_cand = count_ngram(cand, &g);
                let in_ref = count_ngram(reference, &g);
                matched += if in_cand < in_ref { in_cand } else { in_ref };
                seen.push(g);
            }
        }
        let p = if smoothed && n >= 2 {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        } else if total == 0 {
            0.0
        } else {
            matched as f64 / total as f64
        };
        product *= p;
    }
    if product == 0.0 {
        return 0.0;
    }
    let c = cand.len() as f64;
    let r = reference.len() as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * product.powf(0.25)
}

fn distinct_lower(tokens: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in tokens {
        let l = t.to_lowercase();
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a = distinct_lower(a);
    let b = distinct_lower(b);
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Texts here are whitespace-separated alphanumeric words.
pub fn f1(pred: &str, gold: &str) -> f64 {
    let p: Vec<String> = pred.split_whitespace().map(str::to_lowercase).collect();
    let mut g: Vec<Option<String>> = gold.split_whitespace().map(|w| Some(w.to_lowercase())).collect();
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let glen = g.len() as f64;
    let mut same = 0.0;
    for w in &p {
        if let Some(slot) = g.iter_mut().find(|s| s.as_deref() == Some(w.as_str())) {
            *slot = None;
            same += 1.0;
        }
    }
    if same == 0.0 {
        return 0.0;
    }
    let prec = same / p.len() as f64;
    let rec = same / glen;
    2.0 * prec * rec / (prec + rec)
}

pub fn exact(pred: &RankedPrediction, gold: &EvidenceSpan) -> bool {
    if let Some(a) = &gold.answer_entity {
        let (hay, needle): (Vec<char>, Vec<char>) = (pred.text.chars().collect(), a.chars().collect());
        if !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle.as_slice()) {
            return true;
        }
    }
    match pred.span {
        Some((s, e)) => {
            let ds = s as i64 - gold.char_start as i64;
            let de = e as i64 - gold.char_end as i64;
            (-20..=20).contains(&ds) && (-20..=20).contains(&de)
        }
        None => pred.text.trim() == gold.line_text.trim(),
    }
}

/// Per-question credit: a full credit table, then gold evidences claim
/// predictions in order.
pub fn question(preds: &[RankedPrediction], gold: &[EvidenceSpan]) -> (f64, f64) {
    let k = preds.len().min(10);
    let table: Vec<Vec<(u8, f64)>> = gold
        .iter()
        .map(|g| (0..k).map(|j| (exact(&preds[j], g) as u8, f1(&preds[j].text, &g.line_text))).collect())
        .collect();
    let mut taken = vec![false; k];
    let mut em = 0.0;
    let mut f = 0.0;
    for row in &table {
        let mut pick: Option<usize> = None;
        for j in 0..k {
            if taken[j] {
                continue;
            }
            pick = match pick {
                None => Some(j),
                Some(b) if row[j].0 > row[b].0 || (row[j].0 == row[b].0 && row[j].1 > row[b].1) => Some(j),
                keep => keep,
            };
        }
        if let Some(j) = pick {
            if row[j].0 == 1 || row[j].1 > 0.0 {
                taken[j] = true;
                em += row[j].0 as f64;
                f += row[j].1;
            }
        }
    }
    (em / gold.len() as f64, f / gold.len() as f64)
}

pub fn answers(preds: &[Vec<RankedPrediction>], gold: &[Vec<EvidenceSpan>]) -> (f64, f64) {
    let mut n = 0.0;
    let (mut em, mut f) = (0.0, 0.0);
    for (p, g) in preds.iter().zip(gold) {
        if g.is_empty() {
            continue;
        }
        let (a, b) = question(p, g);
        em += a;
        f += b;
        n += 1.0;
    }
    if n == 0.0 {
        (0.0, 0.0)
    } else {
        (em / n, f / n)
    }
}

pub fn subset(pred: &[Vec<String>], gold: &[Vec<String>]) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let norm = |v: &Vec<String>| {
        let mut v = v.clone();
        v.sort();
        v.dedup();
        v
    };
    let hits = pred.iter().zip(gold).filter(|(p, g)| norm(p) == norm(g)).count();
    hits as f64 / gold.len() as f64
}

const VOCAB: &[&str] = &["the", "patient", "lasix", "40mg", "BMI", "33", "obese", "was", "given", "for", "pain", "The"];

fn words<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> Vec<String> {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| VOCAB.choose(rng).unwrap().to_string()).collect()
}

pub fn token_pairs(seed: u64, n: usize) -> Vec<(Vec<String>, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = words(&mut rng, 0, 9);
            let b = if rng.gen_bool(0.3) {
                let mut b = a.clone();
                b.truncate(rng.gen_range(0..=a.len()));
                b.extend(words(&mut rng, 0, 3));
                b
            } else {
                words(&mut rng, 0, 9)
            };
            (a, b)
        })
        .collect()
}

pub type AnswerCase = (Vec<Vec<RankedPrediction>>, Vec<Vec<EvidenceSpan>>);

pub fn answer_cases(seed: u64, n: usize) -> Vec<AnswerCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let questions = rng.gen_range(1..=4);
            let mut preds = Vec::new();
            let mut golds = Vec::new();
            for _ in 0..questions {
                let g: Vec<EvidenceSpan> = (0..rng.gen_range(0..=3))
                    .map(|_| {
                        let text = words(&mut rng, 1, 7).join(" ");
                        let start = rng.gen_range(0..200);
                        let answer = if rng.gen_bool(0.5) {
                            let w: Vec<&str> = text.split(' ').collect();
                            Some(w.choose(&mut rng).unwrap().to_string())
                        } else {
                            None
                        };
                        EvidenceSpan {
                            doc_id: "d".into(),
                            line: 1,
                            char_start: start,
                            char_end: start + text.len(),
                            line_text: text,
                            answer_entity: answer,
                        }
                    })
                    .collect();
                let p: Vec<RankedPrediction> = (0..rng.gen_range(0..=12))
                    .map(|_| {
                        let near = (!g.is_empty() && rng.gen_bool(0.5)).then(|| g.choose(&mut rng).unwrap().clone());
                        let text = match &near {
                            Some(e) if rng.gen_bool(0.4) => e.line_text.clone(),
                            _ => words(&mut rng, 1, 6).join(" "),
                        };
                        let span = if rng.gen_bool(0.6) {
                            let (s, e) = near.as_ref().map_or((100, 130), |e| (e.char_start, e.char_end));
                            let ds: i64 = rng.gen_range(-23..=23);
                            let de: i64 = rng.gen_range(-23..=23);
                            Some(((s as i64 + ds).max(0) as usize, (e as i64 + de).max(0) as usize))
                        } else {
                            None
                        };
                        RankedPrediction { text, span }
                    })
                    .collect();
                preds.push(p);
                golds.push(g);
            }
            (preds, golds)
        })
        .collect()
}

pub fn label_cases(seed: u64, n: usize) -> Vec<(Vec<Vec<String>>, Vec<Vec<String>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = ["obese", "cad", "asthma", "gerd"];
    let set = |rng: &mut ChaCha8Rng| -> Vec<String> {
        (0..rng.gen_range(0..=3)).map(|_| labels.choose(rng).unwrap().to_string()).collect()
    };
    (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=6);
            let gold: Vec<Vec<String>> = (0..k).map(|_| set(&mut rng)).collect();
            let pred = gold
                .iter()
                .map(|g| {
                    if rng.gen_bool(0.5) {
                        let mut p = g.clone();
                        p.reverse();
                        p
                    } else {
                        set(&mut rng)
                    }
                })
                .collect();
            (pred, gold)
        })
        .collect()
}
