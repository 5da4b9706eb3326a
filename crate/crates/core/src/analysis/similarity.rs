use std::collections::{BTreeSet, HashMap};

/// Which BLEU formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BleuVariant {
    /// Add-one smoothing on 2- to 4-gram precisions.
    #[default]
    Smoothed,
    Unsmoothed,
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    m
}

/// Sentence BLEU-4 of `candidate` against one `reference`, with uniform
/// weights and the standard brevity penalty. Returns 0 when either side is
/// empty or no unigram matches.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(candidate: &[S], reference: &[T], variant: BleuVariant) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
        let p = if n > 1 && variant == BleuVariant::Smoothed {
            (matched + 1) as f64 / (total + 1) as f64
        } else if total == 0 {
            0.0
        } else {
            matched as f64 / total as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / 4.0;
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_sum.exp()
}

/// Jaccard index of the lowercased token sets.
pub fn jaccard<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> f64 {
    let a: BTreeSet<String> = a.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let b: BTreeSet<String> = b.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn bleu_examples() {
        let s = "how was the problem managed";
        assert_eq!(bleu(&toks(s), &toks(s), BleuVariant::Smoothed), 1.0);
        let v = bleu(&toks("the cat sat"), &toks("the cat sat down"), BleuVariant::Smoothed);
        assert!((v - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        assert_eq!(bleu(&toks("a b c d"), &toks("e f g h"), BleuVariant::Smoothed), 0.0);
        assert_eq!(bleu(&toks("the cat sat"), &toks("the cat sat down"), BleuVariant::Unsmoothed), 0.0);
        assert_eq!(bleu(&toks("x"), &toks("x"), BleuVariant::Smoothed), 1.0);
    }

    #[test]
    fn bleu_clips_repeats() {
        // p1 = 2/7, p2..p4 = 1/7, 1/6, 1/5 after smoothing; BP = 1.
        let v = bleu(&toks("the the the the the the the"), &toks("the cat is on the mat"), BleuVariant::Smoothed);
        let want = ((2.0f64 / 7.0).ln() + (1.0f64 / 7.0).ln() + (1.0f64 / 6.0).ln() + (1.0f64 / 5.0).ln()) / 4.0;
        assert!((v - want.exp()).abs() < 1e-12);
    }

    #[test]
    fn jaccard_examples() {
        let a = ["how", "was", "the", "problem", "managed"];
        let b = ["how", "was", "patients", "problem", "treated"];
        assert!((jaccard(&a, &b) - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&["a"], &["b"]), 0.0);
        assert_eq!(jaccard(&["A", "b"], &["a", "B"]), 1.0);
    }
}
