use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::similarity::{bleu, jaccard, BleuVariant};
use crate::templates::TemplateSet;
use crate::text::lower_words;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

/// Scores of one paraphrase group against its chosen reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDiversity {
    pub group: String,
    pub reference: String,
    pub members: usize,
    pub bleu: f64,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityReport {
    pub groups: Vec<GroupDiversity>,
    pub bleu: Option<MeanStd>,
    pub jaccard: Option<MeanStd>,
}

/// For each group of two or more paraphrases, picks a reference at random
/// and averages BLEU and Jaccard of the other members against it. Texts are
/// compared as lowercased tokens, placeholders kept as single tokens.
pub fn paraphrase_diversity(groups: &[(String, Vec<String>)], seed: u64, variant: BleuVariant) -> DiversityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, texts) in groups {
        if texts.len() < 2 {
            continue;
        }
        let r = rng.gen_range(0..texts.len());
        let reference = lower_words(&texts[r]);
        let (mut b, mut j) = (0.0, 0.0);
        for (i, t) in texts.iter().enumerate() {
            if i != r {
                let cand = lower_words(t);
                b += bleu(&cand, &reference, variant);
                j += jaccard(&cand, &reference);
            }
        }
        let k = (texts.len() - 1) as f64;
        out.push(GroupDiversity {
            group: name.clone(),
            reference: texts[r].clone(),
            members: texts.len(),
            bleu: b / k,
            jaccard: j / k,
        });
    }
    let bleus: Vec<f64> = out.iter().map(|g| g.bleu).collect();
    let jaccards: Vec<f64> = out.iter().map(|g| g.jaccard).collect();
    DiversityReport {
        bleu: MeanStd::of(&bleus),
        jaccard: MeanStd::of(&jaccards),
        groups: out,
    }
}

/// Paraphrase groups of a template set as (LF template id, question texts).
pub fn template_groups(set: &TemplateSet) -> Vec<(String, Vec<String>)> {
    set.groups()
        .iter()
        .map(|g| {
            let texts = g
                .members
                .iter()
                .filter_map(|m| set.get(m).map(|t| t.text.clone()))
                .collect();
            (g.lf_template_id.clone(), texts)
        })
        .collect()
}
