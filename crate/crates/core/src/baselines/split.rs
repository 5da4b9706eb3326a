use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::generator::QARecord;
use crate::templates::TemplateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStrategy {
    /// Paraphrase templates are divided between train and test; instances
    /// follow their template.
    Ql1,
    /// Instances are shuffled and divided.
    Ql2,
    /// As `Ql2`, over answered records only.
    Qa,
}

impl std::str::FromStr for SplitStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ql1" => Ok(Self::Ql1),
            "ql2" => Ok(Self::Ql2),
            "qa" => Ok(Self::Qa),
            _ => Err(format!("unknown split strategy {s:?} (expected ql1, ql2 or qa)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub strategy: SplitStrategy,
    /// Fraction that goes to train.
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            strategy: SplitStrategy::Ql2,
            ratio: 0.8,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Split {
    pub train: Vec<QARecord>,
    pub test: Vec<QARecord>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("split ratio must lie strictly between 0 and 1, got {0}")]
pub struct BadRatio(pub f64);

/// Number of test templates for a paraphrase group of `n` templates: at least
/// one on each side once there are two or more.
pub fn ql1_test_count(n: usize, ratio: f64) -> usize {
    if n < 2 {
        return 0;
    }
    let t = ((1.0 - ratio) * n as f64).round() as usize;
    t.clamp(1, n - 1)
}

/// Template ids held out for testing under the template-level split. Groups
/// are visited in LF template order and shuffled with one seeded stream.
pub fn ql1_test_templates(templates: &TemplateSet, ratio: f64, seed: u64) -> BTreeSet<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeSet::new();
    for g in templates.groups() {
        let mut members = g.members.clone();
        members.sort();
        members.shuffle(&mut rng);
        let k = ql1_test_count(members.len(), ratio);
        out.extend(members.into_iter().take(k));
    }
    out
}

/// Divides records into train and test. Records keep their input order on
/// each side.
pub fn split_dataset(records: &[QARecord], templates: &TemplateSet, spec: SplitSpec) -> Result<Split, BadRatio> {
    if !(spec.ratio > 0.0 && spec.ratio < 1.0) {
        return Err(BadRatio(spec.ratio));
    }
    let mut split = Split::default();
    match spec.strategy {
        SplitStrategy::Ql1 => {
            let test_ids = ql1_test_templates(templates, spec.ratio, spec.seed);
            let mut unknown: BTreeMap<&str, usize> = BTreeMap::new();
            for r in records {
                if templates.get(&r.question_template_id).is_none() {
                    *unknown.entry(r.question_template_id.as_str()).or_default() += 1;
                }
                if test_ids.contains(&r.question_template_id) {
                    split.test.push(r.clone());
                } else {
                    split.train.push(r.clone());
                }
            }
            for (id, n) in unknown {
                split
                    .warnings
                    .push(format!("{n} records use template {id}, which is not in the template set; kept in train"));
            }
        }
        SplitStrategy::Ql2 | SplitStrategy::Qa => {
            let pool: Vec<&QARecord> = records
                .iter()
                .filter(|r| spec.strategy == SplitStrategy::Ql2 || r.is_answered())
                .collect();
            let mut idx: Vec<usize> = (0..pool.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            idx.shuffle(&mut rng);
            let n_train = (spec.ratio * pool.len() as f64).round() as usize;
            let mut train_idx = idx[..n_train].to_vec();
            let mut test_idx = idx[n_train..].to_vec();
            train_idx.sort_unstable();
            test_idx.sort_unstable();
            split.train = train_idx.into_iter().map(|i| pool[i].clone()).collect();
            split.test = test_idx.into_iter().map(|i| pool[i].clone()).collect();
        }
    }
    if split.train.is_empty() {
        split.warnings.push("train side is empty".into());
    }
    if split.test.is_empty() {
        split.warnings.push("test side is empty".into());
    }
    for w in &split.warnings {
        log::warn!("{w}");
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ql1_counts() {
        assert_eq!(ql1_test_count(1, 0.8), 0);
        assert_eq!(ql1_test_count(2, 0.8), 1);
        assert_eq!(ql1_test_count(5, 0.8), 1);
        assert_eq!(ql1_test_count(7, 0.8), 1);
        assert_eq!(ql1_test_count(8, 0.8), 2);
        assert_eq!(ql1_test_count(4, 0.1), 3);
    }

    #[test]
    fn rejects_degenerate_ratio() {
        let set = TemplateSet::default();
        for r in [0.0, 1.0, -0.5, f64::NAN] {
            let spec = SplitSpec { ratio: r, ..SplitSpec::default() };
            assert!(split_dataset(&[], &set, spec).is_err());
        }
    }
}
