use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::lower_words;

/// Sparse feature vector: (feature index, value), indices ascending.
pub type SparseVec = Vec<(usize, f64)>;

/// TF-IDF vocabulary fit on training texts. Weights are
/// `(1 + ln tf) · ln((1 + N) / (1 + df))`, and each vector is scaled to unit
/// length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdf {
    index: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdf {
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for t in texts {
            let set: BTreeSet<String> = lower_words(t.as_ref()).into_iter().collect();
            for w in set {
                *df.entry(w).or_default() += 1;
            }
        }
        let n = texts.len() as f64;
        let mut index = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (w, d)) in df.into_iter().enumerate() {
            index.insert(w, i);
            idf.push(((1.0 + n) / (1.0 + d as f64)).ln());
        }
        Self { index, idf }
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    /// Out-of-vocabulary tokens are dropped.
    pub fn transform(&self, text: &str) -> SparseVec {
        let mut tf: HashMap<usize, usize> = HashMap::new();
        for w in lower_words(text) {
            if let Some(&i) = self.index.get(&w) {
                *tf.entry(i).or_default() += 1;
            }
        }
        let mut v: SparseVec = tf
            .into_iter()
            .map(|(i, c)| (i, (1.0 + (c as f64).ln()) * self.idf[i]))
            .filter(|&(_, x)| x != 0.0)
            .collect();
        v.sort_unstable_by_key(|&(i, _)| i);
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClsParams {
    pub learning_rate: f64,
    /// Strength of the `λ/2 ‖w‖²` penalty; the bias is not penalized.
    pub l2: f64,
    pub epochs: usize,
}

impl Default for ClsParams {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            l2: 1e-4,
            epochs: 500,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn sparse_dot(w: &[f64], x: &[(usize, f64)]) -> f64 {
    x.iter().map(|&(i, v)| w[i] * v).sum()
}

/// Mean binary cross-entropy of a logistic model plus `l2/2 ‖w‖²`.
pub fn logistic_loss(w: &[f64], b: f64, xs: &[SparseVec], ys: &[bool], l2: f64) -> f64 {
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = sparse_dot(w, x) + b;
        // log(1 + e^z) - y z, computed stably.
        let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        loss += softplus - if y { z } else { 0.0 };
    }
    loss / xs.len().max(1) as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`logistic_loss`] with respect to `w` and `b`.
pub fn logistic_gradient(w: &[f64], b: f64, xs: &[SparseVec], ys: &[bool], l2: f64) -> (Vec<f64>, f64) {
    let n = xs.len().max(1) as f64;
    let mut gw: Vec<f64> = w.iter().map(|v| l2 * v).collect();
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let r = (sigmoid(sparse_dot(w, x) + b) - if y { 1.0 } else { 0.0 }) / n;
        for &(i, v) in x {
            gw[i] += r * v;
        }
        gb += r;
    }
    (gw, gb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub label: String,
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// One-vs-rest logistic regression over TF-IDF features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClsModel {
    pub features: TfIdf,
    pub classes: Vec<ClassWeights>,
    pub params: ClsParams,
    /// Summed training loss over classes after each epoch.
    pub loss_history: Vec<f64>,
    /// Set when training saw a single label set, which is then always predicted.
    pub constant: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClsError {
    #[error("no training examples")]
    Empty,
}

/// Trains one binary classifier per label by full-batch gradient descent.
/// Each example is the text to classify with its label set.
pub fn train_cls(examples: &[(String, BTreeSet<String>)], params: ClsParams) -> Result<ClsModel, ClsError> {
    if examples.is_empty() {
        return Err(ClsError::Empty);
    }
    let texts: Vec<&str> = examples.iter().map(|(t, _)| t.as_str()).collect();
    let features = TfIdf::fit(&texts);
    let xs: Vec<SparseVec> = texts.iter().map(|t| features.transform(t)).collect();
    let labels: BTreeSet<&String> = examples.iter().flat_map(|(_, l)| l).collect();
    let distinct_sets: BTreeSet<&BTreeSet<String>> = examples.iter().map(|(_, l)| l).collect();
    let constant = if distinct_sets.len() == 1 {
        log::warn!("classifier training data has a single label set; predicting it for every input");
        distinct_sets.into_iter().next().cloned()
    } else {
        None
    };
    let dim = features.len();
    let targets: Vec<Vec<bool>> = labels
        .iter()
        .map(|l| examples.iter().map(|(_, s)| s.contains(*l)).collect())
        .collect();
    let mut classes: Vec<ClassWeights> = labels
        .iter()
        .map(|l| ClassWeights {
            label: (*l).clone(),
            weights: vec![0.0; dim],
            bias: 0.0,
        })
        .collect();
    let mut loss_history = Vec::with_capacity(params.epochs);
    if constant.is_none() {
        for _ in 0..params.epochs {
            let mut total = 0.0;
            for (c, ys) in classes.iter_mut().zip(&targets) {
                let (gw, gb) = logistic_gradient(&c.weights, c.bias, &xs, ys, params.l2);
                for (w, g) in c.weights.iter_mut().zip(gw) {
                    *w -= params.learning_rate * g;
                }
                c.bias -= params.learning_rate * gb;
                total += logistic_loss(&c.weights, c.bias, &xs, ys, params.l2);
            }
            loss_history.push(total);
        }
    }
    Ok(ClsModel {
        features,
        classes,
        params,
        loss_history,
        constant,
    })
}

impl ClsModel {
    /// Probability of each label for `text`, in label order.
    pub fn probabilities(&self, text: &str) -> Vec<(String, f64)> {
        let x = self.features.transform(text);
        self.classes
            .iter()
            .map(|c| (c.label.clone(), sigmoid(sparse_dot(&c.weights, &x) + c.bias)))
            .collect()
    }

    /// Labels with probability at least 0.5; the most probable label is
    /// always included.
    pub fn predict(&self, text: &str) -> BTreeSet<String> {
        if let Some(c) = &self.constant {
            return c.clone();
        }
        let probs = self.probabilities(text);
        let mut out: BTreeSet<String> = probs
            .iter()
            .filter(|(_, p)| *p >= 0.5)
            .map(|(l, _)| l.clone())
            .collect();
        let best = probs
            .iter()
            .fold(None::<&(String, f64)>, |m, e| match m {
                Some(b) if b.1 >= e.1 => Some(b),
                _ => Some(e),
            });
        if let Some((l, _)) = best {
            out.insert(l.clone());
        }
        out
    }
}

/// Joins a question and its note into the classifier's input text.
pub fn cls_input(question: &str, document: &str) -> String {
    format!("{question}\n{document}")
}

/// Predicts labels for a question about a note.
pub fn predict_cls(model: &ClsModel, question: &str, document: &str) -> BTreeSet<String> {
    model.predict(&cls_input(question, document))
}
