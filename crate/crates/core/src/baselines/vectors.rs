use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Word embeddings read from a text file with one `token v1 … vd` per line.
#[derive(Debug, Clone, Default)]
pub struct WordVectors {
    dim: usize,
    map: HashMap<String, Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum VectorError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("no in-vocabulary tokens in {0:?}")]
    NoKnownTokens(String),
}

impl WordVectors {
    /// Parses the text format. Tokens are matched case-insensitively, so they
    /// are stored lowercased; the first line for a token wins.
    pub fn parse(text: &str) -> Result<Self, VectorError> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let v: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| VectorError::Malformed {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            if v.is_empty() {
                return Err(VectorError::Malformed {
                    line: i + 1,
                    msg: format!("token {token:?} has no components"),
                });
            }
            if out.dim == 0 {
                out.dim = v.len();
            } else if v.len() != out.dim {
                return Err(VectorError::Malformed {
                    line: i + 1,
                    msg: format!("expected {} components, found {}", out.dim, v.len()),
                });
            }
            out.map.entry(token.to_lowercase()).or_insert(v);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, VectorError> {
        let text = std::fs::read_to_string(path).map_err(|source| VectorError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Vec<f64>)>) -> Self {
        let mut out = Self::default();
        for (t, v) in pairs {
            if out.dim == 0 {
                out.dim = v.len();
            }
            assert_eq!(v.len(), out.dim, "vector for {t:?} has the wrong dimension");
            out.map.entry(t.to_lowercase()).or_insert(v);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.map.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    /// Seeded random vectors with components in [-1, 1] rounded to four
    /// decimals, one per distinct lowercased token, assigned in sorted order.
    pub fn synthetic<S: AsRef<str>>(tokens: &[S], dim: usize, seed: u64) -> Self {
        let vocab: std::collections::BTreeSet<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Self {
            dim,
            map: HashMap::new(),
        };
        for t in vocab {
            let v = (0..dim)
                .map(|_| (rng.gen_range(-1.0f64..=1.0) * 1e4).round() / 1e4)
                .collect();
            out.map.insert(t, v);
        }
        out
    }

    /// Text format, tokens sorted.
    pub fn to_text(&self) -> String {
        let mut keys: Vec<&String> = self.map.keys().collect();
        keys.sort();
        let mut s = String::new();
        for k in keys {
            s.push_str(k);
            for x in &self.map[k] {
                s.push(' ');
                s.push_str(&x.to_string());
            }
            s.push('\n');
        }
        s
    }

    /// The same vectors multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            dim: self.dim,
            map: self
                .map
                .iter()
                .map(|(t, v)| (t.clone(), v.iter().map(|x| x * k).collect()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentenceMode {
    /// Unweighted mean of the known token vectors.
    #[default]
    Mean,
    /// Smooth inverse frequency weighting followed by removal of the first
    /// principal component.
    Sif,
}

pub const SIF_A: f64 = 1e-3;

/// Mean of the known token vectors, each scaled by `weight(token)`.
pub fn weighted_mean<S: AsRef<str>>(
    vectors: &WordVectors,
    tokens: &[S],
    weight: impl Fn(&str) -> f64,
) -> Result<Vec<f64>, VectorError> {
    let mut sum = vec![0.0; vectors.dim()];
    let mut n = 0usize;
    for t in tokens {
        let t = t.as_ref();
        if let Some(v) = vectors.get(t) {
            let w = weight(t);
            for (s, x) in sum.iter_mut().zip(v) {
                *s += w * x;
            }
            n += 1;
        }
    }
    if n == 0 {
        let joined: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        return Err(VectorError::NoKnownTokens(joined.join(" ")));
    }
    for s in &mut sum {
        *s /= n as f64;
    }
    Ok(sum)
}

/// Unweighted mean of the known token vectors.
pub fn sentence_vector<S: AsRef<str>>(vectors: &WordVectors, tokens: &[S]) -> Result<Vec<f64>, VectorError> {
    weighted_mean(vectors, tokens, |_| 1.0)
}

/// Encodes sentences against a fixed set of reference sentences (the train
/// templates), which supply the unigram probabilities and principal
/// component for SIF.
#[derive(Debug, Clone)]
pub struct SentenceEncoder<'v> {
    vectors: &'v WordVectors,
    mode: SentenceMode,
    probs: HashMap<String, f64>,
    component: Option<Vec<f64>>,
}

impl<'v> SentenceEncoder<'v> {
    /// `reference` holds tokenized sentences. Sentences without known tokens
    /// do not contribute to the principal component.
    pub fn new(vectors: &'v WordVectors, mode: SentenceMode, reference: &[Vec<String>]) -> Self {
        let mut enc = Self {
            vectors,
            mode,
            probs: HashMap::new(),
            component: None,
        };
        if mode == SentenceMode::Sif {
            enc.probs = unigram_probs(reference);
            let rows: Vec<Vec<f64>> = reference.iter().filter_map(|s| enc.sif_mean(s).ok()).collect();
            enc.component = first_component(&rows);
        }
        enc
    }

    pub fn mode(&self) -> SentenceMode {
        self.mode
    }

    /// SIF-weighted mean before component removal.
    pub fn sif_mean<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>, VectorError> {
        weighted_mean(self.vectors, tokens, |t| {
            let p = self.probs.get(&t.to_lowercase()).copied().unwrap_or(0.0);
            SIF_A / (SIF_A + p)
        })
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>, VectorError> {
        match self.mode {
            SentenceMode::Mean => sentence_vector(self.vectors, tokens),
            SentenceMode::Sif => {
                let mut v = self.sif_mean(tokens)?;
                if let Some(u) = &self.component {
                    let d = dot(u, &v);
                    for (x, ui) in v.iter_mut().zip(u) {
                        *x -= d * ui;
                    }
                }
                Ok(v)
            }
        }
    }
}

/// Relative frequency of each lowercased token over all sentences.
pub fn unigram_probs(sentences: &[Vec<String>]) -> HashMap<String, f64> {
    let mut counts: HashMap<String, f64> = HashMap::new();
    let mut total = 0.0;
    for s in sentences {
        for t in s {
            *counts.entry(t.to_lowercase()).or_default() += 1.0;
            total += 1.0;
        }
    }
    for c in counts.values_mut() {
        *c /= total;
    }
    counts
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity, 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Leading right singular vector of the row matrix (uncentered), by power
/// iteration on `XᵀX`. The sign is fixed so the largest-magnitude component
/// is positive.
pub fn first_component(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let dim = rows.first()?.len();
    let mut gram = vec![vec![0.0; dim]; dim];
    for r in rows {
        for i in 0..dim {
            for j in 0..dim {
                gram[i][j] += r[i] * r[j];
            }
        }
    }
    // Start from the row-sum direction; fall back to a unit vector.
    let mut u: Vec<f64> = (0..dim).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
    if dot(&u, &u) == 0.0 {
        u = vec![1.0; dim];
    }
    let mut prev = 0.0;
    for _ in 0..1000 {
        let next: Vec<f64> = gram.iter().map(|row| dot(row, &u)).collect();
        let norm = dot(&next, &next).sqrt();
        if norm == 0.0 {
            return None;
        }
        u = next.into_iter().map(|x| x / norm).collect();
        if (norm - prev).abs() <= 1e-12 * norm {
            break;
        }
        prev = norm;
    }
    let lead = u
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    Some(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> WordVectors {
        WordVectors::parse("a 1 0\nb 0 1\nc 1 1\n").unwrap()
    }

    #[test]
    fn mean_vectors() {
        let v = toy();
        assert_eq!(sentence_vector(&v, &["a"]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(sentence_vector(&v, &["a", "b"]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(sentence_vector(&v, &["A", "zzz", "b"]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(sentence_vector(&v, &["zzz"]), Err(VectorError::NoKnownTokens(_))));
    }

    #[test]
    fn synthetic_round_trips() {
        let v = WordVectors::synthetic(&["b", "A", "a", "|medication|"], 4, 7);
        assert_eq!((v.len(), v.dim()), (3, 4));
        let back = WordVectors::parse(&v.to_text()).unwrap();
        assert_eq!(back.to_text(), v.to_text());
        assert_eq!(back.get("a"), v.get("A"));
    }

    #[test]
    fn parse_errors() {
        assert!(WordVectors::parse("a 1 0\nb 1\n").is_err());
        assert!(WordVectors::parse("a x y\n").is_err());
        assert!(WordVectors::parse("a\n").is_err());
    }

    #[test]
    fn sif_weights_by_hand() {
        // Reference corpus "a b", "a c", "a": p(a)=3/5, p(b)=p(c)=1/5.
        let v = toy();
        let refs: Vec<Vec<String>> = ["a b", "a c", "a"]
            .iter()
            .map(|s| s.split(' ').map(str::to_string).collect())
            .collect();
        let enc = SentenceEncoder::new(&v, SentenceMode::Sif, &refs);
        let wa = 1e-3 / (1e-3 + 0.6);
        let wb = 1e-3 / (1e-3 + 0.2);
        let m = enc.sif_mean(&["a", "b"]).unwrap();
        assert!((m[0] - wa / 2.0).abs() < 1e-15);
        assert!((m[1] - wb / 2.0).abs() < 1e-15);
        let m = enc.sif_mean(&["a", "c"]).unwrap();
        assert!((m[0] - (wa + wb) / 2.0).abs() < 1e-15);
        assert!((m[1] - wb / 2.0).abs() < 1e-15);
        // Component removal leaves the encoded vector orthogonal to it.
        let u = enc.component.clone().unwrap();
        assert!(dot(&enc.encode(&["a", "c"]).unwrap(), &u).abs() < 1e-12);
    }

    #[test]
    fn first_component_of_diagonal() {
        let u = first_component(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-9 && u[1].abs() < 1e-6);
        let u = first_component(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((u[0] - s).abs() < 1e-12 && (u[1] - s).abs() < 1e-12);
    }

    #[test]
    fn cosine_bounds() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((cosine(&[1.0, 0.0], &[-2.0, 0.0]) + 1.0).abs() < 1e-15);
    }
}
