use std::collections::BTreeMap;
use std::path::Path;

use crate::lf::KbRef;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RefRange {
    pub reflow: f64,
    pub refhigh: f64,
    pub unit: String,
}

/// Healthy reference ranges per lab, keyed case-insensitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefRangeKb {
    labs: BTreeMap<String, RefRange>,
}

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("missing KB entry {path} for {lab}")]
pub struct MissingKbEntry {
    pub path: String,
    pub lab: String,
}

impl RefRangeKb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lab: &str, range: RefRange) {
        self.labs.insert(lab.to_lowercase(), range);
    }

    pub fn get(&self, lab: &str) -> Option<&RefRange> {
        self.labs.get(&lab.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.labs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labs.is_empty()
    }

    /// Parses `lab<TAB>reflow<TAB>refhigh[<TAB>unit]` lines; `#` starts a
    /// comment line.
    pub fn parse(text: &str) -> Result<Self, KbError> {
        let mut kb = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let err = |message: String| KbError::Parse { line, message };
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if !(3..=4).contains(&cols.len()) || cols[0].is_empty() {
                return Err(err("expected lab<TAB>reflow<TAB>refhigh[<TAB>unit]".into()));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
            let (reflow, refhigh) = (num(cols[1])?, num(cols[2])?);
            if reflow.partial_cmp(&refhigh) != Some(std::cmp::Ordering::Less) {
                return Err(err(format!("reflow {reflow} is not below refhigh {refhigh}")));
            }
            if kb.get(cols[0]).is_some() {
                return Err(err(format!("duplicate lab {}", cols[0])));
            }
            kb.insert(
                cols[0],
                RefRange {
                    reflow,
                    refhigh,
                    unit: cols.get(3).copied().unwrap_or("").to_string(),
                },
            );
        }
        Ok(kb)
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Value of a `lab.reflow` / `lab.refhigh` reference for one lab.
    pub fn resolve(&self, r: &KbRef, lab: &str) -> Result<f64, MissingKbEntry> {
        let missing = || MissingKbEntry {
            path: r.path().to_string(),
            lab: lab.to_string(),
        };
        let segs: Vec<&str> = r.segments().collect();
        let range = match segs.as_slice() {
            ["lab", _] => self.get(lab).ok_or_else(missing)?,
            _ => return Err(missing()),
        };
        match segs[1] {
            "reflow" => Ok(range.reflow),
            "refhigh" => Ok(range.refhigh),
            _ => Err(missing()),
        }
    }
}
