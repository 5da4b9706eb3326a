use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::annfmt::{parse_concept_line, AnnLine};
use super::dates::DateConfig;
use super::model::{AnnotationCorpus, CorpusBuilder};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_opt(path: &Path) -> Result<Option<String>, LoadError> {
    if path.exists() {
        read(path).map(Some)
    } else {
        Ok(None)
    }
}

fn list(dir: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>, LoadError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|source| LoadError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| LoadError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

const ANN_KINDS: &[&str] = &["con", "att", "rel", "chains", "jsonl"];

struct DocFiles {
    text: String,
    anns: Vec<(AnnLine, String)>,
    errors: Vec<(String, String)>,
}

fn read_doc(root: &Path, doc_id: &str, txt: &Path) -> Result<DocFiles, LoadError> {
    let text = read(txt)?;
    let mut anns = Vec::new();
    let mut errors = Vec::new();
    for kind in ANN_KINDS {
        let path = root.join("ann").join(format!("{doc_id}.{kind}"));
        let Some(body) = read_opt(&path)? else {
            continue;
        };
        let name = format!("ann/{doc_id}.{kind}");
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = format!("{name}:{}", i + 1);
            let parsed = if *kind == "jsonl" {
                serde_json::from_str::<AnnLine>(line).map_err(|e| format!("column {}: {e}", e.column()))
            } else {
                parse_concept_line(line).map_err(|e| e.to_string())
            };
            match parsed {
                Ok(a) => anns.push((a, loc)),
                Err(e) => errors.push((loc, e)),
            }
        }
    }
    Ok(DocFiles { text, anns, errors })
}

/// Loads a corpus directory with default date handling.
pub fn load_corpus(root: &Path) -> Result<AnnotationCorpus, LoadError> {
    load_corpus_with(root, DateConfig::default())
}

/// Loads `docs/*.txt`, `ann/<doc>.{con,att,rel,chains,jsonl}`, `patients.tsv`
/// and `classes.tsv` under `root`. Integrity problems are collected in
/// [`AnnotationCorpus::violations`]; only unreadable files are errors.
pub fn load_corpus_with(root: &Path, dates: DateConfig) -> Result<AnnotationCorpus, LoadError> {
    let docs = list(&root.join("docs"), "txt")?;
    let files: Vec<DocFiles> = docs
        .par_iter()
        .map(|(id, path)| read_doc(root, id, path))
        .collect::<Result<_, _>>()?;

    let mut b = CorpusBuilder::new(dates);
    for ((id, _), f) in docs.iter().zip(&files) {
        b.add_document(id, id, None, &f.text);
    }

    if let Some(body) = read_opt(&root.join("patients.tsv"))? {
        let mut assigned: BTreeMap<String, usize> = BTreeMap::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = format!("patients.tsv:{}", i + 1);
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() < 2 || cols.len() > 3 || cols[0].is_empty() || cols[1].is_empty() {
                b.add_violation(loc, "expected patient_id<TAB>doc_id[<TAB>source]");
                continue;
            }
            if let Some(prev) = assigned.insert(cols[1].to_string(), i + 1) {
                b.add_violation(loc, format!("document {} already assigned on line {prev}", cols[1]));
                continue;
            }
            let source = cols.get(2).copied().filter(|s| !s.is_empty());
            if !b.set_patient(cols[1], cols[0], source) {
                b.add_violation(loc, format!("unknown document {}", cols[1]));
            }
        }
    }

    for ((id, _), f) in docs.iter().zip(files) {
        for (loc, e) in f.errors {
            b.add_violation(loc, e);
        }
        for (a, loc) in f.anns {
            b.add_annotation(id, a, loc);
        }
    }
    for kind in ANN_KINDS {
        for (stem, _) in list(&root.join("ann"), kind)? {
            if !b.has_document(&stem) {
                b.add_violation(format!("ann/{stem}.{kind}"), format!("no document docs/{stem}.txt"));
            }
        }
    }

    if let Some(body) = read_opt(&root.join("classes.tsv"))? {
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = format!("classes.tsv:{}", i + 1);
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 3 {
                b.add_violation(loc, "expected target<TAB>task<TAB>label[,label]");
                continue;
            }
            let labels = cols[2].split(',').map(str::to_string).collect();
            b.add_class(cols[0], cols[1], labels, loc);
        }
    }
    Ok(b.finish())
}
