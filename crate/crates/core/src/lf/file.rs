use std::collections::BTreeSet;
use std::path::Path;

use super::ast::LogicalForm;
use super::parser::{parse_lf, LfParseError};

/// One entry of an LF template file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfTemplate {
    pub id: String,
    pub lf: LogicalForm,
}

#[derive(Debug, thiserror::Error)]
pub enum LfFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected '<id>\\t<logical form>'")]
    Malformed { line: usize },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: LfParseError },
    #[error("line {line}: duplicate LF template id {id}")]
    Duplicate { line: usize, id: String },
    #[error("line {line}: LF template {id} has no answer variable")]
    NoAnswer { line: usize, id: String },
}

pub fn parse_lf_templates(text: &str) -> Result<Vec<LfTemplate>, LfFileError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, body) = raw.split_once('\t').ok_or(LfFileError::Malformed { line })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(LfFileError::Malformed { line });
        }
        let lf = parse_lf(body).map_err(|source| LfFileError::Parse { line, source })?;
        if !lf.has_answer_var() {
            return Err(LfFileError::NoAnswer {
                line,
                id: id.to_string(),
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(LfFileError::Duplicate {
                line,
                id: id.to_string(),
            });
        }
        out.push(LfTemplate {
            id: id.to_string(),
            lf,
        });
    }
    Ok(out)
}

pub fn load_lf_templates(path: &Path) -> Result<Vec<LfTemplate>, LfFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| LfFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_lf_templates(&text)
}
