//! Pipe-delimited annotation lines and their structured-record equivalent.
//!
//! ```text
//! concept    c="insulin" 5:7 5:7||t="medication"[||a="present"][||time="2115-12-14"]
//! attribute  c="insulin" 5:7 5:7[||t="medication"]||a="dosage"="40mg"[ 5:9 5:9]
//! relation   c="ffp" 9:8 9:8||r="treats"||c="anticoagulation" 9:3 9:3
//! chain      c="..." 2:1 2:4||c="the procedure" 3:3 3:4[||t="coref_treatment"]
//! ```
//!
//! Positions are `line:token`, lines 1-based, tokens 0-based and
//! whitespace-delimited, both ends inclusive.

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// A concept mention as written in an annotation line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRef {
    pub text: String,
    pub line: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub line: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnnLine {
    Concept {
        mention: MentionRef,
        #[serde(rename = "type")]
        entity_type: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        assertion: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time: Option<String>,
    },
    Attribute {
        owner: MentionRef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        owner_type: Option<String>,
        name: String,
        value: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value_at: Option<Position>,
    },
    Relation {
        head: MentionRef,
        #[serde(rename = "type")]
        relation_type: String,
        tail: MentionRef,
    },
    Chain {
        members: Vec<MentionRef>,
        #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
        coref_type: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct AnnParseError {
    /// 1-based character column where the offending field starts.
    pub column: usize,
    pub message: String,
}

fn err(column: usize, message: impl Into<String>) -> AnnParseError {
    AnnParseError {
        column,
        message: message.into(),
    }
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"^c="(.*)" (\d+):(\d+) (\d+):(\d+)$"#).expect("valid mention regex")
    })
}

fn keyed_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"^([a-z]+)="([^"]*)"$"#).expect("valid field regex"))
}

fn attr_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"^a="([^"]+)"="(.*?)"(?: (\d+):(\d+) (\d+):(\d+))?$"#)
            .expect("valid attribute regex")
    })
}

fn num(s: &str, column: usize) -> Result<usize, AnnParseError> {
    s.parse().map_err(|_| err(column, format!("bad number {s}")))
}

fn span(
    caps: &regex::Captures<'_>,
    first: usize,
    column: usize,
) -> Result<Position, AnnParseError> {
    let l1 = num(&caps[first], column)?;
    let t1 = num(&caps[first + 1], column)?;
    let l2 = num(&caps[first + 2], column)?;
    let t2 = num(&caps[first + 3], column)?;
    if l1 == 0 {
        return Err(err(column, "line numbers start at 1"));
    }
    if l1 != l2 {
        return Err(err(column, "span crosses lines"));
    }
    if t2 < t1 {
        return Err(err(column, "span ends before it starts"));
    }
    Ok(Position {
        line: l1,
        start: t1,
        end: t2,
    })
}

fn parse_mention(field: &str, column: usize) -> Result<MentionRef, AnnParseError> {
    let caps = mention_re()
        .captures(field)
        .ok_or_else(|| err(column, "expected c=\"text\" L:T L:T"))?;
    let pos = span(&caps, 2, column)?;
    let text = caps[1].to_string();
    if text.trim().is_empty() {
        return Err(err(column, "empty concept text"));
    }
    Ok(MentionRef {
        text,
        line: pos.line,
        start: pos.start,
        end: pos.end,
    })
}

/// Parses one annotation line of any of the four kinds.
pub fn parse_concept_line(line: &str) -> Result<AnnLine, AnnParseError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut fields = Vec::new();
    let mut offset = 0;
    for f in line.split("||") {
        let column = line[..offset].chars().count() + 1;
        fields.push((f, column));
        offset += f.len() + 2;
    }
    let mut mentions = Vec::new();
    let mut relation = None;
    let mut types = Vec::new();
    let mut assertion = None;
    let mut time = None;
    let mut attribute = None;
    for (field, column) in fields {
        if field.starts_with("c=") {
            if relation.is_some() && mentions.len() == 2 {
                return Err(err(column, "relation has more than two concepts"));
            }
            mentions.push((parse_mention(field, column)?, column));
            continue;
        }
        if field.starts_with("a=") && field.matches('"').count() > 2 {
            let caps = attr_re()
                .captures(field)
                .ok_or_else(|| err(column, "expected a=\"name\"=\"value\" [L:T L:T]"))?;
            let value_at = match caps.get(3) {
                Some(_) => Some(span(&caps, 3, column)?),
                None => None,
            };
            if attribute.is_some() {
                return Err(err(column, "more than one attribute"));
            }
            attribute = Some((caps[1].to_string(), caps[2].to_string(), value_at, column));
            continue;
        }
        let caps = keyed_re()
            .captures(field)
            .ok_or_else(|| err(column, format!("unrecognized field {field:?}")))?;
        let value = caps[2].to_string();
        let slot = match &caps[1] {
            "t" => {
                types.push(value);
                continue;
            }
            "r" => &mut relation,
            "a" => &mut assertion,
            "time" => &mut time,
            other => return Err(err(column, format!("unknown field {other}"))),
        };
        if slot.is_some() {
            return Err(err(column, format!("repeated field {}", &caps[1])));
        }
        *slot = Some(value);
    }
    if mentions.is_empty() {
        return Err(err(1, "no concept"));
    }
    if types.len() > 1 {
        return Err(err(1, "repeated field t"));
    }
    let ty = types.pop();

    if let Some(relation_type) = relation {
        if mentions.len() != 2 || attribute.is_some() {
            return Err(err(mentions[0].1, "relation needs exactly two concepts"));
        }
        let tail = mentions.pop().expect("two").0;
        let head = mentions.pop().expect("two").0;
        return Ok(AnnLine::Relation {
            head,
            relation_type,
            tail,
        });
    }
    if let Some((name, value, value_at, column)) = attribute {
        if mentions.len() != 1 {
            return Err(err(column, "attribute needs exactly one owner concept"));
        }
        return Ok(AnnLine::Attribute {
            owner: mentions.pop().expect("one").0,
            owner_type: ty,
            name,
            value,
            value_at,
        });
    }
    if mentions.len() >= 2 {
        return Ok(AnnLine::Chain {
            members: mentions.into_iter().map(|m| m.0).collect(),
            coref_type: ty,
        });
    }
    let entity_type = ty.ok_or_else(|| err(line.chars().count() + 1, "concept needs t=\"type\""))?;
    Ok(AnnLine::Concept {
        mention: mentions.pop().expect("one").0,
        entity_type,
        assertion,
        time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(text: &str, line: usize, start: usize, end: usize) -> MentionRef {
        MentionRef {
            text: text.into(),
            line,
            start,
            end,
        }
    }

    #[test]
    fn concept() {
        let a = parse_concept_line(r#"c="ascending aortic root replacement" 2:1 2:4||t="treatment""#)
            .unwrap();
        assert_eq!(
            a,
            AnnLine::Concept {
                mention: m("ascending aortic root replacement", 2, 1, 4),
                entity_type: "treatment".into(),
                assertion: None,
                time: None,
            }
        );
        let b = parse_concept_line(
            r#"c="cp" 4:0 4:0||t="problem"||a="absent"||time="2115-12-14""#,
        )
        .unwrap();
        assert!(matches!(b, AnnLine::Concept { assertion: Some(ref a), time: Some(_), .. } if a == "absent"));
    }

    #[test]
    fn attribute() {
        let a = parse_concept_line(r#"c="insulin" 5:7 5:7||t="medication"||a="dosage"="40mg""#)
            .unwrap();
        assert_eq!(
            a,
            AnnLine::Attribute {
                owner: m("insulin", 5, 7, 7),
                owner_type: Some("medication".into()),
                name: "dosage".into(),
                value: "40mg".into(),
                value_at: None,
            }
        );
        let b = parse_concept_line(r#"c="hba1c" 7:0 7:0||a="date"="12/14/2115" 7:1 7:1"#).unwrap();
        assert!(matches!(b, AnnLine::Attribute { value_at: Some(Position { line: 7, start: 1, end: 1 }), .. }));
    }

    #[test]
    fn relation_and_chain() {
        let r = parse_concept_line(r#"c="ffp" 9:8 9:8||r="treats"||c="anticoagulation" 9:3 9:3"#)
            .unwrap();
        assert_eq!(
            r,
            AnnLine::Relation {
                head: m("ffp", 9, 8, 8),
                relation_type: "treats".into(),
                tail: m("anticoagulation", 9, 3, 3),
            }
        );
        let c = parse_concept_line(r#"c="a b" 2:1 2:2||c="the procedure" 3:3 3:4||t="coref_treatment""#)
            .unwrap();
        assert!(matches!(c, AnnLine::Chain { ref members, .. } if members.len() == 2));
    }

    #[test]
    fn errors_have_columns() {
        let e = parse_concept_line(r#"c="ffp" 9:8 9:8||r="treats"||c="x" 9:z 9:3"#).unwrap_err();
        assert_eq!(e.column, 30);
        let e = parse_concept_line(r#"c="ffp" 9:8 9:8||q="what""#).unwrap_err();
        assert_eq!(e.column, 18);
        let e = parse_concept_line(r#"c="ffp" 9:8 9:8"#).unwrap_err();
        assert!(e.message.contains("t=\"type\""));
        let e = parse_concept_line(r#"c="ffp" 9:8 10:8||t="problem""#).unwrap_err();
        assert_eq!(e.message, "span crosses lines");
    }

    #[test]
    fn structured_records_round_trip() {
        let line = parse_concept_line(r#"c="insulin" 5:7 5:7||t="medication"||a="dosage"="40mg""#)
            .unwrap();
        let json = serde_json::to_string(&line).unwrap();
        assert!(json.starts_with(r#"{"kind":"attribute""#));
        assert_eq!(serde_json::from_str::<AnnLine>(&json).unwrap(), line);
    }
}
