//! Shared tokenizer used for templates, questions, evidence lines and metrics.
//!
//! Tokens are split on whitespace and punctuation. A few connector characters
//! (`.`, `,`, `/`, `-`, `'`, `:`) stay inside a token when they sit between two
//! alphanumeric characters, so `12/14/2115`, `11.80`, `patient's` and `x-ray`
//! are single tokens while `192,` splits into `192` and `,`. A placeholder such
//! as `|medication|` is always one token.

use std::ops::Range;

/// A token borrowed from its source string together with its byte range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

impl Token<'_> {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn is_placeholder(&self) -> bool {
        placeholder_type(self.text).is_some()
    }
}

const CONNECTORS: &[char] = &['.', ',', '/', '-', '\'', ':'];

/// Returns the entity type if `s` is exactly a `|type|` placeholder.
pub fn placeholder_type(s: &str) -> Option<&str> {
    let inner = s.strip_prefix('|')?.strip_suffix('|')?;
    let mut chars = inner.chars();
    let first = chars.next()?;
    if !(first.is_ascii_alphabetic() || first == '_') {
        return None;
    }
    if chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Some(inner)
    } else {
        None
    }
}

/// Length in bytes of a placeholder starting at the beginning of `s`, if any.
fn placeholder_len(s: &str) -> Option<usize> {
    let rest = s.strip_prefix('|')?;
    let close = rest.find('|')?;
    let candidate = &s[..close + 2];
    placeholder_type(candidate).map(|_| candidate.len())
}

pub fn tokenize<'a>(s: &'a str) -> Vec<Token<'a>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut i = 0;
    let mut word_start: Option<usize> = None;

    let flush = |out: &mut Vec<Token<'a>>, start: &mut Option<usize>, end: usize| {
        if let Some(st) = start.take() {
            out.push(Token {
                text: &s[st..end],
                start: st,
                end,
            });
        }
    };

    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            flush(&mut out, &mut word_start, pos);
            i += 1;
            continue;
        }
        if c == '|' {
            if let Some(len) = placeholder_len(&s[pos..]) {
                flush(&mut out, &mut word_start, pos);
                out.push(Token {
                    text: &s[pos..pos + len],
                    start: pos,
                    end: pos + len,
                });
                let end = pos + len;
                while i < chars.len() && chars[i].0 < end {
                    i += 1;
                }
                continue;
            }
        }
        if c.is_alphanumeric() {
            if word_start.is_none() {
                word_start = Some(pos);
            }
            i += 1;
            continue;
        }
        if CONNECTORS.contains(&c) && word_start.is_some() {
            let next_alnum = chars.get(i + 1).is_some_and(|&(_, n)| n.is_alphanumeric());
            if next_alnum {
                i += 1;
                continue;
            }
        }
        flush(&mut out, &mut word_start, pos);
        let end = pos + c.len_utf8();
        out.push(Token {
            text: &s[pos..end],
            start: pos,
            end,
        });
        i += 1;
    }
    flush(&mut out, &mut word_start, s.len());
    out
}

/// Token strings only.
pub fn words(s: &str) -> Vec<&str> {
    tokenize(s).into_iter().map(|t| t.text).collect()
}

/// Lowercased token strings.
pub fn lower_words(s: &str) -> Vec<String> {
    tokenize(s).into_iter().map(|t| t.text.to_lowercase()).collect()
}

/// Canonical form used for template comparison: lowercased tokens joined by a
/// single space.
pub fn canonical(s: &str) -> String {
    lower_words(s).join(" ")
}

/// Collapses runs of whitespace to a single space and trims the ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace-delimited tokens of an annotated line, as used by the
/// `line:token` addressing of concept annotations.
pub fn line_tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out
}

/// Number of characters (Unicode scalar values) in `s[..byte]`.
pub fn char_offset(s: &str, byte: usize) -> usize {
    s[..byte].chars().count()
}
