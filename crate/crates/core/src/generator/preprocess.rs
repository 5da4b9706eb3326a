use crate::text::collapse_whitespace;

const LEADING: &[&str] = &["a", "an", "the", "his", "her", "patient's", "pt's"];
const TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', '-'];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("entity {0:?} is empty after preprocessing")]
pub struct EmptyEntity(pub String);

/// Cleans an annotated surface before it is placed into a template: collapses
/// whitespace, drops trailing punctuation and leading articles/possessives.
pub fn preprocess_entity(surface: &str) -> Result<String, EmptyEntity> {
    let mut s = collapse_whitespace(surface);
    loop {
        let before = s.len();
        s = s.trim_end_matches(|c: char| TRAILING.contains(&c) || c.is_whitespace()).to_string();
        if let Some((first, rest)) = s.split_once(' ') {
            if LEADING.iter().any(|w| first.eq_ignore_ascii_case(w)) {
                s = rest.trim_start().to_string();
            }
        } else if LEADING.iter().any(|w| s.eq_ignore_ascii_case(w)) {
            s.clear();
        }
        if s.len() == before {
            break;
        }
    }
    if s.is_empty() {
        Err(EmptyEntity(surface.to_string()))
    } else {
        Ok(s)
    }
}
