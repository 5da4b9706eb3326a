use chrono::NaiveDate;
use regex::Regex;
use std::sync::OnceLock;

/// How two-digit years are expanded: `year = century + yy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DateConfig {
    pub two_digit_century: i32,
}

impl Default for DateConfig {
    fn default() -> Self {
        Self {
            two_digit_century: 1900,
        }
    }
}

fn date_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b(?:(\d{4})-(\d{1,2})-(\d{1,2})|(\d{1,2})/(\d{1,2})/(\d{4}|\d{2}))\b")
            .expect("valid date regex")
    })
}

fn from_captures(c: &regex::Captures<'_>, cfg: DateConfig) -> Option<NaiveDate> {
    let num = |i: usize| c.get(i).and_then(|m| m.as_str().parse::<i32>().ok());
    if let Some(y) = num(1) {
        return NaiveDate::from_ymd_opt(y, num(2)? as u32, num(3)? as u32);
    }
    let y = c.get(6)?.as_str();
    let mut year: i32 = y.parse().ok()?;
    if y.len() == 2 {
        year += cfg.two_digit_century;
    }
    NaiveDate::from_ymd_opt(year, num(4)? as u32, num(5)? as u32)
}

/// Parses `MM/DD/YY`, `MM/DD/YYYY` or `YYYY-MM-DD` (surrounding whitespace
/// ignored).
pub fn parse_date(s: &str, cfg: DateConfig) -> Option<NaiveDate> {
    let s = s.trim();
    let c = date_re().captures(s)?;
    let m = c.get(0)?;
    if m.start() != 0 || m.end() != s.len() {
        return None;
    }
    from_captures(&c, cfg)
}

/// First valid date appearing anywhere in `text`, with its byte range.
pub fn find_date(text: &str, cfg: DateConfig) -> Option<(NaiveDate, std::ops::Range<usize>)> {
    date_re()
        .captures_iter(text)
        .find_map(|c| from_captures(&c, cfg).map(|d| (d, c.get(0).expect("group 0").range())))
}
