use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("wrong_line_count({0})")]
    WrongLineCount(usize),
    #[error("line {line}: expected key {expected:?}, found {found:?}")]
    KeyMismatch { line: usize, expected: String, found: String },
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("empty value for key {0:?}")]
    EmptyValue(String),
}

fn is_fence(line: &str) -> bool {
    line.starts_with("```")
}

/// Drop list markers and emphasis a chat model may put before a key:
/// `- `, `* `, `1. `, `1) `, `**`.
fn strip_decoration(line: &str) -> &str {
    let mut s = line.trim();
    loop {
        let before = s;
        if let Some(r) = s.strip_prefix("- ").or_else(|| s.strip_prefix("* ")) {
            s = r.trim_start();
        }
        let digits = s.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 0 && digits < s.len() {
            let rest = &s[digits..];
            if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
                s = r.trim_start();
            }
        }
        if let Some(r) = s.strip_prefix("**") {
            s = r;
        }
        if s == before {
            return s;
        }
    }
}

/// Value after `key:` when `line` starts with that key (ASCII
/// case-insensitive, emphasis around the key tolerated).
fn keyed_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let s = strip_decoration(line);
    let head = s.get(..key.len())?;
    if !head.eq_ignore_ascii_case(key) {
        return None;
    }
    let rest = s[key.len()..].trim_start_matches('*');
    let rest = rest.strip_prefix(':')?;
    Some(rest.trim_start_matches('*').trim())
}

fn key_of<'k>(line: &str, keys: &'k [&str]) -> Option<&'k str> {
    keys.iter().copied().find(|k| keyed_value(line, k).is_some())
}

/// Extract a block of exactly `expected` lines from a chat response.
///
/// Blank lines and code fences are ignored. With `keys`, lines before the
/// first keyed line and after the last keyed line are wrapper prose; every
/// remaining line must carry its key in order and the values are returned.
/// Without keys, leading lines ending in `:` are wrapper prose and the
/// trimmed lines are returned.
pub fn parse_lines(response: &str, expected: usize, keys: Option<&[&str]>) -> Result<Vec<String>, ParseError> {
    let lines: Vec<&str> = response
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !is_fence(l))
        .collect();
    let Some(keys) = keys.filter(|k| !k.is_empty()) else {
        let start = lines.iter().take_while(|l| l.ends_with(':')).count();
        let block = &lines[start..];
        if block.len() != expected {
            return Err(ParseError::WrongLineCount(block.len()));
        }
        return Ok(block.iter().map(|l| l.to_string()).collect());
    };

    let first = lines.iter().position(|l| key_of(l, keys).is_some());
    let last = lines.iter().rposition(|l| key_of(l, keys).is_some());
    let block: &[&str] = match (first, last) {
        (Some(a), Some(b)) => &lines[a..=b],
        _ => &[],
    };
    if block.len() != expected {
        return Err(ParseError::WrongLineCount(block.len()));
    }
    let mut seen: Vec<&str> = Vec::new();
    let mut out = Vec::with_capacity(expected);
    for (i, line) in block.iter().enumerate() {
        let want = keys.get(i).copied().unwrap_or("");
        let value = match keyed_value(line, want) {
            Some(v) if !want.is_empty() => v,
            _ => {
                return Err(match key_of(line, keys) {
                    Some(k) if seen.contains(&k) => ParseError::DuplicateKey(k.to_string()),
                    Some(k) => ParseError::KeyMismatch { line: i + 1, expected: want.to_string(), found: k.to_string() },
                    None => ParseError::KeyMismatch { line: i + 1, expected: want.to_string(), found: line.to_string() },
                })
            }
        };
        if value.is_empty() {
            return Err(ParseError::EmptyValue(want.to_string()));
        }
        seen.push(want);
        out.push(value.to_string());
    }
    Ok(out)
}
