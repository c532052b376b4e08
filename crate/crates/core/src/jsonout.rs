//! Extraction of JSON payloads from judge output.
//!
//! Judges wrap JSON in Markdown fences, add prose around it, and copy the
//! trailing commas found in the prompt examples. The helpers here strip those
//! artefacts; the key names checked by callers remain strict.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JsonOutError {
    #[error("no JSON {0} found in judge output")]
    NotFound(&'static str),
    #[error("invalid JSON in judge output: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Object,
    Array,
}

impl Shape {
    fn open(self) -> char {
        match self {
            Shape::Object => '{',
            Shape::Array => '[',
        }
    }

    fn name(self) -> &'static str {
        match self {
            Shape::Object => "object",
            Shape::Array => "array",
        }
    }

    fn matches(self, v: &Value) -> bool {
        match self {
            Shape::Object => v.is_object(),
            Shape::Array => v.is_array(),
        }
    }
}

/// Finds the JSON object or array in `raw`.
pub fn extract(raw: &str, shape: Shape) -> Result<Value, JsonOutError> {
    let body = strip_fences(raw.trim());
    if let Some(v) = parse_lenient(body) {
        if shape.matches(&v) {
            return Ok(v);
        }
    }
    let mut last_err = None;
    let mut from = 0;
    while let Some(candidate) = first_balanced(&body[from..], shape.open()) {
        let (start, end) = (from + candidate.0, from + candidate.1);
        let text = &body[start..end];
        match serde_json::from_str::<Value>(&strip_trailing_commas(text)) {
            Ok(v) if shape.matches(&v) => return Ok(v),
            Ok(_) => {}
            Err(e) => last_err = Some(e.to_string()),
        }
        from = start + shape.open().len_utf8();
    }
    Err(match last_err {
        Some(e) => JsonOutError::Invalid(e),
        None => JsonOutError::NotFound(shape.name()),
    })
}

fn parse_lenient(s: &str) -> Option<Value> {
    serde_json::from_str(s).ok().or_else(|| serde_json::from_str(&strip_trailing_commas(s)).ok())
}

fn strip_fences(s: &str) -> &str {
    let Some(rest) = s.strip_prefix("```") else {
        return s;
    };
    let rest = match rest.find('\n') {
        Some(nl) => &rest[nl + 1..],
        None => rest,
    };
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Removes commas that directly precede a closing bracket, outside strings.
pub fn strip_trailing_commas(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut in_str = false;
    let mut esc = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            out.push(c);
            if esc {
                esc = false;
            } else if c == '\\' {
                esc = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        if c == '"' {
            in_str = true;
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Byte range of the first balanced `{…}` or `[…]` block opening with `open`.
fn first_balanced(s: &str, open: char) -> Option<(usize, usize)> {
    let start = s.find(open)?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut esc = false;
    for (i, c) in s[start..].char_indices() {
        if in_str {
            if esc {
                esc = false;
            } else if c == '\\' {
                esc = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' | '[' => depth += 1,
            '}' | ']' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some((start, start + i + c.len_utf8()));
                }
            }
            _ => {}
        }
    }
    None
}

/// Reads a number that a judge may have emitted as a JSON number or a
/// numeric string.
pub fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok().filter(|x| x.is_finite()),
        _ => None,
    }
}
