//! Line-oriented reader for machine-description files.
//!
//! ```text
//! # comment
//! [section.subsection]
//! key = 1.5
//! name = "B200"
//! dims = 8192, 16384, 32768
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::List(_) => "list",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn path(&self) -> Vec<&str> {
        self.name.split('.').collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::default();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let content = strip_comment(line);
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(line_no, indent + 1, "unterminated section header"))?
                .trim();
            validate_section_name(name, line_no, indent + 2)?;
            if doc.sections.iter().any(|s| s.name == name) {
                return Err(Error::parse(
                    line_no,
                    indent + 1,
                    format!("duplicate section [{name}]"),
                ));
            }
            doc.sections.push(Section {
                name: name.to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }

        let eq = trimmed
            .find('=')
            .ok_or_else(|| Error::parse(line_no, indent + 1, "expected `key = value`"))?;
        let key = trimmed[..eq].trim();
        if key.is_empty() || !key.chars().all(is_key_char) {
            return Err(Error::parse(
                line_no,
                indent + 1,
                format!("invalid key `{key}`"),
            ));
        }
        let value_col = indent + eq + 2;
        let value = parse_value(&trimmed[eq + 1..], line_no, value_col)?;
        let section = doc.sections.last_mut().ok_or_else(|| {
            Error::parse(
                line_no,
                indent + 1,
                "entry appears before any section header",
            )
        })?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(Error::parse(
                line_no,
                indent + 1,
                format!("duplicate key `{key}` in [{}]", section.name),
            ));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value,
            line: line_no,
            column: indent + 1,
        });
    }
    Ok(doc)
}

fn is_key_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn validate_section_name(name: &str, line: usize, column: usize) -> Result<()> {
    if name.is_empty() {
        return Err(Error::parse(line, column, "empty section name"));
    }
    for part in name.split('.') {
        if part.is_empty() || !part.chars().all(is_key_char) {
            return Err(Error::parse(
                line,
                column,
                format!("invalid section name `{name}`"),
            ));
        }
    }
    Ok(())
}

/// Drops a trailing `#` comment, ignoring `#` inside quoted strings.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_value(raw: &str, line: usize, column: usize) -> Result<Value> {
    let items = split_list(raw, line, column)?;
    let mut values = Vec::with_capacity(items.len());
    for (offset, item) in items {
        values.push(parse_scalar(item, line, column + offset)?);
    }
    if values.len() == 1 {
        Ok(values.pop().unwrap())
    } else {
        Ok(Value::List(values))
    }
}

fn split_list(raw: &str, line: usize, column: usize) -> Result<Vec<(usize, &str)>> {
    let mut items = Vec::new();
    let mut start = 0;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in raw.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            ',' if !in_str => {
                items.push((start, &raw[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    if in_str {
        return Err(Error::parse(line, column, "unterminated string"));
    }
    items.push((start, &raw[start..]));
    for (offset, item) in &items {
        if item.trim().is_empty() {
            return Err(Error::parse(line, column + offset, "missing value"));
        }
    }
    Ok(items)
}

fn parse_scalar(item: &str, line: usize, column: usize) -> Result<Value> {
    let lead = item.len() - item.trim_start().len();
    let column = column + lead;
    let s = item.trim();
    if let Some(body) = s.strip_prefix('"') {
        let body = body
            .strip_suffix('"')
            .ok_or_else(|| Error::parse(line, column, "unterminated string"))?;
        let mut out = String::with_capacity(body.len());
        let mut chars = body.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    other => {
                        return Err(Error::parse(
                            line,
                            column,
                            format!("unsupported escape `\\{}`", other.unwrap_or(' ')),
                        ))
                    }
                },
                '"' => return Err(Error::parse(line, column, "stray quote in string")),
                c => out.push(c),
            }
        }
        return Ok(Value::Str(out));
    }
    let numeric = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        && s.chars().any(|c| c.is_ascii_digit());
    match s.parse::<f64>() {
        Ok(v) if numeric && v.is_finite() => Ok(Value::Num(v)),
        _ => Err(Error::parse(
            line,
            column,
            format!("expected a decimal number or quoted string, found `{s}`"),
        )),
    }
}
