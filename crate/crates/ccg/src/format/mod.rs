//! Line-oriented text formats for graphs, diagrams and traces.

pub mod graph;
pub mod trace;
pub mod zdd;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid content: {0}")]
    Invalid(String),
}

impl FormatError {
    pub(crate) fn at(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse { line, message: message.into() }
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    line: usize,
    fields: &[&str],
    index: usize,
    what: &str,
) -> Result<T, FormatError> {
    let raw = fields.get(index).ok_or_else(|| FormatError::at(line, format!("missing {what}")))?;
    raw.parse().map_err(|_| FormatError::at(line, format!("invalid {what} `{raw}`")))
}
