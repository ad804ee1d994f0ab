//! Method descriptions from Javadoc and inline comments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::index::MethodInfo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DescriptionKind {
    JavadocOnly,
    InlineOnly,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptionError {
    #[error("method has no usable comment")]
    NoDescription,
}

/// Accepted description lengths in characters, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBounds {
    pub min: usize,
    pub max: usize,
}

impl Default for LengthBounds {
    fn default() -> Self {
        LengthBounds { min: 16, max: 1672 }
    }
}

impl LengthBounds {
    pub fn accepts(&self, text: &str) -> bool {
        let n = text.chars().count();
        n >= self.min && n <= self.max
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `{@code x}` → `x`, `{@link A#b label}` → `A#b label`.
fn unwrap_inline_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find("{@") {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 2..];
        match after.find('}') {
            Some(close) => {
                let inner = &after[..close];
                let body = inner
                    .split_once(char::is_whitespace)
                    .map_or("", |(_, b)| b.trim());
                out.push_str(body);
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[pos..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Strips block comment delimiters and the leading `*` of each line.
fn block_comment_lines(comment: &str) -> Vec<&str> {
    let body = comment
        .strip_prefix("/**")
        .or_else(|| comment.strip_prefix("/*"))
        .unwrap_or(comment);
    let body = body.strip_suffix("*/").unwrap_or(body);
    body.lines()
        .map(|line| line.trim_start().trim_start_matches('*').trim())
        .collect()
}

/// Normalized Javadoc text: markers gone, block tag names dropped with their
/// prose kept, whitespace collapsed.
pub fn normalize_javadoc(comment: &str) -> String {
    let lines: Vec<String> = block_comment_lines(comment)
        .into_iter()
        .map(|line| {
            if let Some(tagged) = line.strip_prefix('@') {
                tagged
                    .split_once(char::is_whitespace)
                    .map_or(String::new(), |(_, prose)| prose.to_string())
            } else {
                line.to_string()
            }
        })
        .collect();
    collapse_whitespace(&unwrap_inline_tags(&lines.join(" ")))
}

/// Normalized text of a `//` or `/* */` comment inside a method body.
pub fn normalize_inline(comment: &str) -> String {
    if let Some(line) = comment.strip_prefix("//") {
        collapse_whitespace(line.trim_start_matches('/'))
    } else {
        collapse_whitespace(&block_comment_lines(comment).join(" "))
    }
}

/// Aggregates a method's Javadoc and inline comments into one description.
pub fn extract_description(
    method: &MethodInfo,
    source: &str,
) -> Result<(String, DescriptionKind), DescriptionError> {
    let javadoc = method
        .doc_comment
        .map(|span| normalize_javadoc(span.text(source)))
        .filter(|t| !t.is_empty());
    let inline: Vec<String> = method
        .inline_comments
        .iter()
        .map(|span| normalize_inline(span.text(source)))
        .filter(|t| !t.is_empty())
        .collect();

    let kind = match (javadoc.is_some(), !inline.is_empty()) {
        (true, true) => DescriptionKind::Combined,
        (true, false) => DescriptionKind::JavadocOnly,
        (false, true) => DescriptionKind::InlineOnly,
        (false, false) => return Err(DescriptionError::NoDescription),
    };
    let mut parts = Vec::with_capacity(inline.len() + 1);
    parts.extend(javadoc);
    parts.extend(inline);
    Ok((parts.join(" "), kind))
}
