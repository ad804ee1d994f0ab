//! Repairs generated test methods: fence stripping, header repair and
//! delimiter balancing, in that order.

mod balance;
mod signature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use balance::is_balanced;
pub use signature::{upper_camel, verify_signature, SignatureCheck, SignatureElement};

use crate::gateway::RawGeneration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repair {
    StrippedMarkdownFence,
    InsertedTestAnnotation,
    InsertedPublic,
    InsertedVoid,
    RenamedToTestPrefix,
    InsertedDeclarationBrace,
    /// A string, char or comment cut off at end of input was closed.
    ClosedTruncatedLiteral,
    AppendedClosers(usize),
    RemovedDanglingClosers(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedTest {
    pub original: String,
    pub repaired: String,
    pub repairs: Vec<Repair>,
    pub signature_ok_before: bool,
}

impl ProcessedTest {
    fn unchanged(text: &str, signature_ok: bool) -> Self {
        ProcessedTest {
            original: text.to_string(),
            repaired: text.to_string(),
            repairs: Vec::new(),
            signature_ok_before: signature_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PostprocessError {
    #[error("generation is empty")]
    Empty,
    #[error("no method declaration found")]
    Unrepairable,
}

/// Pulls the body of the first markdown code fence out of `text`. A fence
/// that never closes (cut-off output) runs to the end.
pub fn strip_fences(text: &str) -> Option<&str> {
    let mut offset = 0;
    let mut open_end = None;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        if !line.trim_start().starts_with("```") {
            continue;
        }
        match open_end {
            None => open_end = Some(offset),
            Some(body_start) => return Some(&text[body_start..start]),
        }
    }
    open_end.map(|s| &text[s..])
}

/// Inserts whatever of `@Test`, `public`, `void` and the `test` prefix is
/// missing from the first method header. The method is renamed to
/// `test` + `method_name` (or its current name when `method_name` is empty).
pub fn repair_signature(test_source: &str, method_name: &str) -> Result<ProcessedTest, PostprocessError> {
    let fixed = signature::repair_header(test_source, method_name)
        .ok_or(PostprocessError::Unrepairable)?;
    let repairs = fixed
        .missing
        .iter()
        .map(|m| match m {
            SignatureElement::TestAnnotation => Repair::InsertedTestAnnotation,
            SignatureElement::Public => Repair::InsertedPublic,
            SignatureElement::Void => Repair::InsertedVoid,
            SignatureElement::TestPrefix => Repair::RenamedToTestPrefix,
        })
        .collect::<Vec<_>>();
    Ok(ProcessedTest {
        original: test_source.to_string(),
        signature_ok_before: repairs.is_empty(),
        repaired: fixed.text,
        repairs,
    })
}

/// Removes dangling closers and closes open brackets at the end.
pub fn balance_delimiters(test_source: &str) -> ProcessedTest {
    let b = balance::balance(test_source);
    let mut repairs = Vec::new();
    if b.declaration_brace {
        repairs.push(Repair::InsertedDeclarationBrace);
    }
    if b.removed > 0 {
        repairs.push(Repair::RemovedDanglingClosers(b.removed));
    }
    if b.closed_token {
        repairs.push(Repair::ClosedTruncatedLiteral);
    }
    if b.appended > 0 {
        repairs.push(Repair::AppendedClosers(b.appended));
    }
    ProcessedTest {
        original: test_source.to_string(),
        signature_ok_before: verify_signature(test_source).ok,
        repaired: b.text,
        repairs,
    }
}

/// Full repair of one raw generation.
pub fn postprocess(raw: &RawGeneration, method_name: &str) -> Result<ProcessedTest, PostprocessError> {
    postprocess_text(&raw.text, method_name)
}

pub fn postprocess_text(text: &str, method_name: &str) -> Result<ProcessedTest, PostprocessError> {
    let mut repairs = Vec::new();
    let body = match strip_fences(text) {
        Some(inner) => {
            repairs.push(Repair::StrippedMarkdownFence);
            inner
        }
        None => text,
    };
    if body.trim().is_empty() {
        return Err(PostprocessError::Empty);
    }
    let signature_ok_before = verify_signature(body).ok;
    if signature_ok_before && is_balanced(body) && repairs.is_empty() {
        return Ok(ProcessedTest::unchanged(text, true));
    }
    // Dropping a dangling closer can merge stray tokens into the header, so
    // both passes repeat until neither changes anything.
    let mut current = body.to_string();
    for _ in 0..4 {
        let sig = repair_signature(&current, method_name)?;
        let bal = balance_delimiters(&sig.repaired);
        let settled = sig.repairs.is_empty() && bal.repairs.is_empty();
        repairs.extend(sig.repairs);
        repairs.extend(bal.repairs);
        current = bal.repaired;
        if settled {
            break;
        }
    }
    if !verify_signature(&current).ok || !is_balanced(&current) {
        return Err(PostprocessError::Unrepairable);
    }
    Ok(ProcessedTest {
        original: text.to_string(),
        repaired: current,
        repairs,
        signature_ok_before,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXEMPLAR_SYNTAX: &str = "@Test\npublic void testIsSurroundingSpacesIgnored()\n    CSVFormat format = CSVFormat.DEFAULT;\n    boolean spacesIgnored = format.isSurroundingSpacesIgnored();\n    assertTrue(\"Surrounding spaces should be ignored by default\", spacesIgnored);}";

    #[test]
    fn valid_test_needs_nothing() {
        let src = "@Test\npublic void testGetEscape() {\n    assertEquals('\\\\', CSVFormat.DEFAULT.getEscape());\n}\n";
        let p = postprocess_text(src, "getEscape").unwrap();
        assert_eq!(p.repaired, src);
        assert!(p.repairs.is_empty());
        assert!(p.signature_ok_before);
    }

    #[test]
    fn fences_go_first() {
        let raw = "Here you go:\n```java\n@Test\npublic void testA() {\n  f();\n}\n```\nThis checks f.";
        let p = postprocess_text(raw, "a").unwrap();
        assert_eq!(p.repaired, "@Test\npublic void testA() {\n  f();\n}\n");
        assert_eq!(p.repairs, vec![Repair::StrippedMarkdownFence]);
        assert_eq!(strip_fences("```\nx("), Some("x("));
        assert_eq!(strip_fences("plain"), None);
        assert_eq!(postprocess_text("```java\n```", "a"), Err(PostprocessError::Empty));
    }

    #[test]
    fn exemplar_missing_brace() {
        let p = postprocess_text(EXEMPLAR_SYNTAX, "isSurroundingSpacesIgnored").unwrap();
        assert_eq!(p.repairs, vec![Repair::InsertedDeclarationBrace]);
        assert!(p.repaired.starts_with("@Test\npublic void testIsSurroundingSpacesIgnored() {\n    CSVFormat"));
        assert!(is_balanced(&p.repaired));
    }

    #[test]
    fn keyword_insertion_scenario() {
        let p = repair_signature("void testFoo(){}", "foo").unwrap();
        assert_eq!(p.repaired, "@Test public void testFoo(){}");
        assert_eq!(p.repairs, vec![Repair::InsertedTestAnnotation, Repair::InsertedPublic]);
        let same = repair_signature("@Test public void testFoo(){}", "foo").unwrap();
        assert!(same.repairs.is_empty());
        assert_eq!(same.repaired, same.original);
        assert_eq!(repair_signature("@Test", "x"), Err(PostprocessError::Unrepairable));
    }

    #[test]
    fn truncated_generation_is_closed() {
        let raw = "@Test\npublic void testAdd() {\n    Calc c = new Calc();\n    assertEquals(3, c.add(1, ";
        let p = postprocess_text(raw, "add").unwrap();
        assert_eq!(p.repaired, format!("{raw}))}}"));
        assert_eq!(p.repairs, vec![Repair::AppendedClosers(3)]);
    }

    #[test]
    fn dropped_closer_before_the_header() {
        let p = postprocess_text(".}a A(", "someMethod").unwrap();
        assert_eq!(p.repaired, "@Test public void testSomeMethod() {}");
        assert!(verify_signature(&p.repaired).ok);
    }

    #[test]
    fn second_pass_is_a_no_op() {
        for raw in [EXEMPLAR_SYNTAX, "void check( {", "```java\nint getX() { return f(\"a", "@Test void x() { g(); } }"] {
            let once = postprocess_text(raw, "x").unwrap();
            let twice = postprocess_text(&once.repaired, "x").unwrap();
            assert!(twice.repairs.is_empty(), "{raw:?} -> {:?}", twice.repairs);
            assert_eq!(twice.repaired, once.repaired);
        }
    }
}
