//! Basic and Improved prompt rendering.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed instruction of the Basic prompt.
pub const BASIC_INSTRUCTION: &str = "Write a junit test case";

const INTRO_LINES: [&str; 3] = [
    "// Write a JUnit test case for the method described below.",
    "// Use proper and relevant assertion statements that check the described behavior.",
    "// Avoid repeating the same assertion or statement.",
];

const SKELETON: &str = "@Test\npublic void test<MethodName>() {\n    // arrange the inputs\n    // act on the method under test\n    // assertEquals(expected, actual);\n    // assertTrue(condition);\n    // assertNotNull(object);\n}";

const CLASS_PREFIX: &str = "// Class: ";
const METHOD_PREFIX: &str = "// Method: ";
const EXAMPLE_HEADER: &str = "// Example:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Basic,
    Improved,
}

/// A (description, testcase) pair shown to the model before the task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub description: String,
    pub testcase: String,
}

impl Default for Demonstration {
    fn default() -> Self {
        Demonstration {
            description: "Returns the sum of the two given integers.".to_string(),
            testcase: "@Test\npublic void testAdd() {\n    Calculator calculator = new Calculator();\n    assertEquals(5, calculator.add(2, 3));\n    assertEquals(-1, calculator.add(2, -3));\n}".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub rendered: String,
    pub description: String,
    pub focal_class_name: Option<String>,
    pub focal_method_name: Option<String>,
    pub demonstration: Option<Demonstration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("description is empty")]
    EmptyDescription,
    #[error("missing or malformed {0} for the improved prompt")]
    MissingContext(&'static str),
    #[error("the demonstration describes the target method itself")]
    RejectedDemonstration,
}

/// Escapes text placed inside a `/** ... **/` block so the block stays one
/// comment: a `/` or `\` that follows a `*` gets a backslash. The opening
/// `/**` counts as a preceding `*`.
pub fn escape_comment_body(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev = '*';
    for c in text.chars() {
        if prev == '*' && (c == '/' || c == '\\') {
            out.push('\\');
        }
        out.push(c);
        prev = c;
    }
    out
}

/// Inverse of [`escape_comment_body`].
pub fn unescape_comment_body(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev = '*';
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if prev == '*' && c == '\\' {
            if let Some(&next) = chars.peek() {
                if next == '/' || next == '\\' {
                    chars.next();
                    out.push(next);
                    prev = next;
                    continue;
                }
            }
        }
        out.push(c);
        prev = c;
    }
    out
}

fn description_block(description: &str) -> String {
    format!("/**{}**/", escape_comment_body(description))
}

/// `/* Write a junit test case /**<description>**/`
pub fn render_basic_prompt(description: &str) -> Result<PromptBundle, PromptError> {
    if description.is_empty() {
        return Err(PromptError::EmptyDescription);
    }
    Ok(PromptBundle {
        kind: PromptKind::Basic,
        rendered: format!("/* {BASIC_INSTRUCTION} {}", description_block(description)),
        description: description.to_string(),
        focal_class_name: None,
        focal_method_name: None,
        demonstration: None,
    })
}

fn check_name(value: &str, what: &'static str) -> Result<(), PromptError> {
    if value.trim().is_empty() || value.contains(['\n', '\r']) {
        Err(PromptError::MissingContext(what))
    } else {
        Ok(())
    }
}

/// One-shot prompt: demonstration, instruction, test template, class and
/// method names, then the description.
pub fn render_improved_prompt(
    description: &str,
    class_name: &str,
    method_name: &str,
    demonstration: &Demonstration,
) -> Result<PromptBundle, PromptError> {
    if description.is_empty() {
        return Err(PromptError::EmptyDescription);
    }
    check_name(class_name, "class name")?;
    check_name(method_name, "method name")?;
    if demonstration.description == description {
        return Err(PromptError::RejectedDemonstration);
    }

    let mut lines: Vec<String> = Vec::new();
    lines.push(EXAMPLE_HEADER.to_string());
    lines.push(description_block(&demonstration.description));
    lines.push(demonstration.testcase.clone());
    lines.push(String::new());
    lines.extend(INTRO_LINES.iter().map(|s| s.to_string()));
    lines.push(SKELETON.to_string());
    lines.push(format!("{CLASS_PREFIX}{class_name}"));
    lines.push(format!("{METHOD_PREFIX}{method_name}"));
    lines.push(description_block(description));

    Ok(PromptBundle {
        kind: PromptKind::Improved,
        rendered: lines.join("\n"),
        description: description.to_string(),
        focal_class_name: Some(class_name.to_string()),
        focal_method_name: Some(method_name.to_string()),
        demonstration: Some(demonstration.clone()),
    })
}

/// Context recovered from a rendered Improved prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImprovedContext {
    pub class_name: String,
    pub method_name: String,
    pub description: String,
}

/// Reads class, method and description back out of a rendered Improved
/// prompt. The context block follows the first test template, so a
/// demonstration must not itself contain the template.
pub fn parse_improved_prompt(rendered: &str) -> Option<ImprovedContext> {
    let marker = format!("\n{SKELETON}\n{CLASS_PREFIX}");
    let at = rendered.find(&marker)?;
    let tail = &rendered[at + 1 + SKELETON.len() + 1..];
    let (class_line, rest) = tail.split_once('\n')?;
    let (method_line, block) = rest.split_once('\n')?;
    let body = block.strip_prefix("/**")?.strip_suffix("**/")?;
    Some(ImprovedContext {
        class_name: class_line.strip_prefix(CLASS_PREFIX)?.to_string(),
        method_name: method_line.strip_prefix(METHOD_PREFIX)?.to_string(),
        description: unescape_comment_body(body),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::lexer::{tokenize, TokenKind};

    #[test]
    fn basic_prompt_shape() {
        let p = render_basic_prompt("Returns the escape character.").unwrap();
        assert_eq!(
            p.rendered,
            "/* Write a junit test case /**Returns the escape character.**/"
        );
        assert_eq!(p.kind, PromptKind::Basic);
    }

    #[test]
    fn basic_prompt_rejects_empty() {
        assert_eq!(render_basic_prompt(""), Err(PromptError::EmptyDescription));
    }

    fn is_single_comment(text: &str) -> bool {
        let toks = tokenize(text);
        toks.len() == 1 && toks[0].kind == TokenKind::BlockComment && toks[0].terminated
    }

    #[test]
    fn embedded_terminator_is_escaped() {
        let desc = "Strips */ and /* markers, even */*/ twice";
        let p = render_basic_prompt(desc).unwrap();
        assert!(p.rendered.contains(r"*\/ and"));
        assert!(is_single_comment(&p.rendered));
        for hostile in ["/leading slash", "ends with star*", "*/", "a*\\/b", "**/**"] {
            let p = render_basic_prompt(hostile).unwrap();
            assert!(is_single_comment(&p.rendered), "{hostile}: {}", p.rendered);
        }
    }

    #[test]
    fn improved_prompt_orders_components() {
        let demo = Demonstration::default();
        let p = render_improved_prompt("Returns the escape character.", "CSVFormat", "getEscape", &demo).unwrap();
        let r = &p.rendered;
        let pos = |needle: &str| r.find(needle).unwrap_or_else(|| panic!("missing {needle}"));
        assert!(pos(&demo.testcase) < pos("proper and relevant assertion"));
        assert!(pos("proper and relevant assertion") < pos("@Test\npublic void test<MethodName>"));
        assert!(pos("assertNotNull(object)") < pos("// Class: CSVFormat"));
        assert!(pos("// Class: CSVFormat") < pos("// Method: getEscape"));
        assert!(r.ends_with("/**Returns the escape character.**/"));
        let context = &r[pos("// Class:")..];
        assert_eq!(context.matches("CSVFormat").count(), 1);
        assert_eq!(context.matches("getEscape").count(), 1);
        assert_eq!(r.matches("@Test").count(), 2);
    }

    #[test]
    fn improved_prompt_guards() {
        let demo = Demonstration::default();
        assert_eq!(
            render_improved_prompt("d", "", "m", &demo),
            Err(PromptError::MissingContext("class name"))
        );
        assert_eq!(
            render_improved_prompt("d", "C", " ", &demo),
            Err(PromptError::MissingContext("method name"))
        );
        assert_eq!(
            render_improved_prompt(&demo.description, "C", "m", &demo),
            Err(PromptError::RejectedDemonstration)
        );
        // length policy lives upstream
        assert!(render_improved_prompt("x", "C", "m", &demo).is_ok());
    }

    #[test]
    fn improved_prompt_round_trips() {
        let demo = Demonstration::default();
        let p = render_improved_prompt("Line one\n// Class: Fake\n*/ end", "C", "m", &demo).unwrap();
        let ctx = parse_improved_prompt(&p.rendered).unwrap();
        assert_eq!(ctx.class_name, "C");
        assert_eq!(ctx.method_name, "m");
        assert_eq!(ctx.description, "Line one\n// Class: Fake\n*/ end");
    }
}
