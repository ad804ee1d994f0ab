//! Test method header checks and repair.

use serde::{Deserialize, Serialize};

use crate::java::lexer::{code_tokens, Token, TokenKind};

/// A header element required of a JUnit test method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignatureElement {
    TestAnnotation,
    Public,
    Void,
    TestPrefix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureCheck {
    pub ok: bool,
    /// Elements absent or out of place, in canonical order.
    pub missing: Vec<SignatureElement>,
}

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "strictfp",
    "default",
];

/// Identifiers that may precede `(` without naming a method.
const NOT_A_NAME: &[&str] = &[
    "if", "for", "while", "switch", "catch", "synchronized", "return", "new", "throw", "else",
    "try", "do", "assert", "super", "this", "case",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum ItemKind {
    Annotation { is_test: bool },
    Modifier,
    Other,
}

#[derive(Debug, Clone)]
struct Item {
    kind: ItemKind,
    start: usize,
    end: usize,
}

/// The first method-like declaration in a snippet.
#[derive(Debug, Clone)]
pub(crate) struct Declaration {
    items: Vec<Item>,
    pub name: Token,
    /// Index of the `(` opening the parameter list within `code_tokens`.
    pub open_paren: usize,
}

impl Declaration {
    pub fn header_start(&self) -> usize {
        self.items.first().map_or(self.name.start, |i| i.start)
    }
}

/// Finds the first `name (` that is not a control keyword, together with the
/// annotations, modifiers and type tokens written since the previous `;`,
/// `{` or `}`.
pub(crate) fn find_declaration(src: &str, tokens: &[Token]) -> Option<Declaration> {
    let mut items: Vec<Item> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let t = tokens[i];
        let text = t.text(src);
        if t.kind == TokenKind::Punct && text == "@" {
            let start = t.start;
            let mut j = i + 1;
            let mut last = None;
            while j < tokens.len() && tokens[j].kind == TokenKind::Ident {
                last = Some(tokens[j].text(src));
                j += 1;
                if j < tokens.len() && tokens[j].is_punct(src, '.') {
                    j += 1;
                } else {
                    break;
                }
            }
            let mut end = tokens[j - 1].end;
            if j < tokens.len() && tokens[j].is_punct(src, '(') {
                let mut depth = 0usize;
                while j < tokens.len() {
                    if tokens[j].is_punct(src, '(') {
                        depth += 1;
                    } else if tokens[j].is_punct(src, ')') {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    j += 1;
                }
                if j == tokens.len() {
                    return None;
                }
                end = tokens[j].end;
                j += 1;
            }
            items.push(Item {
                kind: ItemKind::Annotation {
                    is_test: last == Some("Test"),
                },
                start,
                end,
            });
            i = j;
            continue;
        }
        if t.kind == TokenKind::Punct && matches!(text, ";" | "{" | "}") {
            items.clear();
            i += 1;
            continue;
        }
        if t.kind == TokenKind::Ident {
            let next_is_paren = tokens.get(i + 1).is_some_and(|n| n.is_punct(src, '('));
            if next_is_paren && !NOT_A_NAME.contains(&text) && is_header(src, &items) {
                return Some(Declaration {
                    items,
                    name: t,
                    open_paren: i + 1,
                });
            }
        }
        let kind = if t.kind == TokenKind::Ident && MODIFIERS.contains(&text) {
            ItemKind::Modifier
        } else {
            ItemKind::Other
        };
        items.push(Item {
            kind,
            start: t.start,
            end: t.end,
        });
        i += 1;
    }
    None
}

/// Whether `items` can precede a method name: annotations, modifiers and type
/// tokens only, ending in something a type can end with. Calls inside a body
/// (`f(`, `a.f(`, `x = f(`, `new F(`) fail this.
fn is_header(src: &str, items: &[Item]) -> bool {
    let Some(last) = items.last() else {
        return false;
    };
    let type_like = items.iter().all(|it| {
        let text = &src[it.start..it.end];
        match it.kind {
            ItemKind::Annotation { .. } | ItemKind::Modifier => true,
            ItemKind::Other => {
                matches!(text, "<" | ">" | "[" | "]" | "." | "," | "?" | "&")
                    || (text.starts_with(|c: char| c.is_alphabetic() || c == '_' || c == '$')
                        && !NOT_A_NAME.contains(&text))
            }
        }
    });
    let last_text = &src[last.start..last.end];
    type_like && (last.kind != ItemKind::Other || !matches!(last_text, "<" | "[" | "." | "," | "?" | "&"))
}

fn check_declaration(src: &str, decl: &Declaration) -> Vec<SignatureElement> {
    let items = &decl.items;
    let mut missing = Vec::new();
    let mut pos = 0;
    match items[pos..]
        .iter()
        .position(|it| it.kind == ItemKind::Annotation { is_test: true })
    {
        Some(p) => pos += p + 1,
        None => missing.push(SignatureElement::TestAnnotation),
    }
    match items[pos..]
        .iter()
        .position(|it| it.kind == ItemKind::Modifier && &src[it.start..it.end] == "public")
    {
        Some(p) => pos += p + 1,
        None => missing.push(SignatureElement::Public),
    }
    let others: Vec<usize> = (0..items.len())
        .filter(|&k| items[k].kind == ItemKind::Other)
        .collect();
    let void_ok = others.len() == 1
        && others[0] >= pos
        && &src[items[others[0]].start..items[others[0]].end] == "void";
    if !void_ok {
        missing.push(SignatureElement::Void);
    }
    if !decl.name.text(src).starts_with("test") {
        missing.push(SignatureElement::TestPrefix);
    }
    missing
}

/// Checks that `@Test`, `public`, `void` and a `test`-prefixed name appear in
/// that order ahead of the first parameter list.
pub fn verify_signature(test_source: &str) -> SignatureCheck {
    let tokens = code_tokens(test_source);
    let missing = match find_declaration(test_source, &tokens) {
        Some(decl) => check_declaration(test_source, &decl),
        None => {
            let has_test = find_test_annotation(test_source, &tokens);
            let mut m = Vec::new();
            if !has_test {
                m.push(SignatureElement::TestAnnotation);
            }
            m.extend([SignatureElement::Public, SignatureElement::Void, SignatureElement::TestPrefix]);
            m
        }
    };
    SignatureCheck {
        ok: missing.is_empty(),
        missing,
    }
}

fn find_test_annotation(src: &str, tokens: &[Token]) -> bool {
    tokens.windows(2).any(|w| w[0].is_punct(src, '@') && w[1].text(src) == "Test")
}

/// `getEscape` → `GetEscape`.
pub fn upper_camel(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub(crate) struct SignatureRepair {
    pub text: String,
    pub missing: Vec<SignatureElement>,
}

/// Rewrites the header of the first declaration so that it passes
/// [`verify_signature`]. Returns `None` when no declaration exists.
pub(crate) fn repair_header(src: &str, method_name: &str) -> Option<SignatureRepair> {
    let tokens = code_tokens(src);
    let decl = find_declaration(src, &tokens)?;
    let missing = check_declaration(src, &decl);
    if missing.is_empty() {
        return Some(SignatureRepair {
            text: src.to_string(),
            missing,
        });
    }
    let name = decl.name.text(src);
    let new_name = if name.starts_with("test") {
        name.to_string()
    } else {
        let base = if method_name.is_empty() { name } else { method_name };
        format!("test{}", upper_camel(base))
    };

    // Leading annotations stay verbatim; everything from the first
    // modifier/type token up to the name is rebuilt.
    let lead = decl
        .items
        .iter()
        .position(|it| !matches!(it.kind, ItemKind::Annotation { .. }))
        .unwrap_or(decl.items.len());
    let region_start = decl.items.get(lead).map_or(decl.name.start, |it| it.start);
    let mut parts: Vec<&str> = Vec::new();
    for it in &decl.items[lead..] {
        if matches!(it.kind, ItemKind::Annotation { .. }) {
            parts.push(&src[it.start..it.end]);
        }
    }
    parts.push("public");
    for it in &decl.items[lead..] {
        let text = &src[it.start..it.end];
        if it.kind == ItemKind::Modifier && !matches!(text, "public" | "protected" | "private") {
            parts.push(text);
        }
    }
    parts.push("void");
    parts.push(&new_name);

    let mut out = String::with_capacity(src.len() + 32);
    let header_start = decl.header_start();
    out.push_str(&src[..header_start]);
    let has_test = decl
        .items
        .iter()
        .any(|it| it.kind == ItemKind::Annotation { is_test: true });
    if !has_test {
        out.push_str("@Test ");
    }
    out.push_str(&src[header_start..region_start]);
    out.push_str(&parts.join(" "));
    out.push_str(&src[decl.name.end..]);
    Some(SignatureRepair { text: out, missing })
}
