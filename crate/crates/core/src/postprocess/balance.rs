//! Literal- and comment-aware bracket balancing.

use crate::java::lexer::{bracket_pair, code_tokens, tokenize, Token, TokenKind};

use super::signature::find_declaration;

/// True when, for each of `()`, `[]` and `{}` taken separately, the running
/// count over code tokens never drops below zero and ends at zero.
pub fn is_balanced(src: &str) -> bool {
    let mut depth = [0i64; 3];
    for t in code_tokens(src) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        let c = t.text(src).chars().next().unwrap_or(' ');
        let Some((open, _)) = bracket_pair(c) else {
            continue;
        };
        let slot = match open {
            '(' => 0,
            '[' => 1,
            _ => 2,
        };
        depth[slot] += if c == open { 1 } else { -1 };
        if depth[slot] < 0 {
            return false;
        }
    }
    depth == [0; 3]
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct BalanceOutcome {
    pub text: String,
    pub declaration_brace: bool,
    pub closed_token: bool,
    pub removed: usize,
    pub appended: usize,
}

/// Where the first declaration's body should start, if its `{` is missing.
enum BodyStart {
    Present,
    /// Byte offset after which ` {` belongs.
    MissingAt(usize),
    /// The parameter list opened at this offset never closes.
    UnclosedParams(usize),
}

fn body_start(src: &str, tokens: &[Token]) -> Option<BodyStart> {
    let decl = find_declaration(src, tokens)?;
    let mut depth = 0usize;
    let mut i = decl.open_paren;
    while i < tokens.len() {
        if tokens[i].is_punct(src, '(') {
            depth += 1;
        } else if tokens[i].is_punct(src, ')') {
            depth -= 1;
            if depth == 0 {
                break;
            }
        }
        i += 1;
    }
    if i == tokens.len() {
        return Some(BodyStart::UnclosedParams(tokens[decl.open_paren].start));
    }
    let mut end = tokens[i].end;
    i += 1;
    if tokens.get(i).is_some_and(|t| t.text(src) == "throws") {
        i += 1;
        let mut want_name = true;
        while let Some(t) = tokens.get(i) {
            let fits = if want_name {
                t.kind == TokenKind::Ident
            } else {
                t.is_punct(src, '.') || t.is_punct(src, ',')
            };
            if !fits {
                break;
            }
            if want_name {
                end = t.end;
            }
            want_name = !want_name;
            i += 1;
        }
    }
    match tokens.get(i) {
        Some(t) if t.is_punct(src, '{') => Some(BodyStart::Present),
        _ => Some(BodyStart::MissingAt(end)),
    }
}

/// Closing text for a literal or comment cut off at end of input.
fn closer_for(src: &str, t: &Token) -> String {
    if t.kind == TokenKind::BlockComment {
        return "*/".into();
    }
    let body = t.text(src);
    let trailing = body.len() - body.trim_end_matches('\\').len();
    let mut s = String::new();
    if trailing % 2 == 1 {
        s.push('\\');
    }
    s.push_str(match t.kind {
        TokenKind::TextBlock => "\"\"\"",
        TokenKind::Char => "'",
        _ => "\"",
    });
    s
}

/// Drops closers that match no open bracket and appends the missing closers
/// in reverse nesting order. A declaration header lacking its `{` gets one
/// right after the parameter list (and `throws` clause). Balanced input is
/// returned untouched.
pub(crate) fn balance(src: &str) -> BalanceOutcome {
    let mut out = BalanceOutcome {
        text: src.to_string(),
        ..Default::default()
    };
    if is_balanced(src) {
        return out;
    }

    let mut text = src.to_string();
    // Offset of the unclosed parameter list, or `usize::MAX` when the body
    // brace goes after everything still open.
    let mut brace_at_end = None;
    match body_start(src, &code_tokens(src)) {
        Some(BodyStart::MissingAt(pos)) => {
            if pos == src.trim_end().len() {
                brace_at_end = Some(usize::MAX);
            } else {
                text.insert_str(pos, " {");
            }
            out.declaration_brace = true;
        }
        Some(BodyStart::UnclosedParams(paren)) => {
            brace_at_end = Some(paren);
            out.declaration_brace = true;
        }
        _ => {}
    }

    let tokens = tokenize(&text);
    let mut stack: Vec<char> = Vec::new();
    let mut drop: Vec<usize> = Vec::new();
    // Brackets opened before the declaration; they close after its body.
    let mut outer = None;
    for t in tokens.iter().filter(|t| t.kind == TokenKind::Punct) {
        if brace_at_end == Some(t.start) {
            outer = Some(stack.len());
        }
        let c = t.text(&text).chars().next().unwrap_or(' ');
        match bracket_pair(c) {
            Some((open, _)) if c == open => stack.push(open),
            Some((open, _)) => {
                if stack.last() == Some(&open) {
                    stack.pop();
                } else {
                    drop.push(t.start);
                }
            }
            None => {}
        }
    }
    // Cut from the back so earlier offsets stay valid.
    for &pos in drop.iter().rev() {
        text.remove(pos);
    }
    out.removed = drop.len();

    if !stack.is_empty() || brace_at_end.is_some() {
        if let Some(last) = tokenize(&text).last() {
            if !last.terminated && last.end == text.len() {
                let closer = closer_for(&text, last);
                text.push_str(&closer);
                out.closed_token = true;
            } else if last.kind == TokenKind::LineComment {
                text.push('\n');
            }
        }
        let closer = |open: &char| match open {
            '(' => ')',
            '[' => ']',
            _ => '}',
        };
        let split = if brace_at_end.is_some() {
            outer.unwrap_or(stack.len())
        } else {
            0
        };
        text.extend(stack[split..].iter().rev().map(closer));
        if brace_at_end.is_some() {
            text.push_str(" {}");
        }
        text.extend(stack[..split].iter().rev().map(closer));
        out.appended = stack.len() + usize::from(brace_at_end.is_some());
    }
    out.text = text;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicate_ignores_literals_and_comments() {
        assert!(is_balanced("f(\"(\", ')') // (\n/* { */"));
        assert!(!is_balanced(")("));
        assert!(!is_balanced("{"));
        assert!(is_balanced("([)]"));
    }

    #[test]
    fn balanced_input_is_untouched() {
        let src = "@Test public void testA() { f(a[0]); }";
        assert_eq!(balance(src).text, src);
    }

    #[test]
    fn appends_in_reverse_nesting_order() {
        let b = balance("foo(bar(");
        assert_eq!(b.text, "foo(bar())");
        assert_eq!(b.appended, 2);
        assert_eq!(balance("{ a[f(").text, "{ a[f()]}");
    }

    #[test]
    fn removes_dangling_closers() {
        let b = balance("f(x))]");
        assert_eq!(b.text, "f(x)");
        assert_eq!(b.removed, 2);
        assert_eq!(balance("{ foo( }").text, "{ foo( )}");
    }

    #[test]
    fn missing_body_brace_after_header() {
        let src = "@Test\npublic void testX()\n    int a = 1;\n    f(a);}";
        let b = balance(src);
        assert!(b.declaration_brace);
        assert_eq!(b.text, "@Test\npublic void testX() {\n    int a = 1;\n    f(a);}");
        assert_eq!((b.removed, b.appended), (0, 0));

        let b = balance("@Test public void testX() throws IOException, a.B\n  f();}");
        assert_eq!(b.text, "@Test public void testX() throws IOException, a.B {\n  f();}");
    }

    #[test]
    fn body_brace_goes_inside_a_class_wrapper() {
        assert_eq!(
            balance("class T {\n  @Test public void testX()").text,
            "class T {\n  @Test public void testX() {}}"
        );
        assert_eq!(
            balance("class T {\n  @Test public void testX(int[] a, List<X").text,
            "class T {\n  @Test public void testX(int[] a, List<X) {}}"
        );
    }

    #[test]
    fn header_cut_inside_parameters() {
        let b = balance("@Test public void testX(int a");
        assert_eq!(b.text, "@Test public void testX(int a) {}");
        assert!(b.declaration_brace);
    }

    #[test]
    fn closes_a_cut_string_before_appending() {
        let b = balance("@Test public void testX() { f(\"ab");
        assert_eq!(b.text, "@Test public void testX() { f(\"ab\")}");
        assert!(b.closed_token);
        assert!(is_balanced(&b.text));
        let b = balance("{ f(\"a\\");
        assert_eq!(b.text, "{ f(\"a\\\\\")}");
        let b = balance("{ f(); /* note");
        assert_eq!(b.text, "{ f(); /* note*/}");
        let b = balance("{ f(); // note");
        assert_eq!(b.text, "{ f(); // note\n}");
    }
}
