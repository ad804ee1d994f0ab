use tree_sitter::{Node, Parser};

use super::{Mutant, MutationError, Operator};

const ARITH: [&str; 5] = ["+", "-", "*", "/", "%"];
const BITWISE: [&str; 3] = ["&", "|", "^"];
const CONDITIONAL: [&str; 2] = ["&&", "||"];
const SHIFT: [&str; 3] = ["<<", ">>", ">>>"];
const RELATIONAL: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

const DELETABLE: [&str; 13] = [
    "expression_statement",
    "return_statement",
    "if_statement",
    "while_statement",
    "for_statement",
    "enhanced_for_statement",
    "do_statement",
    "throw_statement",
    "break_statement",
    "continue_statement",
    "try_statement",
    "try_with_resources_statement",
    "assert_statement",
];

struct Site {
    operator: Operator,
    start: usize,
    end: usize,
    replacement: String,
}

fn binary_family(op: &str) -> Option<(Operator, &'static [&'static str])> {
    let fam: (Operator, &'static [&'static str]) = if ARITH.contains(&op) {
        (Operator::AOR, &ARITH)
    } else if BITWISE.contains(&op) {
        (Operator::LOR, &BITWISE)
    } else if CONDITIONAL.contains(&op) {
        (Operator::COR, &CONDITIONAL)
    } else if SHIFT.contains(&op) {
        (Operator::SOR, &SHIFT)
    } else if RELATIONAL.contains(&op) {
        (Operator::ROR, &RELATIONAL)
    } else {
        return None;
    };
    Some(fam)
}

fn is_number_literal(kind: &str) -> bool {
    matches!(
        kind,
        "decimal_integer_literal"
            | "hex_integer_literal"
            | "octal_integer_literal"
            | "binary_integer_literal"
            | "decimal_floating_point_literal"
            | "hex_floating_point_literal"
    )
}

/// Numeric value of an unsigned literal, when it is one of the LVR targets.
fn literal_value(kind: &str, text: &str) -> Option<f64> {
    let t: String = text.chars().filter(|c| *c != '_').collect();
    match kind {
        "decimal_floating_point_literal" => t.trim_end_matches(['f', 'F', 'd', 'D']).parse().ok(),
        "hex_floating_point_literal" => None,
        _ => {
            let t = t.trim_end_matches(['l', 'L']);
            let (digits, radix) = if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
                (h, 16)
            } else if let Some(b) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
                (b, 2)
            } else if t.len() > 1 && t.starts_with('0') {
                (&t[1..], 8)
            } else {
                (t, 10)
            };
            u64::from_str_radix(digits, radix).ok().map(|v| v as f64)
        }
    }
}

fn number_replacements(kind: &str, text: &str, preceding: Option<u8>) -> Vec<String> {
    let float = matches!(kind, "decimal_floating_point_literal" | "hex_floating_point_literal");
    let suffix = match text.chars().last() {
        Some(c @ ('l' | 'L')) if !float => c.to_string(),
        Some(c @ ('f' | 'F' | 'd' | 'D')) if float => c.to_string(),
        _ => String::new(),
    };
    let own = literal_value(kind, text);
    let wrap = matches!(preceding, Some(b'-' | b'+'));
    [0.0f64, 1.0, -1.0]
        .into_iter()
        .filter(|v| own != Some(*v))
        .map(|v| {
            let body = match (float, v < 0.0) {
                (true, _) => format!("{v:.1}{suffix}"),
                (false, _) => format!("{}{suffix}", v as i64),
            };
            if v < 0.0 && wrap {
                format!("({body})")
            } else {
                body
            }
        })
        .collect()
}

struct Walker<'s> {
    src: &'s str,
    ops: &'s [Operator],
    sites: Vec<Site>,
}

impl<'s> Walker<'s> {
    fn wants(&self, op: Operator) -> bool {
        self.ops.contains(&op)
    }

    fn text(&self, n: Node) -> &'s str {
        &self.src[n.byte_range()]
    }

    fn push(&mut self, operator: Operator, n: Node, replacement: String) {
        self.sites.push(Site {
            operator,
            start: n.start_byte(),
            end: n.end_byte(),
            replacement,
        });
    }

    fn walk(&mut self, n: Node, in_body: bool) {
        if in_body {
            self.visit(n);
        }
        let mut cursor = n.walk();
        let children: Vec<Node> = n.children(&mut cursor).collect();
        for c in children {
            let body = in_body
                || (matches!(n.kind(), "method_declaration" | "constructor_declaration")
                    && n.child_by_field_name("body").is_some_and(|b| b.id() == c.id()));
            self.walk(c, body);
        }
    }

    fn visit(&mut self, n: Node) {
        match n.kind() {
            "binary_expression" => {
                let Some(op) = n.child_by_field_name("operator") else { return };
                let tok = self.text(op);
                if let Some((operator, family)) = binary_family(tok) {
                    if self.wants(operator) {
                        for r in family.iter().filter(|r| **r != tok) {
                            self.push(operator, op, r.to_string());
                        }
                    }
                }
            }
            "unary_expression" if self.wants(Operator::ORU) => {
                let (Some(op), Some(operand)) = (n.child_by_field_name("operator"), n.child_by_field_name("operand")) else {
                    return;
                };
                let tok = self.text(op);
                let negated_literal = tok == "-" && is_number_literal(operand.kind());
                if matches!(tok, "-" | "!" | "~") && !negated_literal {
                    self.push(Operator::ORU, op, String::new());
                }
            }
            k if is_number_literal(k) && self.wants(Operator::LVR) => {
                let preceding = n.start_byte().checked_sub(1).map(|i| self.src.as_bytes()[i]);
                for r in number_replacements(k, self.text(n), preceding) {
                    self.push(Operator::LVR, n, r);
                }
            }
            "true" | "false" if self.wants(Operator::LVR) => {
                let flipped = if n.kind() == "true" { "false" } else { "true" };
                self.push(Operator::LVR, n, flipped.to_string());
            }
            "string_literal" if self.wants(Operator::LVR) => {
                let t = self.text(n);
                if !t.starts_with("\"\"\"") && t != "\"\"" {
                    self.push(Operator::LVR, n, "\"\"".to_string());
                }
            }
            k if DELETABLE.contains(&k) && self.wants(Operator::STD)
                && self.deletable(n) => {
                    self.push(Operator::STD, n, String::new());
                }
            _ => {}
        }
    }

    fn deletable(&self, n: Node) -> bool {
        let Some(parent) = n.parent() else { return false };
        if !matches!(parent.kind(), "block" | "constructor_body") {
            return false;
        }
        if n.kind() == "return_statement" {
            let statements = {
                let mut c = parent.walk();
                parent.named_children(&mut c).filter(|s| !s.kind().ends_with("comment")).count()
            };
            let method = parent.parent().filter(|m| m.kind() == "method_declaration");
            if let Some(m) = method {
                let non_void = m.child_by_field_name("type").is_some_and(|t| t.kind() != "void_type");
                if non_void && statements == 1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Every single-site mutant of `source` for the selected operators, in
/// source order. `file` names the compilation unit (`demo/Calc.java`).
pub fn enumerate_mutants(file: &str, source: &str, ops: &[Operator]) -> Result<Vec<Mutant>, MutationError> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("grammar loads");
    let tree = parser.parse(source, None).ok_or_else(|| MutationError::ParseFailure { file: file.into() })?;
    if tree.root_node().has_error() {
        return Err(MutationError::ParseFailure { file: file.into() });
    }
    let mut w = Walker {
        src: source,
        ops,
        sites: Vec::new(),
    };
    w.walk(tree.root_node(), false);
    let stem = file.trim_end_matches(".java").replace(['/', '\\'], ".");
    Ok(w.sites
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut mutated = String::with_capacity(source.len() + s.replacement.len());
            mutated.push_str(&source[..s.start]);
            mutated.push_str(&s.replacement);
            mutated.push_str(&source[s.end..]);
            Mutant {
                id: format!("{stem}-{:04}", i + 1),
                operator: s.operator,
                file: file.to_string(),
                span: (s.start, s.end),
                original: source[s.start..s.end].to_string(),
                replacement: s.replacement,
                mutated_source: mutated,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(body: &str) -> String {
        format!("class A {{\n  int f(int a, int b) {{\n    {body}\n  }}\n}}\n")
    }

    fn count(body: &str, ops: &[Operator]) -> usize {
        enumerate_mutants("A.java", &wrap(body), ops).unwrap().len()
    }

    #[test]
    fn spec_examples() {
        let m = enumerate_mutants("A.java", &wrap("int c = a + b; return c;"), &[Operator::AOR]).unwrap();
        let reps: Vec<&str> = m.iter().map(|m| m.replacement.as_str()).collect();
        assert_eq!(reps, ["-", "*", "/", "%"]);
        assert_eq!(count("return a < b ? 1 : 0;", &[Operator::ROR]), 5);
        // No operators or literals: one mutant per deletable statement.
        let m = enumerate_mutants("A.java", &wrap("g(); g(); return a;"), &Operator::ALL).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|m| m.operator == Operator::STD));
    }

    #[test]
    fn sole_return_and_declarations_survive_std() {
        assert_eq!(count("return a;", &[Operator::STD]), 0);
        assert_eq!(count("int c = a; return c;", &[Operator::STD]), 1);
        assert_eq!(count("{ } return a;", &[Operator::STD]), 1);
    }

    #[test]
    fn families_stay_apart() {
        assert_eq!(count("return (a & b) | (a ^ b);", &[Operator::LOR]), 6);
        assert_eq!(count("return a > 0 && b > 0 || a < 0 ? 1 : 0;", &[Operator::COR]), 2);
        assert_eq!(count("return a << 1 >>> 2;", &[Operator::SOR]), 4);
        assert_eq!(count("return a << 1 >>> 2;", &[Operator::AOR, Operator::COR]), 0);
    }

    #[test]
    fn unary_removal() {
        let m = enumerate_mutants("A.java", &wrap("return -a + ~b + (!(a > b) ? 1 : 0) + -5;"), &[Operator::ORU]).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|m| m.replacement.is_empty()));
    }

    #[test]
    fn literal_values() {
        let m = enumerate_mutants("A.java", &wrap("long x = 7L; double d = 1.0; return a - 1;"), &[Operator::LVR]).unwrap();
        let reps: Vec<&str> = m.iter().map(|m| m.replacement.as_str()).collect();
        assert_eq!(reps, ["0L", "1L", "-1L", "0.0", "-1.0", "0", "-1"]);
        let m = enumerate_mutants("A.java", &wrap("return a -1;"), &[Operator::LVR]).unwrap();
        assert_eq!(m[1].replacement, "(-1)");
        let m = enumerate_mutants("A.java", &wrap("String s = \"x\"; String e = \"\"; boolean t = true; return 0;"), &[Operator::LVR]).unwrap();
        let reps: Vec<&str> = m.iter().map(|m| m.replacement.as_str()).collect();
        assert_eq!(reps, ["\"\"", "false", "1", "-1"]);
    }

    #[test]
    fn outside_bodies_and_comments_are_ignored() {
        let src = "class A {\n  static final int K = 1 + 2;\n  // a + b\n  int f() { String s = \"a + b\"; return K; }\n}\n";
        let m = enumerate_mutants("A.java", src, &[Operator::AOR, Operator::LVR]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].original, "\"a + b\"");
    }

    #[test]
    fn every_mutant_reverts() {
        let src = wrap("int s = 0; for (int i = 0; i < b; i++) { s += i * 2; } if (s > 10 && a != 0) { s = -s; } return s;");
        let m = enumerate_mutants("A.java", &src, &Operator::ALL).unwrap();
        assert!(m.len() > 20);
        for x in &m {
            assert_ne!(x.mutated_source, src);
            assert_eq!(x.revert(), src);
        }
        let again = enumerate_mutants("A.java", &src, &Operator::ALL).unwrap();
        assert_eq!(m, again);
        assert_eq!(m[0].id, "A-0001");
    }

    #[test]
    fn broken_source_is_rejected() {
        assert!(matches!(
            enumerate_mutants("A.java", "class A { void f( { }", &Operator::ALL),
            Err(MutationError::ParseFailure { .. })
        ));
    }
}
