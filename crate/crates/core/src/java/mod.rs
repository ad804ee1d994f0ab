//! Java source handling shared by the miner, the post-processor and the
//! mutation engine.

pub mod lexer;

use tree_sitter::{Node, Parser, Tree};

/// Parses Java source with tree-sitter. Syntax errors produce `ERROR` /
/// missing nodes in the tree rather than a failure.
pub fn parse(source: &str) -> Tree {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("bundled Java grammar is ABI compatible");
    parser
        .parse(source, None)
        .expect("parser has a language and no timeout")
}

/// Text covered by `node`.
pub fn node_text<'a>(node: Node<'_>, source: &'a str) -> &'a str {
    &source[node.byte_range()]
}

/// Depth-first pre-order walk over every node (named and anonymous).
pub fn walk<'t>(root: Node<'t>, mut visit: impl FnMut(Node<'t>)) {
    let mut cursor = root.walk();
    loop {
        visit(cursor.node());
        if cursor.goto_first_child() {
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                return;
            }
        }
    }
}

/// 1-based line of a byte offset.
pub fn line_of(source: &str, byte: usize) -> usize {
    source[..byte.min(source.len())].matches('\n').count() + 1
}
