//! Structural index of a Java project: classes, methods, annotations and
//! comment spans.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use crate::java::{self, node_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodId(pub usize);

/// Byte range plus the 1-based inclusive line range it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub start_line: usize,
    pub end_line: usize,
}

impl Span {
    fn of(node: Node<'_>) -> Self {
        Span {
            start: node.start_byte(),
            end: node.end_byte(),
            start_line: node.start_position().row + 1,
            end_line: node.end_position().row + 1,
        }
    }

    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    Public,
    Protected,
    Package,
    Private,
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    /// Project-relative, forward slashes.
    pub path: String,
    pub content: Arc<str>,
}

#[derive(Debug, Clone)]
pub struct ClassInfo {
    /// Nested name without package, e.g. `Outer.Inner`.
    pub name: String,
    pub simple_name: String,
    /// Package-qualified name, e.g. `org.demo.Outer.Inner`.
    pub fqn: String,
    pub file: usize,
    pub file_path: String,
    pub top_level: bool,
    pub span: Span,
    pub methods: Vec<MethodId>,
}

#[derive(Debug, Clone)]
pub struct MethodInfo {
    pub class: ClassId,
    pub name: String,
    /// Name plus parameter types, e.g. `add(int,int)`.
    pub signature: String,
    pub visibility: Visibility,
    /// The whole declaration including modifiers and annotations.
    pub span: Span,
    /// Annotation names as written, without `@` (e.g. `Test`, `org.junit.Test`).
    pub annotations: Vec<String>,
    pub doc_comment: Option<Span>,
    pub inline_comments: Vec<Span>,
}

impl MethodInfo {
    pub fn has_annotation(&self, simple: &str) -> bool {
        self.annotations
            .iter()
            .any(|a| a.rsplit('.').next() == Some(simple))
    }

    pub fn is_test(&self) -> bool {
        self.has_annotation("Test")
    }
}

/// Index of a single file, as produced by [`parse_source`].
#[derive(Debug, Clone)]
pub struct IndexFragment {
    pub file: SourceFile,
    pub package: Option<String>,
    pub classes: Vec<ClassInfo>,
    pub methods: Vec<MethodInfo>,
    /// The tree contained syntax errors; the fragment holds what could be
    /// recovered.
    pub partial: bool,
}

#[derive(Debug, Clone, Default)]
pub struct StructuralIndex {
    pub project_id: String,
    pub files: Vec<SourceFile>,
    pub classes: Vec<ClassInfo>,
    pub methods: Vec<MethodInfo>,
}

/// Normalizes a path to forward slashes.
pub fn normalize_path(path: &str) -> String {
    path.replace('\\', "/").trim_start_matches("./").to_string()
}

/// Builds the structural index of one Java compilation unit.
pub fn parse_source(file_path: &str, content: &str) -> IndexFragment {
    let file = SourceFile {
        path: normalize_path(file_path),
        content: Arc::from(content),
    };
    let mut fragment = IndexFragment {
        file,
        package: None,
        classes: Vec::new(),
        methods: Vec::new(),
        partial: false,
    };
    if content.trim().is_empty() {
        return fragment;
    }
    let tree = java::parse(content);
    let root = tree.root_node();
    fragment.partial = root.has_error();

    let mut cursor = root.walk();
    for child in root.named_children(&mut cursor) {
        if child.kind() == "package_declaration" {
            let mut c = child.walk();
            let name = child
                .named_children(&mut c)
                .find(|n| matches!(n.kind(), "scoped_identifier" | "identifier"))
                .map(|n| node_text(n, content).to_string());
            fragment.package = name;
        }
    }
    collect_types(root, content, &[], &mut fragment);
    fragment
}

fn is_type_declaration(kind: &str) -> bool {
    matches!(
        kind,
        "class_declaration"
            | "interface_declaration"
            | "enum_declaration"
            | "record_declaration"
            | "annotation_type_declaration"
    )
}

fn collect_types(node: Node<'_>, src: &str, outer: &[String], frag: &mut IndexFragment) {
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        if is_type_declaration(child.kind()) {
            index_type(child, src, outer, frag);
        } else if child.kind() == "ERROR" {
            // recover declarations swallowed by an error node
            collect_types(child, src, outer, frag);
        }
    }
}

fn index_type(decl: Node<'_>, src: &str, outer: &[String], frag: &mut IndexFragment) {
    let Some(name_node) = decl.child_by_field_name("name") else {
        return;
    };
    let simple = node_text(name_node, src).to_string();
    let mut path = outer.to_vec();
    path.push(simple.clone());
    let nested = path.join(".");
    let fqn = match &frag.package {
        Some(p) => format!("{p}.{nested}"),
        None => nested.clone(),
    };
    let class_id = ClassId(frag.classes.len());
    frag.classes.push(ClassInfo {
        name: nested,
        simple_name: simple,
        fqn,
        file: 0,
        file_path: frag.file.path.clone(),
        top_level: outer.is_empty(),
        span: Span::of(decl),
        methods: Vec::new(),
    });
    let interface = decl.kind() == "interface_declaration";
    let Some(body) = decl.child_by_field_name("body") else {
        return;
    };
    let mut cursor = body.walk();
    for member in body.named_children(&mut cursor) {
        match member.kind() {
            "method_declaration" => {
                let method = index_method(member, src, class_id, interface);
                let id = MethodId(frag.methods.len());
                frag.methods.push(method);
                frag.classes[class_id.0].methods.push(id);
            }
            kind if is_type_declaration(kind) => index_type(member, src, &path, frag),
            // enum bodies keep their members one level down
            "enum_body_declarations" => {
                let mut c = member.walk();
                for inner in member.named_children(&mut c) {
                    if inner.kind() == "method_declaration" {
                        let method = index_method(inner, src, class_id, false);
                        let id = MethodId(frag.methods.len());
                        frag.methods.push(method);
                        frag.classes[class_id.0].methods.push(id);
                    } else if is_type_declaration(inner.kind()) {
                        index_type(inner, src, &path, frag);
                    }
                }
            }
            _ => {}
        }
    }
}

fn index_method(decl: Node<'_>, src: &str, class: ClassId, in_interface: bool) -> MethodInfo {
    let name = decl
        .child_by_field_name("name")
        .map(|n| node_text(n, src).to_string())
        .unwrap_or_default();

    let mut annotations = Vec::new();
    let mut visibility = None;
    let mut cursor = decl.walk();
    for child in decl.children(&mut cursor) {
        if child.kind() != "modifiers" {
            continue;
        }
        let mut mc = child.walk();
        for m in child.children(&mut mc) {
            match m.kind() {
                "marker_annotation" | "annotation" => {
                    if let Some(n) = m.child_by_field_name("name") {
                        annotations.push(node_text(n, src).to_string());
                    }
                }
                "public" => visibility = Some(Visibility::Public),
                "protected" => visibility = Some(Visibility::Protected),
                "private" => visibility = Some(Visibility::Private),
                _ => {}
            }
        }
    }
    let visibility = visibility.unwrap_or(if in_interface {
        Visibility::Public
    } else {
        Visibility::Package
    });

    let params = decl
        .child_by_field_name("parameters")
        .map(|p| {
            let mut c = p.walk();
            p.named_children(&mut c)
                .filter(|n| matches!(n.kind(), "formal_parameter" | "spread_parameter"))
                .map(|n| {
                    let ty = n
                        .child_by_field_name("type")
                        .map(|t| node_text(t, src))
                        .unwrap_or_else(|| node_text(n, src));
                    let ty: String = ty.split_whitespace().collect();
                    if n.kind() == "spread_parameter" {
                        format!("{ty}...")
                    } else {
                        ty
                    }
                })
                .collect::<Vec<_>>()
                .join(",")
        })
        .unwrap_or_default();

    MethodInfo {
        class,
        signature: format!("{name}({params})"),
        name,
        visibility,
        span: Span::of(decl),
        annotations,
        doc_comment: doc_comment_of(decl, src),
        inline_comments: inline_comments_of(decl),
    }
}

/// The `/** ... */` block directly above a declaration, if any.
fn doc_comment_of(decl: Node<'_>, src: &str) -> Option<Span> {
    let prev = decl.prev_sibling()?;
    if prev.kind() != "block_comment" {
        return None;
    }
    let text = node_text(prev, src);
    let between = &src[prev.end_byte()..decl.start_byte()];
    (text.starts_with("/**") && text != "/**/" && between.trim().is_empty())
        .then(|| Span::of(prev))
}

fn inline_comments_of(decl: Node<'_>) -> Vec<Span> {
    let Some(body) = decl.child_by_field_name("body") else {
        return Vec::new();
    };
    let mut spans = Vec::new();
    java::walk(body, |n| {
        if matches!(n.kind(), "line_comment" | "block_comment") {
            spans.push(Span::of(n));
        }
    });
    spans
}

impl StructuralIndex {
    /// Merges per-file fragments. Fragments are ordered by path so the result
    /// does not depend on the order files were parsed in.
    pub fn from_fragments(project_id: impl Into<String>, mut fragments: Vec<IndexFragment>) -> Self {
        fragments.sort_by(|a, b| a.file.path.cmp(&b.file.path));
        let mut index = StructuralIndex {
            project_id: project_id.into(),
            ..Default::default()
        };
        for frag in fragments {
            let file_idx = index.files.len();
            let class_base = index.classes.len();
            let method_base = index.methods.len();
            index.files.push(frag.file);
            for mut class in frag.classes {
                class.file = file_idx;
                for m in &mut class.methods {
                    m.0 += method_base;
                }
                index.classes.push(class);
            }
            for mut method in frag.methods {
                method.class.0 += class_base;
                index.methods.push(method);
            }
        }
        index
    }

    pub fn class(&self, id: ClassId) -> &ClassInfo {
        &self.classes[id.0]
    }

    pub fn method(&self, id: MethodId) -> &MethodInfo {
        &self.methods[id.0]
    }

    pub fn source_of_class(&self, id: ClassId) -> &str {
        &self.files[self.classes[id.0].file].content
    }

    pub fn source_of_method(&self, id: MethodId) -> &str {
        self.source_of_class(self.methods[id.0].class)
    }

    /// Full declaration text of a method.
    pub fn method_text(&self, id: MethodId) -> &str {
        self.methods[id.0].span.text(self.source_of_method(id))
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.classes.len()).map(ClassId)
    }

    pub fn has_file(&self, path: &str) -> bool {
        self.files.iter().any(|f| f.path == path)
    }

    pub fn classes_in_file<'a>(&'a self, path: &'a str) -> impl Iterator<Item = ClassId> + 'a {
        self.class_ids()
            .filter(move |&c| self.classes[c.0].file_path == path)
    }

    pub fn find_class_by_name(&self, name: &str) -> Option<ClassId> {
        self.class_ids()
            .find(|&c| self.classes[c.0].name == name || self.classes[c.0].fqn == name)
    }
}
