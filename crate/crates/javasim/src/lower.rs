//! tree-sitter CST → [`crate::ast`].

use tree_sitter::{Node, Parser};

use crate::ast::*;
use crate::Diagnostic;

pub struct Lowered {
    pub unit: Unit,
    pub classes: Vec<ClassDecl>,
}

pub fn lower(path: &str, src: &str, unit_index: usize, diags: &mut Vec<Diagnostic>) -> Lowered {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("grammar loads");
    let tree = parser.parse(src, None).expect("parser returns a tree");
    let root = tree.root_node();
    let before = diags.len();
    syntax_errors(root, src, path, diags);
    let mut cx = Cx {
        src,
        path,
        unit_index,
        diags,
        package: None,
    };
    let mut unit = Unit {
        path: path.to_string(),
        package: None,
        imports: Vec::new(),
    };
    let mut classes = Vec::new();
    if cx.diags.len() == before {
        let mut cursor = root.walk();
        for child in root.named_children(&mut cursor) {
            match child.kind() {
                "package_declaration" => {
                    let name = child
                        .named_children(&mut child.walk())
                        .find(|n| matches!(n.kind(), "identifier" | "scoped_identifier"))
                        .map(|n| cx.text(n).to_string());
                    cx.package = name.clone();
                    unit.package = name;
                }
                "import_declaration" => {
                    let text = cx.text(child);
                    let is_static = text.trim_start_matches("import").trim_start().starts_with("static");
                    let mut c = child.walk();
                    let path = child
                        .named_children(&mut c)
                        .find(|n| matches!(n.kind(), "identifier" | "scoped_identifier"))
                        .map(|n| cx.text(n).to_string())
                        .unwrap_or_default();
                    let wildcard = child.named_children(&mut child.walk()).any(|n| n.kind() == "asterisk");
                    unit.imports.push(Import {
                        path,
                        is_static,
                        wildcard,
                    });
                }
                "class_declaration" | "interface_declaration" => cx.class(child, None, &mut classes),
                "line_comment" | "block_comment" => {}
                other => cx.unsupported(child, other),
            }
        }
    }
    Lowered { unit, classes }
}

fn line(n: Node) -> Line {
    n.start_position().row as Line + 1
}

fn syntax_errors(root: Node, src: &str, path: &str, diags: &mut Vec<Diagnostic>) {
    if !root.has_error() {
        return;
    }
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if n.is_missing() {
            diags.push(Diagnostic::new(path, line(n), format!("'{}' expected", n.kind())));
        } else if n.is_error() {
            let snippet: String = src[n.byte_range()].chars().take(24).collect();
            diags.push(Diagnostic::new(
                path,
                line(n),
                format!("<identifier> expected near `{}`", snippet.trim()),
            ));
        } else if n.has_error() {
            let mut c = n.walk();
            let kids: Vec<Node> = n.children(&mut c).collect();
            stack.extend(kids.into_iter().rev());
        }
    }
    diags.sort_by_key(|d| d.line);
}

struct Cx<'a> {
    src: &'a str,
    path: &'a str,
    unit_index: usize,
    diags: &'a mut Vec<Diagnostic>,
    package: Option<String>,
}

struct Modifiers {
    is_static: bool,
    is_abstract: bool,
    annotations: Vec<Annotation>,
}

impl<'a> Cx<'a> {
    fn text(&self, n: Node) -> &'a str {
        &self.src[n.byte_range()]
    }

    fn unsupported(&mut self, n: Node, what: &str) {
        self.diags.push(Diagnostic::new(
            self.path,
            line(n),
            format!("unsupported construct: {what}"),
        ));
    }

    fn modifiers(&mut self, decl: Node) -> Modifiers {
        let mut m = Modifiers {
            is_static: false,
            is_abstract: false,
            annotations: Vec::new(),
        };
        let mut c = decl.walk();
        let Some(mods) = decl.children(&mut c).find(|n| n.kind() == "modifiers") else {
            return m;
        };
        let mut c = mods.walk();
        for k in mods.children(&mut c) {
            match k.kind() {
                "static" => m.is_static = true,
                "abstract" => m.is_abstract = true,
                "marker_annotation" | "annotation" => {
                    let name = k
                        .child_by_field_name("name")
                        .map(|n| self.text(n).rsplit('.').next().unwrap_or("").to_string())
                        .unwrap_or_default();
                    let mut class_values = Vec::new();
                    if let Some(args) = k.child_by_field_name("arguments") {
                        let mut ac = args.walk();
                        for pair in args.named_children(&mut ac).filter(|p| p.kind() == "element_value_pair") {
                            let key = pair.child_by_field_name("key").map(|k| self.text(k).to_string());
                            let value = pair.child_by_field_name("value");
                            if let (Some(key), Some(v)) = (key, value) {
                                if v.kind() == "class_literal" {
                                    if let Some(t) = v.named_child(0) {
                                        let ty = self.ty(t);
                                        class_values.push((key, ty));
                                    }
                                }
                            }
                        }
                    }
                    m.annotations.push(Annotation { name, class_values });
                }
                _ => {}
            }
        }
        m
    }

    fn class(&mut self, node: Node, outer: Option<&str>, out: &mut Vec<ClassDecl>) {
        let simple = node
            .child_by_field_name("name")
            .map(|n| self.text(n).to_string())
            .unwrap_or_default();
        let name = match outer {
            Some(o) => format!("{o}.{simple}"),
            None => simple,
        };
        let fqn = match &self.package {
            Some(p) => format!("{p}.{name}"),
            None => name.clone(),
        };
        if node.child_by_field_name("type_parameters").is_some() {
            self.unsupported(node, "generic class");
        }
        let superclass = node
            .child_by_field_name("superclass")
            .and_then(|s| s.named_child(0))
            .map(|t| self.text(t).to_string());
        let mut interfaces = Vec::new();
        let mut c = node.walk();
        for k in node.children(&mut c) {
            if matches!(k.kind(), "super_interfaces" | "extends_interfaces") {
                if let Some(list) = k.named_child(0) {
                    let mut lc = list.walk();
                    for t in list.named_children(&mut lc) {
                        interfaces.push(self.text(t).to_string());
                    }
                }
            }
        }
        let is_abstract = self.modifiers(node).is_abstract;
        let mut class = ClassDecl {
            name: name.clone(),
            fqn,
            unit: self.unit_index,
            superclass,
            interfaces,
            is_interface: node.kind() == "interface_declaration",
            is_abstract,
            fields: Vec::new(),
            methods: Vec::new(),
            ctors: Vec::new(),
            static_init: Vec::new(),
            instance_init: Vec::new(),
            line: line(node),
        };
        let Some(body) = node.child_by_field_name("body") else {
            out.push(class);
            return;
        };
        let mut nested = Vec::new();
        let mut c = body.walk();
        for member in body.named_children(&mut c) {
            match member.kind() {
                "field_declaration" | "constant_declaration" => {
                    let mods = self.modifiers(member);
                    let is_static = mods.is_static || class.is_interface;
                    let Some(tn) = member.child_by_field_name("type") else { continue };
                    let base = self.ty(tn);
                    let mut dc = member.walk();
                    for d in member.children_by_field_name("declarator", &mut dc) {
                        let decl = self.declarator(d, &base);
                        class.fields.push(FieldDecl {
                            name: decl.name,
                            ty: decl.ty,
                            is_static,
                            init: decl.init,
                            line: line(d),
                        });
                    }
                }
                "method_declaration" => {
                    let mods = self.modifiers(member);
                    if member.child_by_field_name("type_parameters").is_some() {
                        self.unsupported(member, "generic method");
                    }
                    let name = member
                        .child_by_field_name("name")
                        .map(|n| self.text(n).to_string())
                        .unwrap_or_default();
                    let ret = member
                        .child_by_field_name("type")
                        .map(|t| self.ty(t))
                        .unwrap_or(TypeRef::Void);
                    let params = self.params(member);
                    let body = member.child_by_field_name("body").map(|b| self.block(b));
                    class.methods.push(MethodDecl {
                        name,
                        params,
                        ret,
                        is_static: mods.is_static,
                        is_abstract: body.is_none() || mods.is_abstract,
                        annotations: mods.annotations,
                        body,
                        line: line(member),
                    });
                }
                "constructor_declaration" => {
                    let params = self.params(member);
                    let Some(body) = member.child_by_field_name("body") else { continue };
                    let mut explicit = None;
                    let mut stmts = Vec::new();
                    let mut bc = body.walk();
                    for s in body.named_children(&mut bc) {
                        if s.kind() == "explicit_constructor_invocation" {
                            let is_super = s
                                .child_by_field_name("constructor")
                                .is_some_and(|k| k.kind() == "super");
                            let args = self.args(s.child_by_field_name("arguments"));
                            explicit = Some(ExplicitCtorCall {
                                is_super,
                                args,
                                line: line(s),
                            });
                        } else if let Some(st) = self.stmt(s) {
                            stmts.push(st);
                        }
                    }
                    class.ctors.push(CtorDecl {
                        params,
                        explicit,
                        body: Block { stmts },
                        line: line(member),
                    });
                }
                "static_initializer" => {
                    if let Some(b) = member.named_child(0) {
                        let block = self.block(b);
                        class.static_init.push(block);
                    }
                }
                "block" => {
                    let block = self.block(member);
                    class.instance_init.push(block);
                }
                "class_declaration" | "interface_declaration" => nested.push(member),
                "line_comment" | "block_comment" => {}
                other => self.unsupported(member, other),
            }
        }
        out.push(class);
        for n in nested {
            self.class(n, Some(&name), out);
        }
    }

    fn params(&mut self, decl: Node) -> Vec<Param> {
        let mut out = Vec::new();
        let Some(ps) = decl.child_by_field_name("parameters") else {
            return out;
        };
        let mut c = ps.walk();
        for p in ps.named_children(&mut c) {
            match p.kind() {
                "formal_parameter" => {
                    let dims = p.child_by_field_name("dimensions").map_or(0, |d| self.dims(d));
                    let ty = p
                        .child_by_field_name("type")
                        .map(|t| self.ty(t))
                        .unwrap_or(TypeRef::Infer)
                        .array_of(dims);
                    let name = p
                        .child_by_field_name("name")
                        .map(|n| self.text(n).to_string())
                        .unwrap_or_default();
                    out.push(Param { name, ty });
                }
                "line_comment" | "block_comment" => {}
                other => self.unsupported(p, other),
            }
        }
        out
    }

    fn dims(&self, n: Node) -> usize {
        self.text(n).matches('[').count()
    }

    fn ty(&mut self, n: Node) -> TypeRef {
        let text = self.text(n);
        match n.kind() {
            "integral_type" | "floating_point_type" => TypeRef::Prim(match text {
                "byte" => Prim::Byte,
                "short" => Prim::Short,
                "long" => Prim::Long,
                "char" => Prim::Char,
                "float" => Prim::Float,
                "double" => Prim::Double,
                _ => Prim::Int,
            }),
            "boolean_type" => TypeRef::Prim(Prim::Boolean),
            "void_type" => TypeRef::Void,
            "type_identifier" if text == "var" => TypeRef::Infer,
            "type_identifier" | "scoped_type_identifier" => TypeRef::Named(text.to_string()),
            "generic_type" => {
                let base = n.named_child(0).map(|b| self.text(b)).unwrap_or(text);
                TypeRef::Named(format!("{base}<>"))
            }
            "array_type" => {
                let elem = n
                    .child_by_field_name("element")
                    .map(|e| self.ty(e))
                    .unwrap_or(TypeRef::Infer);
                let dims = n.child_by_field_name("dimensions").map_or(1, |d| self.dims(d));
                elem.array_of(dims)
            }
            other => {
                self.unsupported(n, other);
                TypeRef::Infer
            }
        }
    }

    fn declarator(&mut self, d: Node, base: &TypeRef) -> Declarator {
        let name = d
            .child_by_field_name("name")
            .map(|n| self.text(n).to_string())
            .unwrap_or_default();
        let dims = d.child_by_field_name("dimensions").map_or(0, |x| self.dims(x));
        let init = d.child_by_field_name("value").map(|v| self.expr(v));
        Declarator {
            name,
            ty: base.clone().array_of(dims),
            init,
        }
    }

    fn block(&mut self, n: Node) -> Block {
        let mut stmts = Vec::new();
        let mut c = n.walk();
        for s in n.named_children(&mut c) {
            if let Some(st) = self.stmt(s) {
                stmts.push(st);
            }
        }
        Block { stmts }
    }

    fn boxed_stmt(&mut self, n: Option<Node>) -> Box<Stmt> {
        Box::new(
            n.and_then(|s| self.stmt(s)).unwrap_or(Stmt {
                line: 0,
                kind: StmtKind::Empty,
            }),
        )
    }

    fn cond(&mut self, n: Option<Node>) -> Expr {
        match n {
            Some(p) if p.kind() == "parenthesized_expression" => match p.named_child(0) {
                Some(e) => self.expr(e),
                None => self.bad_expr(p, "empty condition"),
            },
            Some(e) => self.expr(e),
            None => Expr {
                line: 0,
                kind: ExprKind::Lit(Lit::Bool(true)),
            },
        }
    }

    fn stmt(&mut self, n: Node) -> Option<Stmt> {
        let l = line(n);
        let kind = match n.kind() {
            "line_comment" | "block_comment" => return None,
            ";" => StmtKind::Empty,
            "local_variable_declaration" => {
                let base = n
                    .child_by_field_name("type")
                    .map(|t| self.ty(t))
                    .unwrap_or(TypeRef::Infer);
                let mut c = n.walk();
                let decls: Vec<Node> = n.children_by_field_name("declarator", &mut c).collect();
                StmtKind::Local(decls.into_iter().map(|d| self.declarator(d, &base)).collect())
            }
            "expression_statement" => {
                let e = n.named_child(0)?;
                StmtKind::Expr(self.expr(e))
            }
            "if_statement" => {
                let c = self.cond(n.child_by_field_name("condition"));
                let then = self.boxed_stmt(n.child_by_field_name("consequence"));
                let alt = n.child_by_field_name("alternative").map(|a| self.boxed_stmt(Some(a)));
                StmtKind::If(c, then, alt)
            }
            "while_statement" => {
                let c = self.cond(n.child_by_field_name("condition"));
                StmtKind::While(c, self.boxed_stmt(n.child_by_field_name("body")))
            }
            "do_statement" => {
                let body = self.boxed_stmt(n.child_by_field_name("body"));
                StmtKind::DoWhile(body, self.cond(n.child_by_field_name("condition")))
            }
            "for_statement" => {
                let mut init = Vec::new();
                let mut c = n.walk();
                let inits: Vec<Node> = n.children_by_field_name("init", &mut c).collect();
                for i in inits {
                    if i.kind() == "local_variable_declaration" {
                        init.extend(self.stmt(i));
                    } else {
                        let e = self.expr(i);
                        init.push(Stmt {
                            line: line(i),
                            kind: StmtKind::Expr(e),
                        });
                    }
                }
                let cond = n.child_by_field_name("condition").map(|c| self.expr(c));
                let mut c = n.walk();
                let ups: Vec<Node> = n.children_by_field_name("update", &mut c).collect();
                let update = ups.into_iter().map(|u| self.expr(u)).collect();
                StmtKind::For {
                    init,
                    cond,
                    update,
                    body: self.boxed_stmt(n.child_by_field_name("body")),
                }
            }
            "enhanced_for_statement" => {
                let ty = n
                    .child_by_field_name("type")
                    .map(|t| self.ty(t))
                    .unwrap_or(TypeRef::Infer);
                let name = n
                    .child_by_field_name("name")
                    .map(|x| self.text(x).to_string())
                    .unwrap_or_default();
                let iter = match n.child_by_field_name("value") {
                    Some(v) => self.expr(v),
                    None => self.bad_expr(n, "missing iterable"),
                };
                StmtKind::ForEach {
                    ty,
                    name,
                    iter,
                    body: self.boxed_stmt(n.child_by_field_name("body")),
                }
            }
            "return_statement" => StmtKind::Return(n.named_child(0).map(|e| self.expr(e))),
            "break_statement" => StmtKind::Break(n.named_child(0).map(|i| self.text(i).to_string())),
            "continue_statement" => StmtKind::Continue(n.named_child(0).map(|i| self.text(i).to_string())),
            "throw_statement" => {
                let e = n.named_child(0)?;
                StmtKind::Throw(self.expr(e))
            }
            "block" => StmtKind::Block(self.block(n)),
            "synchronized_statement" => {
                let mut c = n.walk();
                let b = n.named_children(&mut c).find(|k| k.kind() == "block")?;
                StmtKind::Block(self.block(b))
            }
            "try_statement" => {
                let body = n
                    .child_by_field_name("body")
                    .map(|b| self.block(b))
                    .unwrap_or_default();
                let mut catches = Vec::new();
                let mut finally = None;
                let mut c = n.walk();
                for k in n.named_children(&mut c) {
                    match k.kind() {
                        "catch_clause" => {
                            let mut kc = k.walk();
                            let param = k.named_children(&mut kc).find(|p| p.kind() == "catch_formal_parameter");
                            let mut types = Vec::new();
                            let mut name = String::new();
                            if let Some(p) = param {
                                name = p
                                    .child_by_field_name("name")
                                    .map(|x| self.text(x).to_string())
                                    .unwrap_or_default();
                                let mut pc = p.walk();
                                let ct = p.named_children(&mut pc).find(|x| x.kind() == "catch_type");
                                if let Some(ct) = ct {
                                    let mut cc = ct.walk();
                                    types = ct
                                        .named_children(&mut cc)
                                        .map(|t| self.text(t).to_string())
                                        .collect();
                                }
                            }
                            let body = k
                                .child_by_field_name("body")
                                .map(|b| self.block(b))
                                .unwrap_or_default();
                            catches.push(Catch { types, name, body });
                        }
                        "finally_clause" => {
                            finally = k.named_child(0).map(|b| self.block(b));
                        }
                        _ => {}
                    }
                }
                StmtKind::Try {
                    body,
                    catches,
                    finally,
                }
            }
            "labeled_statement" => {
                let label = n.named_child(0).map(|i| self.text(i).to_string()).unwrap_or_default();
                StmtKind::Labeled(label, self.boxed_stmt(n.named_child(1)))
            }
            "assert_statement" => {
                let c = n.named_child(0).map(|e| self.expr(e))?;
                StmtKind::Assert(c, n.named_child(1).map(|e| self.expr(e)))
            }
            other => {
                self.unsupported(n, other);
                StmtKind::Empty
            }
        };
        Some(Stmt { line: l, kind })
    }

    fn bad_expr(&mut self, n: Node, what: &str) -> Expr {
        self.unsupported(n, what);
        Expr {
            line: line(n),
            kind: ExprKind::Lit(Lit::Null),
        }
    }

    fn args(&mut self, n: Option<Node>) -> Vec<Expr> {
        let Some(n) = n else { return Vec::new() };
        let mut c = n.walk();
        let kids: Vec<Node> = n
            .named_children(&mut c)
            .filter(|k| !matches!(k.kind(), "line_comment" | "block_comment"))
            .collect();
        kids.into_iter().map(|k| self.expr(k)).collect()
    }

    fn expr(&mut self, n: Node) -> Expr {
        let l = line(n);
        let text = self.text(n);
        let kind = match n.kind() {
            "parenthesized_expression" => match n.named_child(0) {
                Some(e) => return self.expr(e),
                None => return self.bad_expr(n, "empty parentheses"),
            },
            "decimal_integer_literal" | "hex_integer_literal" | "octal_integer_literal"
            | "binary_integer_literal" => match parse_int(text) {
                Some(lit) => ExprKind::Lit(lit),
                None => return self.bad_expr(n, "integer number too large"),
            },
            "decimal_floating_point_literal" => match parse_float(text) {
                Some(lit) => ExprKind::Lit(lit),
                None => return self.bad_expr(n, "malformed floating-point literal"),
            },
            "true" => ExprKind::Lit(Lit::Bool(true)),
            "false" => ExprKind::Lit(Lit::Bool(false)),
            "null_literal" => ExprKind::Lit(Lit::Null),
            "character_literal" => {
                let inner = &text[1..text.len().saturating_sub(1).max(1)];
                let units: Vec<u16> = unescape(inner).encode_utf16().collect();
                if units.len() != 1 {
                    return self.bad_expr(n, "unclosed character literal");
                }
                ExprKind::Lit(Lit::Char(units[0]))
            }
            "string_literal" => {
                if text.starts_with("\"\"\"") {
                    return self.bad_expr(n, "text block");
                }
                ExprKind::Lit(Lit::Str(unescape(&text[1..text.len() - 1])))
            }
            "identifier" => ExprKind::Name(text.to_string()),
            "this" => ExprKind::This,
            "field_access" => {
                let field = n
                    .child_by_field_name("field")
                    .map(|f| self.text(f).to_string())
                    .unwrap_or_default();
                match n.child_by_field_name("object") {
                    Some(o) if o.kind() == "super" => ExprKind::SuperField(field),
                    Some(o) => ExprKind::Field(Box::new(self.expr(o)), field),
                    None => return self.bad_expr(n, "field access"),
                }
            }
            "method_invocation" => {
                let name = n
                    .child_by_field_name("name")
                    .map(|f| self.text(f).to_string())
                    .unwrap_or_default();
                let args = self.args(n.child_by_field_name("arguments"));
                let (target, is_super) = match n.child_by_field_name("object") {
                    Some(o) if o.kind() == "super" => (None, true),
                    Some(o) => (Some(Box::new(self.expr(o))), false),
                    None => (None, false),
                };
                ExprKind::Call {
                    target,
                    is_super,
                    name,
                    args,
                }
            }
            "object_creation_expression" => {
                let mut c = n.walk();
                if n.named_children(&mut c).any(|k| k.kind() == "class_body") {
                    return self.bad_expr(n, "anonymous class");
                }
                let class = match n.child_by_field_name("type") {
                    Some(t) => match self.ty(t) {
                        TypeRef::Named(s) => s,
                        _ => String::new(),
                    },
                    None => String::new(),
                };
                ExprKind::New {
                    class,
                    args: self.args(n.child_by_field_name("arguments")),
                }
            }
            "array_creation_expression" => {
                let elem = n
                    .child_by_field_name("type")
                    .map(|t| self.ty(t))
                    .unwrap_or(TypeRef::Infer);
                let mut dims = Vec::new();
                let mut extra = 0;
                let mut c = n.walk();
                let parts: Vec<Node> = n.children_by_field_name("dimensions", &mut c).collect();
                for d in parts {
                    if d.kind() == "dimensions_expr" {
                        if let Some(e) = d.named_child(0) {
                            let e = self.expr(e);
                            dims.push(e);
                        }
                    } else {
                        extra += self.dims(d);
                    }
                }
                let init = n.child_by_field_name("value").map(|v| self.array_init(v));
                ExprKind::NewArray {
                    elem,
                    dims,
                    extra_dims: extra,
                    init,
                }
            }
            "array_initializer" => ExprKind::ArrayInit(self.array_init(n)),
            "array_access" => {
                let a = n.child_by_field_name("array");
                let i = n.child_by_field_name("index");
                match (a, i) {
                    (Some(a), Some(i)) => ExprKind::Index(Box::new(self.expr(a)), Box::new(self.expr(i))),
                    _ => return self.bad_expr(n, "array access"),
                }
            }
            "unary_expression" => {
                let op = match n.child_by_field_name("operator").map(|o| self.text(o)) {
                    Some("-") => UnOp::Neg,
                    Some("+") => UnOp::Plus,
                    Some("!") => UnOp::Not,
                    _ => UnOp::BitNot,
                };
                match n.child_by_field_name("operand") {
                    Some(o) => ExprKind::Unary(op, Box::new(self.expr(o))),
                    None => return self.bad_expr(n, "unary operand"),
                }
            }
            "binary_expression" => {
                let op = n
                    .child_by_field_name("operator")
                    .and_then(|o| BinOp::from_token(self.text(o)));
                let lhs = n.child_by_field_name("left");
                let rhs = n.child_by_field_name("right");
                match (op, lhs, rhs) {
                    (Some(op), Some(a), Some(b)) => {
                        ExprKind::Binary(op, Box::new(self.expr(a)), Box::new(self.expr(b)))
                    }
                    _ => return self.bad_expr(n, "binary operator"),
                }
            }
            "assignment_expression" => {
                let op_text = n
                    .child_by_field_name("operator")
                    .map(|o| self.text(o))
                    .unwrap_or("=");
                let op = if op_text == "=" {
                    None
                } else {
                    BinOp::from_token(&op_text[..op_text.len() - 1])
                };
                let lhs = n.child_by_field_name("left");
                let rhs = n.child_by_field_name("right");
                match (lhs, rhs) {
                    (Some(a), Some(b)) => ExprKind::Assign {
                        op,
                        target: Box::new(self.expr(a)),
                        value: Box::new(self.expr(b)),
                    },
                    _ => return self.bad_expr(n, "assignment"),
                }
            }
            "update_expression" => {
                let Some(operand) = n.named_child(0) else {
                    return self.bad_expr(n, "update");
                };
                let prefix = operand.start_byte() > n.start_byte();
                ExprKind::IncDec {
                    prefix,
                    inc: text.contains("++"),
                    target: Box::new(self.expr(operand)),
                }
            }
            "ternary_expression" => {
                let c = n.child_by_field_name("condition");
                let a = n.child_by_field_name("consequence");
                let b = n.child_by_field_name("alternative");
                match (c, a, b) {
                    (Some(c), Some(a), Some(b)) => ExprKind::Cond(
                        Box::new(self.expr(c)),
                        Box::new(self.expr(a)),
                        Box::new(self.expr(b)),
                    ),
                    _ => return self.bad_expr(n, "conditional"),
                }
            }
            "cast_expression" => {
                let t = n.child_by_field_name("type").map(|t| self.ty(t));
                match (t, n.child_by_field_name("value")) {
                    (Some(t), Some(v)) => ExprKind::Cast(t, Box::new(self.expr(v))),
                    _ => return self.bad_expr(n, "cast"),
                }
            }
            "instanceof_expression" => {
                if n.child_by_field_name("name").is_some() || n.child_by_field_name("pattern").is_some() {
                    return self.bad_expr(n, "instanceof pattern");
                }
                let l = n.child_by_field_name("left");
                let r = n.child_by_field_name("right");
                match (l, r) {
                    (Some(l), Some(r)) => {
                        let t = self.ty(r);
                        ExprKind::InstanceOf(Box::new(self.expr(l)), t)
                    }
                    _ => return self.bad_expr(n, "instanceof"),
                }
            }
            "class_literal" => match n.named_child(0) {
                Some(t) => ExprKind::ClassLit(self.ty(t)),
                None => return self.bad_expr(n, "class literal"),
            },
            other => return self.bad_expr(n, other),
        };
        Expr { line: l, kind }
    }

    fn array_init(&mut self, n: Node) -> Vec<Expr> {
        let mut c = n.walk();
        let kids: Vec<Node> = n
            .named_children(&mut c)
            .filter(|k| !matches!(k.kind(), "line_comment" | "block_comment"))
            .collect();
        kids.into_iter().map(|k| self.expr(k)).collect()
    }
}

fn parse_int(text: &str) -> Option<Lit> {
    let t: String = text.chars().filter(|&c| c != '_').collect();
    let (body, long) = match t.strip_suffix(['l', 'L']) {
        Some(b) => (b.to_string(), true),
        None => (t, false),
    };
    let lower = body.to_ascii_lowercase();
    let (digits, radix) = if let Some(h) = lower.strip_prefix("0x") {
        (h.to_string(), 16)
    } else if let Some(b) = lower.strip_prefix("0b") {
        (b.to_string(), 2)
    } else if lower.len() > 1 && lower.starts_with('0') {
        (lower[1..].to_string(), 8)
    } else {
        (lower, 10)
    };
    let v = u64::from_str_radix(&digits, radix).ok()?;
    if long {
        if radix == 10 && v > i64::MAX as u64 + 1 {
            return None;
        }
        Some(Lit::Long(v as i64))
    } else if radix == 10 {
        // 2147483648 is only legal under unary minus; it wraps to MIN.
        (v <= 1 << 31).then_some(Lit::Int(v as u32 as i32))
    } else {
        (v <= u32::MAX as u64).then_some(Lit::Int(v as u32 as i32))
    }
}

fn parse_float(text: &str) -> Option<Lit> {
    let t: String = text.chars().filter(|&c| c != '_').collect();
    if let Some(b) = t.strip_suffix(['f', 'F']) {
        return b.parse::<f32>().ok().map(|v| Lit::Float(v as f64));
    }
    let b = t.strip_suffix(['d', 'D']).unwrap_or(&t);
    b.parse::<f64>().ok().map(Lit::Double)
}

/// Resolves Java escape sequences.
pub fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c != '\\' || i + 1 == chars.len() {
            out.push(c);
            i += 1;
            continue;
        }
        let e = chars[i + 1];
        i += 2;
        match e {
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            'b' => out.push('\u{8}'),
            'f' => out.push('\u{c}'),
            's' => out.push(' '),
            '0'..='7' => {
                let mut v = e.to_digit(8).unwrap_or(0);
                let max = if e <= '3' { 2 } else { 1 };
                for _ in 0..max {
                    match chars.get(i).and_then(|c| c.to_digit(8)) {
                        Some(d) => {
                            v = v * 8 + d;
                            i += 1;
                        }
                        None => break,
                    }
                }
                out.push(char::from_u32(v).unwrap_or('\u{fffd}'));
            }
            'u' => {
                while chars.get(i) == Some(&'u') {
                    i += 1;
                }
                let hex: String = chars[i..(i + 4).min(chars.len())].iter().collect();
                i += hex.len();
                let v = u32::from_str_radix(&hex, 16).unwrap_or(0xfffd);
                out.push(char::from_u32(v).unwrap_or('\u{fffd}'));
            }
            other => out.push(other),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_literals() {
        assert_eq!(parse_int("42"), Some(Lit::Int(42)));
        assert_eq!(parse_int("0xFFFFFFFF"), Some(Lit::Int(-1)));
        assert_eq!(parse_int("1_000L"), Some(Lit::Long(1000)));
        assert_eq!(parse_int("017"), Some(Lit::Int(15)));
        assert_eq!(parse_int("0b101"), Some(Lit::Int(5)));
        assert_eq!(parse_int("2147483648"), Some(Lit::Int(i32::MIN)));
        assert_eq!(parse_int("2147483649"), None);
    }

    #[test]
    fn escapes() {
        assert_eq!(unescape(r"a\n\t\\\'A\101"), "a\n\t\\'AA");
    }

    #[test]
    fn syntax_damage_is_reported() {
        let mut d = Vec::new();
        lower("T.java", "class T { void f() { int x = ; } }", 0, &mut d);
        assert!(!d.is_empty());
        assert!(d[0].message.contains("expected"), "{d:?}");
    }
}
