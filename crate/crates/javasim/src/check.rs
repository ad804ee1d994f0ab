//! Static checks: name resolution, operand types, assignability, definite
//! assignment, reachability and missing returns. Messages follow javac.

use std::collections::HashSet;

use crate::ast::*;
use crate::builtins;
use crate::program::*;
use crate::Diagnostic;

pub fn check(prog: &Program) -> Vec<Diagnostic> {
    let mut ck = Checker {
        prog,
        diags: Vec::new(),
        path: String::new(),
        unit: 0,
        class: String::new(),
        is_static: false,
        ret: Ty::Void,
        method_desc: String::new(),
        locals: Vec::new(),
        scopes: Vec::new(),
        da: HashSet::new(),
        dead: false,
        jumps: Vec::new(),
    };
    for info in &prog.classes {
        ck.class_decl(info);
    }
    ck.diags
}

struct Local {
    name: String,
    ty: Ty,
}

struct JumpFrame {
    label: Option<String>,
    is_loop: bool,
    broken: bool,
}

enum ETy {
    Val(Ty),
    Type(String),
    Pkg(String),
}

struct Checker<'p> {
    prog: &'p Program,
    diags: Vec<Diagnostic>,
    path: String,
    unit: usize,
    class: String,
    is_static: bool,
    ret: Ty,
    method_desc: String,
    locals: Vec<Local>,
    scopes: Vec<usize>,
    /// Definitely assigned locals, by index.
    da: HashSet<usize>,
    /// Current point is unreachable.
    dead: bool,
    jumps: Vec<JumpFrame>,
}

fn is_true_lit(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Lit(Lit::Bool(true)))
}

impl<'p> Checker<'p> {
    fn err(&mut self, line: Line, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(&self.path, line, msg.into()));
    }

    fn resolve(&mut self, line: Line, t: &TypeRef) -> Ty {
        match self.prog.resolve_type(self.unit, Some(&self.class), t) {
            Ok(ty) => ty,
            Err(name) => {
                self.err(line, format!("cannot find symbol\n  symbol:   class {name}"));
                Ty::Unknown
            }
        }
    }

    fn annotations(&mut self, line: Line, anns: &[Annotation]) {
        for a in anns {
            if self
                .prog
                .resolve_class(self.unit, Some(&self.class), &a.name)
                .is_none_or(|f| !self.prog.exists(&f))
            {
                self.err(line, format!("cannot find symbol\n  symbol: class {}", a.name));
            }
            for (_, t) in &a.class_values {
                self.resolve(line, t);
            }
        }
    }

    fn class_decl(&mut self, info: &ClassInfo) {
        let d = &info.decl;
        self.path = self.prog.units[d.unit].path.clone();
        self.unit = d.unit;
        self.class = d.fqn.clone();
        if let Some(s) = &d.superclass {
            match self.prog.resolve_class(d.unit, Some(&d.fqn), s) {
                Some(f) if self.prog.exists(&f) => {
                    if self.prog.class(&f).is_some_and(|c| c.decl.is_interface) || f == STRING {
                        self.err(d.line, format!("cannot inherit from {s}"));
                    }
                }
                _ => self.err(d.line, format!("cannot find symbol\n  symbol: class {s}")),
            }
        }
        for i in &d.interfaces {
            if self.prog.resolve_class(d.unit, Some(&d.fqn), i).is_none() {
                self.err(d.line, format!("cannot find symbol\n  symbol: class {i}"));
            }
        }
        for f in &d.fields {
            let ty = self.resolve(f.line, &f.ty);
            if let Some(init) = &f.init {
                self.enter(f.is_static, Ty::Void, format!("field {}", f.name));
                self.init_value(init, &ty);
            }
        }
        for b in &d.static_init {
            self.enter(true, Ty::Void, "static initializer".into());
            self.block(b);
        }
        for b in &d.instance_init {
            self.enter(false, Ty::Void, "instance initializer".into());
            self.block(b);
        }
        let mut seen: Vec<(String, Vec<TypeRef>)> = Vec::new();
        for m in &d.methods {
            self.annotations(m.line, &m.annotations);
            let sig = (m.name.clone(), m.params.iter().map(|p| p.ty.clone()).collect::<Vec<_>>());
            if seen.contains(&sig) {
                self.err(m.line, format!("method {} is already defined in class {}", m.name, d.name));
            }
            seen.push(sig);
            let ret = self.resolve(m.line, &m.ret);
            self.enter(m.is_static, ret.clone(), format!("method {}", m.name));
            self.params(m.line, &m.params);
            if let Some(body) = &m.body {
                let completes = self.block(body);
                if completes && ret != Ty::Void && ret != Ty::Unknown {
                    self.err(m.line, "missing return statement");
                }
            }
        }
        if d.ctors.is_empty() && !d.is_interface {
            self.implicit_super(d.line, &[]);
        }
        for c in &d.ctors {
            self.enter(false, Ty::Void, format!("constructor {}", simple_name(&d.name)));
            self.params(c.line, &c.params);
            match &c.explicit {
                Some(call) if call.is_super => {
                    let tys: Vec<Ty> = call.args.iter().map(|a| self.value(a)).collect();
                    self.implicit_super(call.line, &tys);
                }
                Some(call) => {
                    let tys: Vec<Ty> = call.args.iter().map(|a| self.value(a)).collect();
                    if !self.ctor_applicable(&d.fqn, &tys) {
                        self.err(call.line, format!("no suitable constructor found for {}", d.name));
                    }
                }
                None => self.implicit_super(c.line, &[]),
            }
            self.block(&c.body);
        }
    }

    fn implicit_super(&mut self, line: Line, args: &[Ty]) {
        let Some(sup) = self.prog.superclass_of(&self.class) else { return };
        if !self.ctor_applicable(&sup, args) {
            self.err(
                line,
                format!("constructor {} in class {} cannot be applied to given types", simple_name(&sup), simple_name(&sup)),
            );
        }
    }

    fn enter(&mut self, is_static: bool, ret: Ty, desc: String) {
        self.is_static = is_static;
        self.ret = ret;
        self.method_desc = desc;
        self.locals.clear();
        self.scopes.clear();
        self.da.clear();
        self.dead = false;
        self.jumps.clear();
    }

    fn params(&mut self, line: Line, params: &[Param]) {
        for p in params {
            let ty = self.resolve(line, &p.ty);
            let idx = self.declare(line, &p.name, ty);
            self.da.insert(idx);
        }
    }

    fn declare(&mut self, line: Line, name: &str, ty: Ty) -> usize {
        if self.locals.iter().any(|l| l.name == name) {
            let desc = self.method_desc.clone();
            self.err(line, format!("variable {name} is already defined in {desc}"));
        }
        self.locals.push(Local {
            name: name.to_string(),
            ty,
        });
        self.locals.len() - 1
    }

    fn push_scope(&mut self) {
        self.scopes.push(self.locals.len());
    }

    fn pop_scope(&mut self) {
        let n = self.scopes.pop().unwrap_or(0);
        self.locals.truncate(n);
        self.da.retain(|&i| i < n);
    }

    fn ctor_applicable(&self, fqn: &str, args: &[Ty]) -> bool {
        if let Some(info) = self.prog.class(fqn) {
            if info.decl.ctors.is_empty() {
                return args.is_empty();
            }
            let cands: Vec<(Vec<Ty>, ())> = info
                .decl
                .ctors
                .iter()
                .map(|c| (self.prog.param_types(info, &c.params), ()))
                .collect();
            return self.prog.select(&cands, args).is_some();
        }
        builtins::ctor_applicable(self.prog, fqn, args)
    }

    // ---- statements ----

    /// Returns whether the block can complete normally.
    fn block(&mut self, b: &Block) -> bool {
        self.push_scope();
        let mut completes = true;
        let mut reported = false;
        for s in &b.stmts {
            if !completes && !reported {
                self.err(s.line, "unreachable statement");
                reported = true;
            }
            completes = self.stmt(s) && completes;
        }
        self.pop_scope();
        completes
    }

    fn sub_stmt(&mut self, s: &Stmt) -> bool {
        self.push_scope();
        let c = self.stmt(s);
        self.pop_scope();
        c
    }

    fn cond(&mut self, e: &Expr) {
        let t = self.value(e);
        if !t.is_boolean() {
            self.err(e.line, format!("incompatible types: {} cannot be converted to boolean", t.display()));
        }
    }

    fn dead_end(&mut self) -> bool {
        self.dead = true;
        false
    }

    fn stmt(&mut self, s: &Stmt) -> bool {
        let l = s.line;
        match &s.kind {
            StmtKind::Empty => true,
            StmtKind::Local(decls) => {
                for d in decls {
                    let declared = self.resolve(l, &d.ty);
                    let ty = match (&d.ty, &d.init) {
                        (TypeRef::Infer, Some(init)) => self.value(init),
                        (TypeRef::Infer, None) => {
                            self.err(l, "cannot infer type for local variable");
                            Ty::Unknown
                        }
                        (_, Some(init)) => {
                            self.init_value(init, &declared);
                            declared
                        }
                        _ => declared,
                    };
                    let idx = self.declare(l, &d.name, ty);
                    if d.init.is_some() {
                        self.da.insert(idx);
                    }
                }
                true
            }
            StmtKind::Expr(e) => {
                if !matches!(
                    e.kind,
                    ExprKind::Assign { .. } | ExprKind::IncDec { .. } | ExprKind::Call { .. } | ExprKind::New { .. }
                ) {
                    self.err(l, "not a statement");
                }
                self.expr(e);
                true
            }
            StmtKind::If(c, then, alt) => {
                self.cond(c);
                let before = self.da.clone();
                let dead_before = self.dead;
                let a = self.sub_stmt(then);
                let after_then = std::mem::replace(&mut self.da, before);
                self.dead = dead_before;
                match alt {
                    Some(alt) => {
                        let b = self.sub_stmt(alt);
                        self.da = merge(after_then, a, std::mem::take(&mut self.da), b);
                        self.dead = dead_before || (!a && !b);
                        a || b
                    }
                    None => true,
                }
            }
            StmtKind::While(c, body) => {
                self.cond(c);
                let before = self.da.clone();
                self.loop_body(None, body);
                self.da = before;
                let infinite = is_true_lit(c);
                let broken = self.jumps.pop().is_some_and(|f| f.broken);
                let completes = !infinite || broken;
                self.dead = !completes;
                completes
            }
            StmtKind::DoWhile(body, c) => {
                self.loop_body(None, body);
                self.cond(c);
                let broken = self.jumps.pop().is_some_and(|f| f.broken);
                let completes = !is_true_lit(c) || broken;
                self.dead = !completes;
                completes
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.push_scope();
                for i in init {
                    self.stmt(i);
                }
                if let Some(c) = cond {
                    self.cond(c);
                }
                let before = self.da.clone();
                self.loop_body(None, body);
                for u in update {
                    self.expr(u);
                }
                self.da = before;
                let infinite = cond.as_ref().is_none_or(is_true_lit);
                let broken = self.jumps.pop().is_some_and(|f| f.broken);
                self.pop_scope();
                let completes = !infinite || broken;
                self.dead = !completes;
                completes
            }
            StmtKind::ForEach { ty, name, iter, body } => {
                let it = self.value(iter);
                let declared = self.resolve(l, ty);
                let elem = match it {
                    Ty::Array(e) => *e,
                    Ty::Unknown => Ty::Unknown,
                    other => {
                        self.err(l, format!("for-each not applicable to expression type {}", other.display()));
                        Ty::Unknown
                    }
                };
                let var_ty = if *ty == TypeRef::Infer { elem.clone() } else { declared };
                if !self.prog.is_assignable(&elem, &var_ty) {
                    self.err(l, format!("incompatible types: {} cannot be converted to {}", elem.display(), var_ty.display()));
                }
                self.push_scope();
                let idx = self.declare(l, name, var_ty);
                self.da.insert(idx);
                let before = self.da.clone();
                self.loop_body(None, body);
                self.da = before;
                self.jumps.pop();
                self.pop_scope();
                self.dead = false;
                true
            }
            StmtKind::Return(v) => {
                let ret = self.ret.clone();
                match v {
                    Some(e) => {
                        if ret == Ty::Void {
                            self.err(l, "incompatible types: unexpected return value");
                            self.value(e);
                        } else {
                            self.init_value(e, &ret);
                        }
                    }
                    None if ret != Ty::Void && ret != Ty::Unknown => self.err(l, "missing return value"),
                    None => {}
                }
                self.dead_end()
            }
            StmtKind::Break(label) => {
                let frame = match label {
                    Some(lb) => self.jumps.iter_mut().rev().find(|f| f.label.as_deref() == Some(lb.as_str())),
                    None => self.jumps.iter_mut().rev().find(|f| f.is_loop),
                };
                match frame {
                    Some(f) => f.broken = true,
                    None => self.err(l, "break outside switch or loop"),
                }
                self.dead_end()
            }
            StmtKind::Continue(label) => {
                let ok = match label {
                    Some(lb) => self.jumps.iter().any(|f| f.label.as_deref() == Some(lb.as_str())),
                    None => self.jumps.iter().any(|f| f.is_loop),
                };
                if !ok {
                    self.err(l, "continue outside of loop");
                }
                self.dead_end()
            }
            StmtKind::Throw(e) => {
                let t = self.value(e);
                match &t {
                    Ty::Class(c) if self.prog.is_throwable(c) => {}
                    Ty::Unknown | Ty::Null => {}
                    other => self.err(l, format!("incompatible types: {} cannot be converted to Throwable", other.display())),
                }
                self.dead_end()
            }
            StmtKind::Block(b) => self.block(b),
            StmtKind::Labeled(label, body) => {
                self.jumps.push(JumpFrame {
                    label: Some(label.clone()),
                    is_loop: false,
                    broken: false,
                });
                let c = self.sub_stmt(body);
                let broken = self.jumps.pop().is_some_and(|f| f.broken);
                let completes = c || broken;
                self.dead = !completes;
                completes
            }
            StmtKind::Try { body, catches, finally } => {
                let before = self.da.clone();
                let mut completes = self.block(body);
                let mut da = self.da.clone();
                let mut any = completes;
                for c in catches {
                    self.da = before.clone();
                    self.dead = false;
                    self.push_scope();
                    let mut ty = Ty::Unknown;
                    for t in &c.types {
                        ty = self.resolve(l, &TypeRef::Named(t.clone()));
                        if let Ty::Class(f) = &ty {
                            if !self.prog.is_throwable(f) {
                                self.err(l, format!("incompatible types: {t} cannot be converted to Throwable"));
                            }
                        }
                    }
                    if c.types.len() > 1 {
                        ty = Ty::Class(THROWABLE.into());
                    }
                    let idx = self.declare(l, &c.name, ty);
                    self.da.insert(idx);
                    let cc = self.block(&c.body);
                    self.pop_scope();
                    da = merge(da, any, self.da.clone(), cc);
                    any = any || cc;
                }
                completes = any;
                if let Some(f) = finally {
                    self.da = before;
                    self.dead = false;
                    let fc = self.block(f);
                    da.extend(self.da.iter().copied());
                    completes = completes && fc;
                }
                self.da = da;
                self.dead = !completes;
                completes
            }
            StmtKind::Assert(c, msg) => {
                self.cond(c);
                if let Some(m) = msg {
                    self.value(m);
                }
                true
            }
        }
    }

    fn loop_body(&mut self, label: Option<String>, body: &Stmt) {
        self.jumps.push(JumpFrame {
            label,
            is_loop: true,
            broken: false,
        });
        let dead = self.dead;
        self.sub_stmt(body);
        self.dead = dead;
    }

    // ---- expressions ----

    fn init_value(&mut self, e: &Expr, target: &Ty) {
        if let ExprKind::ArrayInit(items) = &e.kind {
            match target {
                Ty::Array(elem) => {
                    for i in items {
                        self.init_value(i, elem);
                    }
                }
                Ty::Unknown => {}
                other => self.err(e.line, format!("illegal initializer for {}", other.display())),
            }
            return;
        }
        let t = self.value(e);
        if !self.prog.is_assignable(&t, target) && !constant_fits(e, target) {
            let msg = match (&t, target) {
                (Ty::Prim(_), Ty::Prim(_)) if t.is_numeric() && target.is_numeric() => format!(
                    "incompatible types: possible lossy conversion from {} to {}",
                    t.display(),
                    target.display()
                ),
                _ => format!("incompatible types: {} cannot be converted to {}", t.display(), target.display()),
            };
            self.err(e.line, msg);
        }
    }

    fn value(&mut self, e: &Expr) -> Ty {
        match self.expr(e) {
            ETy::Val(t) => t,
            ETy::Type(c) => {
                self.err(e.line, format!("cannot find symbol\n  symbol: variable {}", simple_name(&c)));
                Ty::Unknown
            }
            ETy::Pkg(p) => {
                self.err(e.line, format!("cannot find symbol\n  symbol: variable {p}"));
                Ty::Unknown
            }
        }
    }

    fn local(&self, name: &str) -> Option<usize> {
        self.locals.iter().rposition(|l| l.name == name)
    }

    fn field_of(&self, class: &str, name: &str) -> Option<(Ty, bool)> {
        if let Some((owner, f)) = self.prog.find_field(class, name) {
            let ty = self
                .prog
                .resolve_type(owner.decl.unit, Some(&owner.decl.fqn), &f.ty)
                .unwrap_or(Ty::Unknown);
            return Some((ty, f.is_static || owner.decl.is_interface));
        }
        self.prog
            .chain(class)
            .iter()
            .find_map(|c| builtins::static_field(c, name))
            .map(|t| (t, true))
    }

    fn name(&mut self, line: Line, n: &str) -> ETy {
        if let Some(i) = self.local(n) {
            if !self.da.contains(&i) && !self.dead {
                self.err(line, format!("variable {n} might not have been initialized"));
                self.da.insert(i);
            }
            return ETy::Val(self.locals[i].ty.clone());
        }
        // Own class chain, then enclosing classes.
        let mut scope = Some(self.class.clone());
        let mut first = true;
        while let Some(sc) = scope {
            if self.prog.class(&sc).is_none() {
                break;
            }
            if let Some((ty, is_static)) = self.field_of(&sc, n) {
                if !is_static && (self.is_static || !first) {
                    self.err(line, format!("non-static variable {n} cannot be referenced from a static context"));
                }
                return ETy::Val(ty);
            }
            first = false;
            scope = sc.rsplit_once('.').map(|(a, _)| a.to_string());
        }
        match self.prog.resolve_class(self.unit, Some(&self.class), n) {
            Some(c) if self.prog.exists(&c) => ETy::Type(c),
            _ => ETy::Pkg(n.to_string()),
        }
    }

    fn expr(&mut self, e: &Expr) -> ETy {
        let l = e.line;
        let t = match &e.kind {
            ExprKind::Lit(lit) => match lit {
                Lit::Int(_) => Ty::Prim(Prim::Int),
                Lit::Long(_) => Ty::Prim(Prim::Long),
                Lit::Double(_) => Ty::Prim(Prim::Double),
                Lit::Float(_) => Ty::Prim(Prim::Float),
                Lit::Bool(_) => Ty::Prim(Prim::Boolean),
                Lit::Char(_) => Ty::Prim(Prim::Char),
                Lit::Str(_) => Ty::string(),
                Lit::Null => Ty::Null,
            },
            ExprKind::Name(n) => return self.name(l, n),
            ExprKind::This => {
                if self.is_static {
                    self.err(l, "non-static variable this cannot be referenced from a static context");
                }
                Ty::Class(self.class.clone())
            }
            ExprKind::SuperField(f) => {
                let sup = self.prog.superclass_of(&self.class).unwrap_or_else(|| OBJECT.into());
                match self.field_of(&sup, f) {
                    Some((t, _)) => t,
                    None => {
                        self.err(l, format!("cannot find symbol\n  symbol: variable {f}"));
                        Ty::Unknown
                    }
                }
            }
            ExprKind::Field(obj, f) => return self.field(l, obj, f),
            ExprKind::Call {
                target,
                is_super,
                name,
                args,
            } => self.call(l, target.as_deref(), *is_super, name, args),
            ExprKind::New { class, args } => {
                let tys: Vec<Ty> = args.iter().map(|a| self.value(a)).collect();
                match self.prog.resolve_class(self.unit, Some(&self.class), class) {
                    Some(fqn) if self.prog.exists(&fqn) => {
                        let abstract_ = self
                            .prog
                            .class(&fqn)
                            .is_some_and(|c| c.decl.is_interface || c.decl.is_abstract);
                        if abstract_ {
                            self.err(l, format!("{class} is abstract; cannot be instantiated"));
                        } else if !self.ctor_applicable(&fqn, &tys) {
                            self.err(l, format!("no suitable constructor found for {class}"));
                        }
                        Ty::Class(fqn)
                    }
                    _ => {
                        self.err(l, format!("cannot find symbol\n  symbol: class {class}"));
                        Ty::Unknown
                    }
                }
            }
            ExprKind::NewArray {
                elem,
                dims,
                extra_dims,
                init,
            } => {
                let base = self.resolve(l, elem);
                for d in dims {
                    let t = self.value(d);
                    if !(t.is_integral() && self.prog.is_assignable(&t, &Ty::Prim(Prim::Int))) {
                        self.err(d.line, format!("incompatible types: {} cannot be converted to int", t.display()));
                    }
                }
                let mut ty = base;
                for _ in 0..dims.len() + extra_dims {
                    ty = Ty::Array(Box::new(ty));
                }
                if let Some(items) = init {
                    if let Ty::Array(el) = &ty {
                        let el = (**el).clone();
                        for i in items {
                            self.init_value(i, &el);
                        }
                    }
                }
                ty
            }
            ExprKind::ArrayInit(_) => {
                self.err(l, "illegal start of expression");
                Ty::Unknown
            }
            ExprKind::Index(a, i) => {
                let at = self.value(a);
                let it = self.value(i);
                if !(it.is_integral() && self.prog.is_assignable(&it, &Ty::Prim(Prim::Int))) {
                    self.err(l, format!("incompatible types: {} cannot be converted to int", it.display()));
                }
                match at {
                    Ty::Array(el) => *el,
                    Ty::Unknown => Ty::Unknown,
                    other => {
                        self.err(l, format!("array required, but {} found", other.display()));
                        Ty::Unknown
                    }
                }
            }
            ExprKind::Unary(op, x) => {
                let t = self.value(x);
                match op {
                    UnOp::Neg | UnOp::Plus => match t {
                        Ty::Prim(p) if p != Prim::Boolean => Ty::Prim(unary_promote(p)),
                        Ty::Unknown => Ty::Unknown,
                        _ => self.bad_unary(l, op, &t),
                    },
                    UnOp::BitNot => match t {
                        Ty::Prim(p) if t.is_integral() => Ty::Prim(unary_promote(p)),
                        Ty::Unknown => Ty::Unknown,
                        _ => self.bad_unary(l, op, &t),
                    },
                    UnOp::Not => {
                        if !t.is_boolean() {
                            self.bad_unary(l, op, &t);
                        }
                        Ty::Prim(Prim::Boolean)
                    }
                }
            }
            ExprKind::Binary(op, a, b) => {
                let ta = self.value(a);
                let da = self.da.clone();
                let tb = self.value(b);
                if matches!(op, BinOp::And | BinOp::Or) {
                    self.da = da;
                }
                self.binary(l, *op, &ta, &tb)
            }
            ExprKind::Assign { op, target, value } => {
                let tt = self.target(target);
                match op {
                    None => self.init_value(value, &tt),
                    Some(op) => {
                        let tv = self.value(value);
                        if !(tt.is_string() && *op == BinOp::Add) {
                            let r = self.binary(l, *op, &tt, &tv);
                            if matches!(r, Ty::Prim(_)) != matches!(tt, Ty::Prim(_)) && tt != Ty::Unknown && r != Ty::Unknown {
                                self.err(l, format!("incompatible types: {} cannot be converted to {}", r.display(), tt.display()));
                            }
                        }
                    }
                }
                if let ExprKind::Name(n) = &target.kind {
                    if let Some(i) = self.local(n) {
                        self.da.insert(i);
                    }
                }
                tt
            }
            ExprKind::IncDec { target, inc, .. } => {
                let t = self.target(target);
                if !t.is_numeric() {
                    let sym = if *inc { "++" } else { "--" };
                    self.err(l, format!("bad operand type {} for unary operator '{sym}'", t.display()));
                }
                t
            }
            ExprKind::Cond(c, a, b) => {
                self.cond(c);
                let ta = self.value(a);
                let tb = self.value(b);
                match (&ta, &tb) {
                    (Ty::Prim(x), Ty::Prim(y)) if x == y => ta,
                    (Ty::Prim(x), Ty::Prim(y)) if ta.is_numeric() && tb.is_numeric() => {
                        let _ = (x, y);
                        Ty::Prim(promote(*x, *y))
                    }
                    (Ty::Null, t) | (t, Ty::Null) => t.clone(),
                    _ if ta == tb => ta,
                    _ if self.prog.is_assignable(&ta, &tb) => tb,
                    _ if self.prog.is_assignable(&tb, &ta) => ta,
                    _ => Ty::object(),
                }
            }
            ExprKind::Cast(t, x) => {
                let target = self.resolve(l, t);
                let src = self.value(x);
                let ok = match (&src, &target) {
                    (Ty::Unknown, _) | (_, Ty::Unknown) => true,
                    (Ty::Prim(a), Ty::Prim(b)) => (*a == Prim::Boolean) == (*b == Prim::Boolean),
                    // Unboxing casts; wrapper types are erased to primitives.
                    (Ty::Class(c), Ty::Prim(_)) => matches!(c.as_str(), OBJECT | "java.lang.Number" | "java.lang.Comparable" | "java.io.Serializable"),
                    (Ty::Prim(_), _) | (_, Ty::Prim(_)) => false,
                    (Ty::Null, _) => true,
                    (a, b) => self.prog.is_assignable(a, b) || self.prog.is_assignable(b, a),
                };
                if !ok {
                    self.err(l, format!("incompatible types: {} cannot be converted to {}", src.display(), target.display()));
                }
                target
            }
            ExprKind::InstanceOf(x, t) => {
                let src = self.value(x);
                let target = self.resolve(l, t);
                if matches!(src, Ty::Prim(_)) {
                    self.err(l, format!("unexpected type\n  required: reference\n  found:    {}", src.display()));
                }
                let _ = target;
                Ty::Prim(Prim::Boolean)
            }
            ExprKind::ClassLit(t) => {
                self.resolve(l, t);
                Ty::Class("java.lang.Class".into())
            }
        };
        ETy::Val(t)
    }

    fn bad_unary(&mut self, l: Line, op: &UnOp, t: &Ty) -> Ty {
        let sym = match op {
            UnOp::Neg => "-",
            UnOp::Plus => "+",
            UnOp::Not => "!",
            UnOp::BitNot => "~",
        };
        self.err(l, format!("bad operand type {} for unary operator '{sym}'", t.display()));
        Ty::Unknown
    }

    fn binary(&mut self, l: Line, op: BinOp, a: &Ty, b: &Ty) -> Ty {
        use BinOp::*;
        if *a == Ty::Unknown || *b == Ty::Unknown {
            return match op {
                Lt | Le | Gt | Ge | Eq | Ne | And | Or => Ty::Prim(Prim::Boolean),
                Add if a.is_string() || b.is_string() => Ty::string(),
                _ => Ty::Unknown,
            };
        }
        let num = |t: &Ty| match t {
            Ty::Prim(p) if *p != Prim::Boolean => Some(*p),
            _ => None,
        };
        let result = match op {
            Add if a.is_string() || b.is_string() => {
                if *a == Ty::Void || *b == Ty::Void {
                    None
                } else {
                    Some(Ty::string())
                }
            }
            Add | Sub | Mul | Div | Rem => match (num(a), num(b)) {
                (Some(x), Some(y)) => Some(Ty::Prim(promote(x, y))),
                _ => None,
            },
            Shl | Shr | UShr => match (num(a), num(b)) {
                (Some(x), Some(_)) if a.is_integral() && b.is_integral() => Some(Ty::Prim(unary_promote(x))),
                _ => None,
            },
            Lt | Le | Gt | Ge => (num(a).is_some() && num(b).is_some()).then_some(Ty::Prim(Prim::Boolean)),
            Eq | Ne => {
                let ok = (num(a).is_some() && num(b).is_some())
                    || (a.is_boolean() && b.is_boolean())
                    || (a.is_reference()
                        && b.is_reference()
                        && (self.prog.is_assignable(a, b) || self.prog.is_assignable(b, a)));
                ok.then_some(Ty::Prim(Prim::Boolean))
            }
            BitAnd | BitOr | BitXor => {
                if a.is_boolean() && b.is_boolean() {
                    Some(Ty::Prim(Prim::Boolean))
                } else if a.is_integral() && b.is_integral() {
                    Some(Ty::Prim(promote(num(a).unwrap_or(Prim::Int), num(b).unwrap_or(Prim::Int))))
                } else {
                    None
                }
            }
            And | Or => (a.is_boolean() && b.is_boolean()).then_some(Ty::Prim(Prim::Boolean)),
        };
        match result {
            Some(t) => t,
            None => {
                if matches!(op, Eq | Ne) {
                    self.err(l, format!("incomparable types: {} and {}", a.display(), b.display()));
                } else {
                    self.err(
                        l,
                        format!(
                            "bad operand types for binary operator '{}'\n  first type:  {}\n  second type: {}",
                            op.symbol(),
                            a.display(),
                            b.display()
                        ),
                    );
                }
                Ty::Unknown
            }
        }
    }

    /// Type of an assignable location.
    fn target(&mut self, e: &Expr) -> Ty {
        match &e.kind {
            ExprKind::Name(n) => {
                if let Some(i) = self.local(n) {
                    return self.locals[i].ty.clone();
                }
                self.value(e)
            }
            ExprKind::Field(obj, f) => {
                let o = self.expr(obj);
                if f == "length" && matches!(o, ETy::Val(Ty::Array(_))) {
                    self.err(e.line, "cannot assign a value to final variable length");
                }
                match self.field_on(e.line, o, f) {
                    ETy::Val(t) => t,
                    _ => {
                        self.err(e.line, format!("cannot find symbol\n  symbol: variable {f}"));
                        Ty::Unknown
                    }
                }
            }
            ExprKind::Index(..) | ExprKind::SuperField(_) => self.value(e),
            _ => {
                self.value(e);
                self.err(e.line, "unexpected type\n  required: variable\n  found:    value");
                Ty::Unknown
            }
        }
    }

    fn field(&mut self, l: Line, obj: &Expr, f: &str) -> ETy {
        let o = self.expr(obj);
        self.field_on(l, o, f)
    }

    fn field_on(&mut self, l: Line, o: ETy, f: &str) -> ETy {
        match o {
            ETy::Pkg(p) => {
                let full = format!("{p}.{f}");
                if self.prog.exists(&full) {
                    ETy::Type(full)
                } else {
                    ETy::Pkg(full)
                }
            }
            ETy::Type(c) => {
                let nested = format!("{c}.{f}");
                if self.prog.class(&nested).is_some() {
                    return ETy::Type(nested);
                }
                match self.field_of(&c, f) {
                    Some((t, true)) => ETy::Val(t),
                    Some((_, false)) => {
                        self.err(l, format!("non-static variable {f} cannot be referenced from a static context"));
                        ETy::Val(Ty::Unknown)
                    }
                    None => {
                        self.err(l, format!("cannot find symbol\n  symbol:   variable {f}\n  location: class {}", simple_name(&c)));
                        ETy::Val(Ty::Unknown)
                    }
                }
            }
            ETy::Val(t) => ETy::Val(match &t {
                Ty::Array(_) if f == "length" => Ty::Prim(Prim::Int),
                Ty::Class(c) => match self.field_of(c, f) {
                    Some((t, _)) => t,
                    None => {
                        self.err(l, format!("cannot find symbol\n  symbol:   variable {f}\n  location: class {}", simple_name(c)));
                        Ty::Unknown
                    }
                },
                Ty::Unknown => Ty::Unknown,
                Ty::Prim(p) => {
                    self.err(l, format!("{} cannot be dereferenced", prim_name(*p)));
                    Ty::Unknown
                }
                other => {
                    self.err(l, format!("cannot find symbol\n  symbol: variable {f}\n  location: {}", other.display()));
                    Ty::Unknown
                }
            }),
        }
    }

    fn user_method(&mut self, l: Line, class: &str, name: &str, args: &[Ty], static_only: bool) -> Option<Ty> {
        let cands = self.prog.methods_named(class, name);
        if cands.is_empty() {
            return None;
        }
        let typed: Vec<(Vec<Ty>, (Ty, bool))> = cands
            .iter()
            .map(|(owner, m)| {
                let ret = self
                    .prog
                    .resolve_type(owner.decl.unit, Some(&owner.decl.fqn), &m.ret)
                    .unwrap_or(Ty::Unknown);
                (self.prog.param_types(owner, &m.params), (ret, m.is_static))
            })
            .collect();
        match self.prog.select(&typed, args) {
            Some((ret, is_static)) => {
                if static_only && !is_static {
                    self.err(l, format!("non-static method {name}() cannot be referenced from a static context"));
                }
                Some(ret.clone())
            }
            None => {
                let found: Vec<String> = args.iter().map(Ty::display).collect();
                self.err(
                    l,
                    format!(
                        "method {name} in class {} cannot be applied to given types\n  found: {}",
                        simple_name(class),
                        found.join(",")
                    ),
                );
                Some(Ty::Unknown)
            }
        }
    }

    fn call(&mut self, l: Line, target: Option<&Expr>, is_super: bool, name: &str, args: &[Expr]) -> Ty {
        let recv = target.map(|t| self.expr(t));
        let tys: Vec<Ty> = args.iter().map(|a| self.value(a)).collect();
        match recv {
            None if is_super => {
                let sup = self.prog.superclass_of(&self.class).unwrap_or_else(|| OBJECT.into());
                if let Some(t) = self.user_method(l, &sup, name, &tys, false) {
                    return t;
                }
                self.builtin_instance(l, &sup, name, &tys)
            }
            None => {
                // Own and enclosing classes, then assertion imports.
                let mut scope = Some(self.class.clone());
                let mut first = true;
                while let Some(sc) = scope {
                    if self.prog.class(&sc).is_none() {
                        break;
                    }
                    if !self.prog.methods_named(&sc, name).is_empty() {
                        let static_only = self.is_static || !first;
                        return self.user_method(l, &sc, name, &tys, static_only).unwrap_or(Ty::Unknown);
                    }
                    first = false;
                    scope = sc.rsplit_once('.').map(|(a, _)| a.to_string());
                }
                if let Some(flavor) = self.prog.assert_flavor(self.unit, &self.class, name) {
                    return self.assertion(l, flavor, name, &tys);
                }
                if self.prog.chain(&self.class).iter().any(|c| builtins::is_instance_method(self.prog, c, name)) {
                    return self.builtin_instance(l, &self.class.clone(), name, &tys);
                }
                self.err(l, format!("cannot find symbol\n  symbol:   method {name}"));
                Ty::Unknown
            }
            Some(ETy::Type(c)) => {
                if let Some(flavor) = self.prog.assert_flavor_of_class(&c) {
                    if ASSERT_METHODS.contains(&name) {
                        return self.assertion(l, flavor, name, &tys);
                    }
                }
                if self.prog.class(&c).is_some() {
                    return self.user_method(l, &c, name, &tys, true).unwrap_or_else(|| {
                        self.err(l, format!("cannot find symbol\n  symbol:   method {name}"));
                        Ty::Unknown
                    });
                }
                match builtins::static_method(&c, name, &tys) {
                    Some(t) => t,
                    None => {
                        self.err(
                            l,
                            format!("cannot find symbol\n  symbol:   method {name}\n  location: class {}", simple_name(&c)),
                        );
                        Ty::Unknown
                    }
                }
            }
            Some(ETy::Pkg(p)) => {
                self.err(l, format!("cannot find symbol\n  symbol: variable {p}"));
                Ty::Unknown
            }
            Some(ETy::Val(t)) => match &t {
                Ty::Unknown => Ty::Unknown,
                Ty::Prim(p) => {
                    self.err(l, format!("{} cannot be dereferenced", prim_name(*p)));
                    Ty::Unknown
                }
                Ty::Null | Ty::Void => {
                    self.err(l, format!("{} cannot be dereferenced", t.display()));
                    Ty::Unknown
                }
                Ty::Array(_) => match name {
                    "clone" if tys.is_empty() => t.clone(),
                    _ => self.builtin_instance(l, OBJECT, name, &tys),
                },
                Ty::Class(c) => {
                    if self.prog.class(c).is_some() {
                        if let Some(r) = self.user_method(l, c, name, &tys, false) {
                            return r;
                        }
                    }
                    self.builtin_instance(l, c, name, &tys)
                }
            },
        }
    }

    fn builtin_instance(&mut self, l: Line, class: &str, name: &str, args: &[Ty]) -> Ty {
        let mut chain = self.prog.chain(class);
        if !chain.iter().any(|c| c == OBJECT) {
            chain.push(OBJECT.to_string());
        }
        for c in chain {
            if let Some(t) = builtins::instance_method(self.prog, &c, name, args) {
                return t;
            }
        }
        self.err(
            l,
            format!("cannot find symbol\n  symbol:   method {name}\n  location: class {}", simple_name(class)),
        );
        Ty::Unknown
    }

    fn assertion(&mut self, l: Line, flavor: AssertFlavor, name: &str, args: &[Ty]) -> Ty {
        if !builtins::assertion_applicable(flavor, name, args) {
            let found: Vec<String> = args.iter().map(Ty::display).collect();
            self.err(l, format!("no suitable method found for {name}({})", found.join(",")));
        }
        Ty::Void
    }
}

fn merge(a: HashSet<usize>, a_completes: bool, b: HashSet<usize>, b_completes: bool) -> HashSet<usize> {
    match (a_completes, b_completes) {
        (true, true) => a.intersection(&b).copied().collect(),
        (true, false) => a,
        (false, true) => b,
        (false, false) => a.union(&b).copied().collect(),
    }
}

/// Constant narrowing of int literals to byte, short and char.
fn constant_fits(e: &Expr, target: &Ty) -> bool {
    let v = match &e.kind {
        ExprKind::Lit(Lit::Int(v)) => *v as i64,
        ExprKind::Lit(Lit::Char(c)) => *c as i64,
        ExprKind::Unary(UnOp::Neg, x) => match x.kind {
            ExprKind::Lit(Lit::Int(v)) => -(v as i64),
            _ => return false,
        },
        _ => return false,
    };
    match target {
        Ty::Prim(Prim::Byte) => (-128..=127).contains(&v),
        Ty::Prim(Prim::Short) => (-32768..=32767).contains(&v),
        Ty::Prim(Prim::Char) => (0..=65535).contains(&v),
        _ => false,
    }
}
