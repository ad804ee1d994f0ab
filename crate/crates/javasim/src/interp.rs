//! Tree-walking evaluator.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::time::Instant;

use crate::ast::*;
use crate::program::*;
use crate::value::*;
use crate::Limits;

pub(crate) enum Abrupt {
    Throw(Value),
    /// Step or wall-clock budget exhausted.
    Halt,
}

pub(crate) type R<T> = Result<T, Abrupt>;

enum Flow {
    Normal,
    Break(Option<String>),
    Continue(Option<String>),
    Return(Value),
}

pub(crate) struct Frame<'p> {
    pub class: &'p ClassInfo,
    pub this: Option<Rc<Obj>>,
    locals: Vec<(String, Value)>,
    scopes: Vec<usize>,
}

impl<'p> Frame<'p> {
    pub fn new(class: &'p ClassInfo, this: Option<Rc<Obj>>) -> Self {
        Frame {
            class,
            this,
            locals: Vec::new(),
            scopes: Vec::new(),
        }
    }
    fn push(&mut self) {
        self.scopes.push(self.locals.len());
    }
    fn pop(&mut self) {
        let n = self.scopes.pop().unwrap_or(0);
        self.locals.truncate(n);
    }
    fn local(&self, name: &str) -> Option<usize> {
        self.locals.iter().rposition(|(n, _)| n == name)
    }
}

enum Place {
    Local(usize),
    Instance(Rc<Obj>, String),
    Static(String, String),
    Elem(Rc<Arr>, usize),
}

pub(crate) enum Target {
    Val(Value),
    Class(String),
    Pkg(String),
}

pub(crate) struct Interp<'p> {
    pub prog: &'p Program,
    statics: HashMap<String, HashMap<String, Value>>,
    initialized: HashMap<String, bool>,
    interned: HashMap<String, Rc<str>>,
    steps: u64,
    limits: Limits,
    started: Instant,
    depth: usize,
    next_id: u32,
    pub hits: HashMap<usize, BTreeSet<Line>>,
    system_out: Option<Value>,
}

impl<'p> Interp<'p> {
    pub fn new(prog: &'p Program, limits: Limits) -> Self {
        Interp {
            prog,
            statics: HashMap::new(),
            initialized: HashMap::new(),
            interned: HashMap::new(),
            steps: 0,
            limits,
            started: Instant::now(),
            depth: 0,
            next_id: 0,
            hits: HashMap::new(),
            system_out: None,
        }
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(Abrupt::Halt);
        }
        if self.steps.is_multiple_of(4096) && self.started.elapsed() > self.limits.timeout {
            return Err(Abrupt::Halt);
        }
        Ok(())
    }

    fn hit(&mut self, unit: usize, line: Line) {
        self.hits.entry(unit).or_default().insert(line);
    }

    pub fn fresh_id(&mut self) -> u32 {
        self.next_id += 1;
        self.next_id
    }

    pub fn intern(&mut self, s: &str) -> Rc<str> {
        if let Some(r) = self.interned.get(s) {
            return r.clone();
        }
        let r: Rc<str> = Rc::from(s);
        self.interned.insert(s.to_string(), r.clone());
        r
    }

    pub fn str_value(&self, s: impl Into<String>) -> Value {
        let s: String = s.into();
        Value::Str(Rc::from(s))
    }

    // ---- exceptions ----

    pub fn make_throwable(&mut self, class: &str, message: Option<String>) -> Value {
        let mut fields = HashMap::new();
        fields.insert(
            "message".to_string(),
            message.map(|m| self.str_value(m)).unwrap_or(Value::Null),
        );
        fields.insert("cause".to_string(), Value::Null);
        Value::Obj(Rc::new(Obj {
            class: class.to_string(),
            fields: RefCell::new(fields),
            id: self.fresh_id(),
        }))
    }

    pub fn throw(&mut self, class: &str, message: Option<String>) -> Abrupt {
        Abrupt::Throw(self.make_throwable(class, message))
    }

    pub fn npe(&mut self, what: &str) -> Abrupt {
        self.throw(
            "java.lang.NullPointerException",
            Some(format!("Cannot {what} because value is null")),
        )
    }

    // ---- classes ----

    pub fn ensure_init(&mut self, fqn: &str) -> R<()> {
        if self.initialized.contains_key(fqn) {
            return Ok(());
        }
        let Some(info) = self.prog.class(fqn) else {
            return Ok(());
        };
        self.initialized.insert(fqn.to_string(), false);
        if let Some(sup) = &info.superclass {
            let sup = sup.clone();
            self.ensure_init(&sup)?;
        }
        let mut store = HashMap::new();
        for f in info.decl.fields.iter().filter(|f| f.is_static || info.decl.is_interface) {
            let ty = self.field_ty(info, f);
            store.insert(f.name.clone(), default_value(&ty));
        }
        self.statics.insert(fqn.to_string(), store);
        let mut frame = Frame::new(info, None);
        for f in info.decl.fields.iter().filter(|f| f.is_static || info.decl.is_interface) {
            if let Some(init) = &f.init {
                self.hit(info.decl.unit, f.line);
                let ty = self.field_ty(info, f);
                let v = self.init_value(&mut frame, init, &ty)?;
                self.statics.get_mut(fqn).and_then(|m| m.insert(f.name.clone(), v));
            }
        }
        for b in &info.decl.static_init {
            self.block(&mut frame, b)?;
        }
        self.initialized.insert(fqn.to_string(), true);
        Ok(())
    }

    fn field_ty(&self, owner: &ClassInfo, f: &FieldDecl) -> Ty {
        self.prog
            .resolve_type(owner.decl.unit, Some(&owner.decl.fqn), &f.ty)
            .unwrap_or(Ty::Unknown)
    }

    fn resolve_ty(&self, frame: &Frame, t: &TypeRef) -> Ty {
        self.prog
            .resolve_type(frame.class.decl.unit, Some(&frame.class.decl.fqn), t)
            .unwrap_or(Ty::Unknown)
    }

    pub fn coerce(&self, v: Value, ty: &Ty) -> Value {
        match ty {
            Ty::Prim(p) => convert(v, *p),
            _ => v,
        }
    }

    pub fn instantiate(&mut self, fqn: &str, args: Vec<Value>) -> R<Value> {
        if is_builtin(fqn) {
            return self.new_builtin(fqn, args);
        }
        self.ensure_init(fqn)?;
        let mut fields = HashMap::new();
        for c in self.prog.chain(fqn) {
            if let Some(info) = self.prog.class(&c) {
                for f in info.decl.fields.iter().filter(|f| !f.is_static) {
                    let ty = self.field_ty(info, f);
                    fields.entry(f.name.clone()).or_insert_with(|| default_value(&ty));
                }
            } else if is_throwable_builtin(&c) {
                fields.entry("message".into()).or_insert(Value::Null);
                fields.entry("cause".into()).or_insert(Value::Null);
            }
        }
        let obj = Rc::new(Obj {
            class: fqn.to_string(),
            fields: RefCell::new(fields),
            id: self.fresh_id(),
        });
        self.construct(fqn, &obj, args)?;
        Ok(Value::Obj(obj))
    }

    fn construct(&mut self, fqn: &str, obj: &Rc<Obj>, args: Vec<Value>) -> R<()> {
        let Some(info) = self.prog.class(fqn) else {
            // Library superclass: only throwables carry state.
            if is_throwable_builtin(fqn) {
                self.throwable_ctor(obj, args);
            }
            return Ok(());
        };
        self.tick()?;
        let mut frame = Frame::new(info, Some(obj.clone()));
        if info.decl.ctors.is_empty() {
            self.hit(info.decl.unit, info.decl.line);
            if let Some(sup) = info.superclass.clone() {
                self.construct(&sup, obj, Vec::new())?;
            }
            return self.instance_inits(&mut frame);
        }
        let tys: Vec<Ty> = args.iter().map(Value::runtime_ty).collect();
        let cands: Vec<(Vec<Ty>, &CtorDecl)> = info
            .decl
            .ctors
            .iter()
            .map(|c| (self.prog.param_types(info, &c.params), c))
            .collect();
        let Some(ctor) = self.prog.select(&cands, &tys).copied() else {
            return Err(self.throw("java.lang.IllegalStateException", Some("no applicable constructor".into())));
        };
        self.enter()?;
        self.hit(info.decl.unit, ctor.line);
        let ptys = self.prog.param_types(info, &ctor.params);
        for ((p, v), t) in ctor.params.iter().zip(args).zip(&ptys) {
            let v = self.coerce(v, t);
            frame.locals.push((p.name.clone(), v));
        }
        let result = (|| {
            match &ctor.explicit {
                Some(call) => {
                    let mut vals = Vec::new();
                    for a in &call.args {
                        vals.push(self.eval(&mut frame, a)?);
                    }
                    self.hit(info.decl.unit, call.line);
                    if call.is_super {
                        if let Some(sup) = info.superclass.clone() {
                            self.construct(&sup, obj, vals)?;
                        }
                        self.instance_inits(&mut frame)?;
                    } else {
                        self.construct(fqn, obj, vals)?;
                    }
                }
                None => {
                    if let Some(sup) = info.superclass.clone() {
                        self.construct(&sup, obj, Vec::new())?;
                    }
                    self.instance_inits(&mut frame)?;
                }
            }
            match self.block(&mut frame, &ctor.body)? {
                Flow::Return(_) | Flow::Normal => Ok(()),
                _ => Ok(()),
            }
        })();
        self.depth -= 1;
        result
    }

    fn instance_inits(&mut self, frame: &mut Frame<'p>) -> R<()> {
        let info = frame.class;
        let Some(obj) = frame.this.clone() else { return Ok(()) };
        for f in info.decl.fields.iter().filter(|f| !f.is_static) {
            if let Some(init) = &f.init {
                self.hit(info.decl.unit, f.line);
                let ty = self.field_ty(info, f);
                let v = self.init_value(frame, init, &ty)?;
                obj.fields.borrow_mut().insert(f.name.clone(), v);
            }
        }
        for b in &info.decl.instance_init {
            self.block(frame, b)?;
        }
        Ok(())
    }

    fn throwable_ctor(&mut self, obj: &Rc<Obj>, args: Vec<Value>) {
        let mut f = obj.fields.borrow_mut();
        match args.as_slice() {
            [] => {}
            [Value::Obj(cause)] if self.prog.is_throwable(&cause.class) => {
                let text = self.throwable_string(cause);
                f.insert("message".into(), self.str_value(text));
                f.insert("cause".into(), Value::Obj(cause.clone()));
            }
            [msg] => {
                let m = match msg {
                    Value::Str(_) | Value::Null => msg.clone(),
                    other => self.str_value(self.plain_string(other)),
                };
                f.insert("message".into(), m);
            }
            [msg, cause, ..] => {
                f.insert("message".into(), msg.clone());
                f.insert("cause".into(), cause.clone());
            }
        }
    }

    fn throwable_string(&self, o: &Obj) -> String {
        match o.fields.borrow().get("message") {
            Some(Value::Str(m)) => format!("{}: {m}", o.class),
            _ => o.class.clone(),
        }
    }

    fn enter(&mut self) -> R<()> {
        self.depth += 1;
        if self.depth > self.limits.max_depth {
            self.depth -= 1;
            return Err(self.throw("java.lang.StackOverflowError", None));
        }
        Ok(())
    }

    pub fn invoke(
        &mut self,
        owner: &'p ClassInfo,
        m: &'p MethodDecl,
        this: Option<Rc<Obj>>,
        args: Vec<Value>,
    ) -> R<Value> {
        self.tick()?;
        if m.is_static {
            self.ensure_init(&owner.decl.fqn)?;
        }
        let Some(body) = &m.body else {
            return Err(self.throw("java.lang.AbstractMethodError", Some(m.name.clone())));
        };
        self.enter()?;
        let mut frame = Frame::new(owner, if m.is_static { None } else { this });
        let ptys = self.prog.param_types(owner, &m.params);
        for ((p, v), t) in m.params.iter().zip(args).zip(&ptys) {
            let v = self.coerce(v, t);
            frame.locals.push((p.name.clone(), v));
        }
        let r = self.block(&mut frame, body);
        self.depth -= 1;
        let ret = self.resolve_ty(&frame, &m.ret);
        match r? {
            Flow::Return(v) => Ok(self.coerce(v, &ret)),
            _ => Ok(Value::Null),
        }
    }

    /// Runs the most specific `name` overload visible from `class`.
    pub fn dispatch(
        &mut self,
        class: &str,
        name: &str,
        this: Option<Rc<Obj>>,
        args: Vec<Value>,
    ) -> R<Option<Value>> {
        let prog = self.prog;
        let cands = prog.methods_named(class, name);
        if cands.is_empty() {
            return Ok(None);
        }
        let tys: Vec<Ty> = args.iter().map(Value::runtime_ty).collect();
        let typed: Vec<(Vec<Ty>, (&ClassInfo, &MethodDecl))> = cands
            .into_iter()
            .map(|(o, m)| (prog.param_types(o, &m.params), (o, m)))
            .collect();
        let Some(&(owner, m)) = prog.select(&typed, &tys) else {
            return Ok(None);
        };
        self.invoke(owner, m, this, args).map(Some)
    }

    // ---- statements ----

    fn block(&mut self, frame: &mut Frame<'p>, b: &'p Block) -> R<Flow> {
        frame.push();
        let mut out = Flow::Normal;
        for s in &b.stmts {
            match self.stmt(frame, s) {
                Ok(Flow::Normal) => {}
                Ok(other) => {
                    out = other;
                    break;
                }
                Err(e) => {
                    frame.pop();
                    return Err(e);
                }
            }
        }
        frame.pop();
        Ok(out)
    }

    fn scoped(&mut self, frame: &mut Frame<'p>, s: &'p Stmt) -> R<Flow> {
        frame.push();
        let r = self.stmt(frame, s);
        frame.pop();
        r
    }

    fn stmt(&mut self, frame: &mut Frame<'p>, s: &'p Stmt) -> R<Flow> {
        self.tick()?;
        if s.line > 0 && !matches!(s.kind, StmtKind::Block(_) | StmtKind::Empty) {
            self.hit(frame.class.decl.unit, s.line);
        }
        match &s.kind {
            StmtKind::Empty | StmtKind::Assert(..) => Ok(Flow::Normal),
            StmtKind::Local(decls) => {
                for d in decls {
                    let ty = self.resolve_ty(frame, &d.ty);
                    let v = match &d.init {
                        Some(init) => self.init_value(frame, init, &ty)?,
                        None => default_value(&ty),
                    };
                    frame.locals.push((d.name.clone(), v));
                }
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.eval(frame, e)?;
                Ok(Flow::Normal)
            }
            StmtKind::If(c, a, b) => {
                if self.eval(frame, c)?.as_bool() {
                    self.scoped(frame, a)
                } else if let Some(b) = b {
                    self.scoped(frame, b)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While(..) | StmtKind::DoWhile(..) | StmtKind::For { .. } | StmtKind::ForEach { .. } => {
                self.run_loop(frame, s, None)
            }
            StmtKind::Labeled(label, body) => {
                let r = if matches!(
                    body.kind,
                    StmtKind::While(..) | StmtKind::DoWhile(..) | StmtKind::For { .. } | StmtKind::ForEach { .. }
                ) {
                    self.tick()?;
                    self.hit(frame.class.decl.unit, body.line);
                    self.run_loop(frame, body, Some(label))?
                } else {
                    self.scoped(frame, body)?
                };
                match r {
                    Flow::Break(Some(l)) if l == *label => Ok(Flow::Normal),
                    other => Ok(other),
                }
            }
            StmtKind::Return(v) => Ok(Flow::Return(match v {
                Some(e) => self.eval(frame, e)?,
                None => Value::Null,
            })),
            StmtKind::Break(l) => Ok(Flow::Break(l.clone())),
            StmtKind::Continue(l) => Ok(Flow::Continue(l.clone())),
            StmtKind::Throw(e) => {
                let v = self.eval(frame, e)?;
                if v.is_null() {
                    return Err(self.npe("throw exception"));
                }
                Err(Abrupt::Throw(v))
            }
            StmtKind::Block(b) => self.block(frame, b),
            StmtKind::Try { body, catches, finally } => {
                let mut r = self.block(frame, body);
                if let Err(Abrupt::Throw(ex)) = &r {
                    let ex = ex.clone();
                    let class = ex.class_name().to_string();
                    for c in catches {
                        let matches = c.types.iter().any(|t| {
                            self.prog
                                .resolve_class(frame.class.decl.unit, Some(&frame.class.decl.fqn), t)
                                .is_some_and(|f| self.prog.is_subclass(&class, &f))
                        });
                        if matches {
                            frame.push();
                            frame.locals.push((c.name.clone(), ex.clone()));
                            r = self.block(frame, &c.body);
                            frame.pop();
                            break;
                        }
                    }
                }
                if let Some(f) = finally {
                    if matches!(r, Err(Abrupt::Halt)) {
                        return r;
                    }
                    match self.block(frame, f)? {
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                }
                r
            }
        }
    }

    fn run_loop(&mut self, frame: &mut Frame<'p>, s: &'p Stmt, label: Option<&str>) -> R<Flow> {
        // Returns Some(flow) when the loop must exit with that flow.
        fn after_body(flow: Flow, label: Option<&str>) -> Option<Flow> {
            match flow {
                Flow::Normal => None,
                Flow::Break(None) => Some(Flow::Normal),
                Flow::Break(Some(l)) if Some(l.as_str()) == label => Some(Flow::Normal),
                Flow::Continue(None) => None,
                Flow::Continue(Some(l)) if Some(l.as_str()) == label => None,
                other => Some(other),
            }
        }
        match &s.kind {
            StmtKind::While(c, body) => loop {
                self.tick()?;
                if !self.eval(frame, c)?.as_bool() {
                    return Ok(Flow::Normal);
                }
                let f = self.scoped(frame, body)?;
                if let Some(out) = after_body(f, label) {
                    return Ok(out);
                }
            },
            StmtKind::DoWhile(body, c) => loop {
                self.tick()?;
                let f = self.scoped(frame, body)?;
                if let Some(out) = after_body(f, label) {
                    return Ok(out);
                }
                if !self.eval(frame, c)?.as_bool() {
                    return Ok(Flow::Normal);
                }
            },
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                frame.push();
                let r = (|| {
                    for i in init {
                        self.stmt(frame, i)?;
                    }
                    loop {
                        self.tick()?;
                        if let Some(c) = cond {
                            if !self.eval(frame, c)?.as_bool() {
                                return Ok(Flow::Normal);
                            }
                        }
                        let f = self.scoped(frame, body)?;
                        if let Some(out) = after_body(f, label) {
                            return Ok(out);
                        }
                        for u in update {
                            self.eval(frame, u)?;
                        }
                    }
                })();
                frame.pop();
                r
            }
            StmtKind::ForEach { ty, name, iter, body } => {
                let arr = match self.eval(frame, iter)? {
                    Value::Arr(a) => a,
                    _ => return Err(self.npe("iterate over array")),
                };
                let ty = self.resolve_ty(frame, ty);
                let len = arr.data.borrow().len();
                for i in 0..len {
                    self.tick()?;
                    let Some(v) = arr.data.borrow().get(i).cloned() else { break };
                    let v = self.coerce(v, &ty);
                    frame.push();
                    frame.locals.push((name.clone(), v));
                    let f = self.scoped(frame, body);
                    frame.pop();
                    if let Some(out) = after_body(f?, label) {
                        return Ok(out);
                    }
                }
                Ok(Flow::Normal)
            }
            _ => self.stmt(frame, s),
        }
    }

    // ---- expressions ----

    pub fn init_value(&mut self, frame: &mut Frame<'p>, e: &'p Expr, ty: &Ty) -> R<Value> {
        if let ExprKind::ArrayInit(items) = &e.kind {
            let elem = match ty {
                Ty::Array(el) => (**el).clone(),
                _ => Ty::Unknown,
            };
            return self.array_literal(frame, &elem, items);
        }
        let v = self.eval(frame, e)?;
        Ok(self.coerce(v, ty))
    }

    fn array_literal(&mut self, frame: &mut Frame<'p>, elem: &Ty, items: &'p [Expr]) -> R<Value> {
        let mut data = Vec::with_capacity(items.len());
        for i in items {
            data.push(self.init_value(frame, i, elem)?);
        }
        Ok(Value::Arr(Rc::new(Arr {
            elem: elem.clone(),
            data: RefCell::new(data),
            id: self.fresh_id(),
        })))
    }

    fn new_array(&mut self, elem: &Ty, dims: &[i32]) -> R<Value> {
        let Some((&n, rest)) = dims.split_first() else {
            return Ok(Value::Null);
        };
        if n < 0 {
            return Err(self.throw("java.lang.NegativeArraySizeException", Some(n.to_string())));
        }
        let inner = (0..rest.len()).fold(elem.clone(), |t, _| Ty::Array(Box::new(t)));
        let mut data = Vec::with_capacity(n as usize);
        for _ in 0..n {
            self.tick()?;
            data.push(if rest.is_empty() {
                default_value(&inner)
            } else {
                self.new_array(elem, rest)?
            });
        }
        Ok(Value::Arr(Rc::new(Arr {
            elem: inner,
            data: RefCell::new(data),
            id: self.fresh_id(),
        })))
    }

    fn field_place(&mut self, frame: &Frame<'p>, name: &str) -> R<Option<Place>> {
        let mut scope = Some(frame.class.decl.fqn.clone());
        while let Some(sc) = scope {
            if self.prog.class(&sc).is_none() {
                break;
            }
            if let Some((owner, f)) = self.prog.find_field(&sc, name) {
                if f.is_static || owner.decl.is_interface {
                    let fqn = owner.decl.fqn.clone();
                    self.ensure_init(&fqn)?;
                    return Ok(Some(Place::Static(fqn, name.to_string())));
                }
                if let Some(this) = &frame.this {
                    return Ok(Some(Place::Instance(this.clone(), name.to_string())));
                }
            }
            scope = sc.rsplit_once('.').map(|(a, _)| a.to_string());
        }
        Ok(None)
    }

    fn read(&mut self, frame: &Frame<'p>, p: &Place) -> Value {
        match p {
            Place::Local(i) => frame.locals[*i].1.clone(),
            Place::Instance(o, n) => o.fields.borrow().get(n).cloned().unwrap_or(Value::Null),
            Place::Static(c, n) => self
                .statics
                .get(c)
                .and_then(|m| m.get(n))
                .cloned()
                .unwrap_or(Value::Null),
            Place::Elem(a, i) => a.data.borrow()[*i].clone(),
        }
    }

    fn place_ty(&self, frame: &Frame<'p>, p: &Place) -> Ty {
        match p {
            Place::Local(i) => frame.locals[*i].1.runtime_ty(),
            Place::Instance(o, n) => self.declared_field_ty(&o.class, n),
            Place::Static(c, n) => self.declared_field_ty(c, n),
            Place::Elem(a, _) => a.elem.clone(),
        }
    }

    fn declared_field_ty(&self, class: &str, name: &str) -> Ty {
        match self.prog.find_field(class, name) {
            Some((owner, f)) => self.field_ty(owner, f),
            None => Ty::Unknown,
        }
    }

    fn write(&mut self, frame: &mut Frame<'p>, p: &Place, v: Value) -> R<()> {
        let ty = self.place_ty(frame, p);
        let v = self.coerce(v, &ty);
        match p {
            Place::Local(i) => frame.locals[*i].1 = v,
            Place::Instance(o, n) => {
                o.fields.borrow_mut().insert(n.clone(), v);
            }
            Place::Static(c, n) => {
                self.statics.entry(c.clone()).or_default().insert(n.clone(), v);
            }
            Place::Elem(a, i) => {
                if let (Ty::Class(_), Value::Obj(o)) = (&a.elem, &v) {
                    if !self.prog.is_assignable(&Ty::Class(o.class.clone()), &a.elem) {
                        return Err(self.throw("java.lang.ArrayStoreException", Some(o.class.clone())));
                    }
                }
                a.data.borrow_mut()[*i] = v;
            }
        }
        Ok(())
    }

    fn place(&mut self, frame: &mut Frame<'p>, e: &'p Expr) -> R<Place> {
        match &e.kind {
            ExprKind::Name(n) => {
                if let Some(i) = frame.local(n) {
                    return Ok(Place::Local(i));
                }
                match self.field_place(frame, n)? {
                    Some(p) => Ok(p),
                    None => Err(self.throw("java.lang.NoSuchFieldError", Some(n.clone()))),
                }
            }
            ExprKind::SuperField(f) => match &frame.this {
                Some(t) => Ok(Place::Instance(t.clone(), f.clone())),
                None => Err(self.throw("java.lang.NoSuchFieldError", Some(f.clone()))),
            },
            ExprKind::Field(obj, f) => match self.target(frame, obj)? {
                Target::Class(c) => match self.prog.find_field(&c, f) {
                    Some((owner, _)) => {
                        let fqn = owner.decl.fqn.clone();
                        self.ensure_init(&fqn)?;
                        Ok(Place::Static(fqn, f.clone()))
                    }
                    None => Err(self.throw("java.lang.NoSuchFieldError", Some(f.clone()))),
                },
                Target::Val(Value::Obj(o)) => match self.prog.find_field(&o.class, f) {
                    Some((owner, fd)) if fd.is_static => Ok(Place::Static(owner.decl.fqn.clone(), f.clone())),
                    _ => Ok(Place::Instance(o, f.clone())),
                },
                Target::Val(Value::Null) => Err(self.npe(&format!("assign field \"{f}\""))),
                _ => Err(self.throw("java.lang.NoSuchFieldError", Some(f.clone()))),
            },
            ExprKind::Index(a, i) => {
                let av = self.eval(frame, a)?;
                let iv = self.eval(frame, i)?.as_int();
                match av {
                    Value::Arr(arr) => {
                        let len = arr.data.borrow().len();
                        if iv < 0 || iv as usize >= len {
                            return Err(self.throw(
                                "java.lang.ArrayIndexOutOfBoundsException",
                                Some(format!("Index {iv} out of bounds for length {len}")),
                            ));
                        }
                        Ok(Place::Elem(arr, iv as usize))
                    }
                    _ => Err(self.npe("store to array")),
                }
            }
            _ => Err(self.throw("java.lang.IllegalStateException", Some("not assignable".into()))),
        }
    }

    pub(crate) fn target(&mut self, frame: &mut Frame<'p>, e: &'p Expr) -> R<Target> {
        match &e.kind {
            ExprKind::Name(n) => {
                if let Some(i) = frame.local(n) {
                    return Ok(Target::Val(frame.locals[i].1.clone()));
                }
                if let Some(p) = self.field_place(frame, n)? {
                    return Ok(Target::Val(self.read(frame, &p)));
                }
                let unit = frame.class.decl.unit;
                match self.prog.resolve_class(unit, Some(&frame.class.decl.fqn), n) {
                    Some(c) if self.prog.exists(&c) => Ok(Target::Class(c)),
                    _ => Ok(Target::Pkg(n.clone())),
                }
            }
            ExprKind::Field(obj, f) => match self.target(frame, obj)? {
                Target::Pkg(p) => {
                    let full = format!("{p}.{f}");
                    Ok(if self.prog.exists(&full) {
                        Target::Class(full)
                    } else {
                        Target::Pkg(full)
                    })
                }
                Target::Class(c) => {
                    let nested = format!("{c}.{f}");
                    if self.prog.class(&nested).is_some() {
                        return Ok(Target::Class(nested));
                    }
                    if let Some((owner, _)) = self.prog.find_field(&c, f) {
                        let fqn = owner.decl.fqn.clone();
                        self.ensure_init(&fqn)?;
                        let p = Place::Static(fqn, f.clone());
                        return Ok(Target::Val(self.read(frame, &p)));
                    }
                    Ok(Target::Val(self.builtin_static_field(&c, f)))
                }
                Target::Val(v) => self.read_field(frame, v, f).map(Target::Val),
            },
            _ => self.eval(frame, e).map(Target::Val),
        }
    }

    fn read_field(&mut self, frame: &Frame<'p>, v: Value, f: &str) -> R<Value> {
        match v {
            Value::Arr(a) if f == "length" => Ok(Value::Int(a.data.borrow().len() as i32)),
            Value::Obj(o) => {
                if let Some((owner, fd)) = self.prog.find_field(&o.class, f) {
                    if fd.is_static {
                        let p = Place::Static(owner.decl.fqn.clone(), f.to_string());
                        return Ok(self.read(frame, &p));
                    }
                }
                Ok(o.fields.borrow().get(f).cloned().unwrap_or(Value::Null))
            }
            Value::Null => Err(self.npe(&format!("read field \"{f}\""))),
            _ => Err(self.throw("java.lang.NoSuchFieldError", Some(f.to_string()))),
        }
    }

    fn builtin_static_field(&mut self, class: &str, f: &str) -> Value {
        match (class, f) {
            ("java.lang.Integer", "MAX_VALUE") => Value::Int(i32::MAX),
            ("java.lang.Integer", "MIN_VALUE") => Value::Int(i32::MIN),
            ("java.lang.Long", "MAX_VALUE") => Value::Long(i64::MAX),
            ("java.lang.Long", "MIN_VALUE") => Value::Long(i64::MIN),
            ("java.lang.Short", "MAX_VALUE") => Value::Int(i16::MAX as i32),
            ("java.lang.Short", "MIN_VALUE") => Value::Int(i16::MIN as i32),
            ("java.lang.Byte", "MAX_VALUE") => Value::Int(i8::MAX as i32),
            ("java.lang.Byte", "MIN_VALUE") => Value::Int(i8::MIN as i32),
            ("java.lang.Character", "MAX_VALUE") => Value::Char(u16::MAX),
            ("java.lang.Character", "MIN_VALUE") => Value::Char(0),
            ("java.lang.Double", "MAX_VALUE") => Value::Double(f64::MAX),
            ("java.lang.Double", "MIN_VALUE") => Value::Double(f64::from_bits(1)),
            ("java.lang.Double", "NaN") => Value::Double(f64::NAN),
            ("java.lang.Double", "POSITIVE_INFINITY") => Value::Double(f64::INFINITY),
            ("java.lang.Double", "NEGATIVE_INFINITY") => Value::Double(f64::NEG_INFINITY),
            ("java.lang.Math", "PI") => Value::Double(std::f64::consts::PI),
            ("java.lang.Math", "E") => Value::Double(std::f64::consts::E),
            ("java.lang.Boolean", "TRUE") => Value::Bool(true),
            ("java.lang.Boolean", "FALSE") => Value::Bool(false),
            ("java.lang.System", _) => {
                if self.system_out.is_none() {
                    let id = self.fresh_id();
                    self.system_out = Some(Value::Obj(Rc::new(Obj {
                        class: "java.io.PrintStream".into(),
                        fields: RefCell::new(HashMap::new()),
                        id,
                    })));
                }
                self.system_out.clone().unwrap_or(Value::Null)
            }
            _ => Value::Null,
        }
    }

    pub fn eval(&mut self, frame: &mut Frame<'p>, e: &'p Expr) -> R<Value> {
        self.tick()?;
        match &e.kind {
            ExprKind::Lit(l) => Ok(match l {
                Lit::Int(v) => Value::Int(*v),
                Lit::Long(v) => Value::Long(*v),
                Lit::Double(v) => Value::Double(*v),
                Lit::Float(v) => Value::Float(*v as f32),
                Lit::Bool(v) => Value::Bool(*v),
                Lit::Char(v) => Value::Char(*v),
                Lit::Str(s) => Value::Str(self.intern(s)),
                Lit::Null => Value::Null,
            }),
            ExprKind::Name(_) | ExprKind::Field(..) => match self.target(frame, e)? {
                Target::Val(v) => Ok(v),
                Target::Class(c) | Target::Pkg(c) => {
                    Err(self.throw("java.lang.NoSuchFieldError", Some(c)))
                }
            },
            ExprKind::This => Ok(frame.this.clone().map(Value::Obj).unwrap_or(Value::Null)),
            ExprKind::SuperField(_) => {
                let p = self.place(frame, e)?;
                Ok(self.read(frame, &p))
            }
            ExprKind::Call {
                target,
                is_super,
                name,
                args,
            } => self.call(frame, target.as_deref(), *is_super, name, args),
            ExprKind::New { class, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(frame, a)?);
                }
                let fqn = self
                    .prog
                    .resolve_class(frame.class.decl.unit, Some(&frame.class.decl.fqn), class)
                    .unwrap_or_else(|| class.clone());
                self.instantiate(&fqn, vals)
            }
            ExprKind::NewArray {
                elem,
                dims,
                extra_dims,
                init,
            } => {
                let base = self.resolve_ty(frame, elem);
                if let Some(items) = init {
                    let el = (1..*extra_dims).fold(base, |t, _| Ty::Array(Box::new(t)));
                    return self.array_literal(frame, &el, items);
                }
                let mut ns = Vec::new();
                for d in dims {
                    ns.push(self.eval(frame, d)?.as_int());
                }
                let el = (0..*extra_dims).fold(base, |t, _| Ty::Array(Box::new(t)));
                self.new_array(&el, &ns)
            }
            ExprKind::ArrayInit(items) => self.array_literal(frame, &Ty::Unknown, items),
            ExprKind::Index(..) => {
                let p = self.place(frame, e)?;
                Ok(self.read(frame, &p))
            }
            ExprKind::Unary(op, x) => {
                let v = self.eval(frame, x)?;
                Ok(match (op, num(&v)) {
                    (UnOp::Not, _) => Value::Bool(!v.as_bool()),
                    (UnOp::Plus, Some(n)) => arith(BinOp::Add, Num::I(0), n).unwrap_or(v),
                    (UnOp::Neg, Some(n)) => match n {
                        Num::I(i) => Value::Int(i.wrapping_neg()),
                        Num::L(l) => Value::Long(l.wrapping_neg()),
                        Num::F(f) => Value::Float(-f),
                        Num::D(d) => Value::Double(-d),
                    },
                    (UnOp::BitNot, Some(Num::L(l))) => Value::Long(!l),
                    (UnOp::BitNot, Some(n)) => Value::Int(!(n.to_i64() as i32)),
                    _ => v,
                })
            }
            ExprKind::Binary(op, a, b) => {
                let av = self.eval(frame, a)?;
                match op {
                    BinOp::And if !av.as_bool() => return Ok(Value::Bool(false)),
                    BinOp::Or if av.as_bool() => return Ok(Value::Bool(true)),
                    _ => {}
                }
                let bv = self.eval(frame, b)?;
                self.binary(*op, av, bv)
            }
            ExprKind::Assign { op, target, value } => {
                let p = self.place(frame, target)?;
                let v = match op {
                    None => {
                        let ty = self.place_ty(frame, &p);
                        self.init_value(frame, value, &ty)?
                    }
                    Some(op) => {
                        let cur = self.read(frame, &p);
                        let rhs = self.eval(frame, value)?;
                        self.binary(*op, cur, rhs)?
                    }
                };
                self.write(frame, &p, v)?;
                Ok(self.read(frame, &p))
            }
            ExprKind::IncDec { prefix, inc, target } => {
                let p = self.place(frame, target)?;
                let old = self.read(frame, &p);
                let op = if *inc { BinOp::Add } else { BinOp::Sub };
                let new = self.binary(op, old.clone(), Value::Int(1))?;
                self.write(frame, &p, new)?;
                Ok(if *prefix { self.read(frame, &p) } else { old })
            }
            ExprKind::Cond(c, a, b) => {
                if self.eval(frame, c)?.as_bool() {
                    self.eval(frame, a)
                } else {
                    self.eval(frame, b)
                }
            }
            ExprKind::Cast(t, x) => {
                let v = self.eval(frame, x)?;
                let ty = self.resolve_ty(frame, t);
                match &ty {
                    Ty::Prim(_) if v.is_null() => Err(self.npe("unbox value")),
                    Ty::Prim(p) if matches!(v, Value::Str(_) | Value::Obj(_) | Value::Arr(_) | Value::Builder(..)) => Err(self.throw(
                        "java.lang.ClassCastException",
                        Some(format!("class {} cannot be cast to class {}", v.class_name(), boxed_name(*p))),
                    )),
                    Ty::Prim(p) => Ok(convert(v, *p)),
                    Ty::Unknown => Ok(v),
                    _ if v.is_null() => Ok(v),
                    _ if self.instance_of(&v, &ty) => Ok(v),
                    _ => Err(self.throw(
                        "java.lang.ClassCastException",
                        Some(format!(
                            "class {} cannot be cast to class {}",
                            v.class_name(),
                            ty.display()
                        )),
                    )),
                }
            }
            ExprKind::InstanceOf(x, t) => {
                let v = self.eval(frame, x)?;
                let ty = self.resolve_ty(frame, t);
                Ok(Value::Bool(!v.is_null() && self.instance_of(&v, &ty)))
            }
            ExprKind::ClassLit(t) => {
                let ty = self.resolve_ty(frame, t);
                let mut fields = HashMap::new();
                fields.insert("name".to_string(), self.str_value(ty.display()));
                Ok(Value::Obj(Rc::new(Obj {
                    class: "java.lang.Class".into(),
                    fields: RefCell::new(fields),
                    id: self.fresh_id(),
                })))
            }
        }
    }

    pub fn instance_of(&self, v: &Value, ty: &Ty) -> bool {
        match (v, ty) {
            (Value::Null, _) => false,
            (_, Ty::Unknown) => true,
            (Value::Arr(a), Ty::Array(e)) => a.elem == **e || self.prog.is_assignable(&a.elem, e),
            (_, Ty::Class(c)) => self.prog.is_subclass(v.class_name(), c),
            _ => false,
        }
    }

    pub fn binary(&mut self, op: BinOp, a: Value, b: Value) -> R<Value> {
        use BinOp::*;
        if op == Add && (matches!(a, Value::Str(_)) || matches!(b, Value::Str(_))) {
            let s = format!("{}{}", self.to_jstring(&a)?, self.to_jstring(&b)?);
            return Ok(self.str_value(s));
        }
        match (op, &a, &b) {
            (Eq, _, _) => return Ok(Value::Bool(a.same(&b))),
            (Ne, _, _) => return Ok(Value::Bool(!a.same(&b))),
            (BitAnd | BitOr | BitXor | And | Or, Value::Bool(x), Value::Bool(y)) => {
                return Ok(Value::Bool(match op {
                    BitAnd | And => *x && *y,
                    BitOr | Or => *x || *y,
                    _ => x ^ y,
                }))
            }
            _ => {}
        }
        let (Some(x), Some(y)) = (num(&a), num(&b)) else {
            return Err(self.npe("unbox null value"));
        };
        Ok(match op {
            Add | Sub | Mul | Div | Rem => match arith(op, x, y) {
                Ok(v) => v,
                Err(DivByZero) => return Err(self.throw("java.lang.ArithmeticException", Some("/ by zero".into()))),
            },
            Lt | Le | Gt | Ge => Value::Bool(compare(op, x, y)),
            Shl | Shr | UShr => shift(op, x, y),
            BitAnd | BitOr | BitXor => bitwise(op, x, y),
            _ => Value::Bool(false),
        })
    }

    fn call(
        &mut self,
        frame: &mut Frame<'p>,
        target: Option<&'p Expr>,
        is_super: bool,
        name: &str,
        args: &'p [Expr],
    ) -> R<Value> {
        let recv = match target {
            Some(t) => Some(self.target(frame, t)?),
            None => None,
        };
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(frame, a)?);
        }
        let unit = frame.class.decl.unit;
        let here = frame.class.decl.fqn.clone();
        match recv {
            None if is_super => {
                let sup = self.prog.superclass_of(&here).unwrap_or_else(|| OBJECT.into());
                let this = frame.this.clone();
                if let Some(v) = self.dispatch(&sup, name, this.clone(), vals.clone())? {
                    return Ok(v);
                }
                let recv = this.map(Value::Obj).unwrap_or(Value::Null);
                self.builtin_instance_call(&recv, name, vals, true)
            }
            None => {
                let mut scope = Some(here.clone());
                let mut first = true;
                while let Some(sc) = scope {
                    if self.prog.class(&sc).is_none() {
                        break;
                    }
                    if !self.prog.methods_named(&sc, name).is_empty() {
                        let this = if first { frame.this.clone() } else { None };
                        let start = match &this {
                            Some(o) => o.class.clone(),
                            None => sc.clone(),
                        };
                        if let Some(v) = self.dispatch(&start, name, this, vals.clone())? {
                            return Ok(v);
                        }
                    }
                    first = false;
                    scope = sc.rsplit_once('.').map(|(a, _)| a.to_string());
                }
                if let Some(flavor) = self.prog.assert_flavor(unit, &here, name) {
                    self.assertion(flavor, name, vals)?;
                    return Ok(Value::Null);
                }
                let recv = frame.this.clone().map(Value::Obj).unwrap_or(Value::Null);
                self.builtin_instance_call(&recv, name, vals, true)
            }
            Some(Target::Class(c)) => {
                if let Some(flavor) = self.prog.assert_flavor_of_class(&c) {
                    if ASSERT_METHODS.contains(&name) {
                        self.assertion(flavor, name, vals)?;
                        return Ok(Value::Null);
                    }
                }
                if self.prog.class(&c).is_some() {
                    self.ensure_init(&c)?;
                    if let Some(v) = self.dispatch(&c, name, None, vals)? {
                        return Ok(v);
                    }
                    return Err(self.throw("java.lang.NoSuchMethodError", Some(name.to_string())));
                }
                self.builtin_static_call(&c, name, vals)
            }
            Some(Target::Pkg(p)) => Err(self.throw("java.lang.NoClassDefFoundError", Some(p))),
            Some(Target::Val(v)) => {
                if let Value::Obj(o) = &v {
                    if self.prog.class(&o.class).is_some() {
                        if let Some(r) = self.dispatch(&o.class.clone(), name, Some(o.clone()), vals.clone())? {
                            return Ok(r);
                        }
                    }
                }
                self.builtin_instance_call(&v, name, vals, false)
            }
        }
    }
}
