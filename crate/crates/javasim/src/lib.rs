//! A small in-process Java compiler and JUnit runner.
//!
//! Covers the subset of Java that generated unit tests and their focal
//! classes typically use: classes, fields, methods, constructors, control
//! flow, exceptions, strings, arrays and `java.lang` helpers. Programs
//! outside that subset are rejected with a diagnostic instead of being
//! guessed at.

mod assert;
mod ast;
mod builtins;
mod check;
mod interp;
mod lower;
mod program;
mod rt;
mod value;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use ast::{Block, Stmt, StmtKind};
use interp::{Abrupt, Interp};
use program::{ClassInfo, Program, Ty, ASSERTION_ERROR, OBJECT};
use value::Value;

pub use ast::Line;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub line: Line,
    pub message: String,
}

impl Diagnostic {
    pub fn new(path: &str, line: Line, message: String) -> Diagnostic {
        Diagnostic {
            path: path.to_string(),
            line,
            message,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: error: {}", self.path, self.line, self.message)
    }
}

/// Execution budget for one test class.
#[derive(Debug, Clone)]
pub struct Limits {
    pub max_steps: u64,
    pub timeout: Duration,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: 5_000_000,
            timeout: Duration::from_secs(10),
            max_depth: 1200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestStatus {
    Passed,
    /// An assertion failed.
    Failed,
    /// Any other throwable escaped the test.
    Errored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub name: String,
    pub status: TestStatus,
    pub failure_class: Option<String>,
    pub message: Option<String>,
    pub duration: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct ClassRun {
    pub results: Vec<TestResult>,
    /// Executed lines per source path.
    pub hits: BTreeMap<String, BTreeSet<Line>>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RunError {
    #[error("class not found: {0}")]
    ClassNotFound(String),
    #[error("execution budget exhausted")]
    TimedOut,
}

/// Line-level coverage facts for one class declaration.
#[derive(Debug, Clone)]
pub struct ClassLines {
    pub fqn: String,
    pub path: String,
    pub package: Option<String>,
    pub coverable: BTreeSet<Line>,
}

pub struct Compiled {
    prog: Program,
}

/// Compiles `(path, content)` pairs together, like one `javac` invocation.
pub fn compile(sources: &[(String, String)]) -> Result<Compiled, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut units = Vec::new();
    let mut decls = Vec::new();
    for (i, (path, src)) in sources.iter().enumerate() {
        let lowered = lower::lower(path, src, i, &mut diags);
        units.push(lowered.unit);
        decls.extend(lowered.classes);
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut seen = BTreeSet::new();
    for d in &decls {
        if !seen.insert(d.fqn.clone()) {
            let path = &units[d.unit].path;
            diags.push(Diagnostic::new(path, d.line, format!("duplicate class: {}", d.fqn)));
        }
    }
    let mut prog = Program::new(units, decls);
    resolve_supertypes(&mut prog, &mut diags);
    check_imports(&prog, &mut diags);
    if diags.is_empty() {
        diags = check::check(&prog);
    }
    if diags.is_empty() {
        Ok(Compiled { prog })
    } else {
        diags.sort_by(|a, b| (&a.path, a.line).cmp(&(&b.path, b.line)));
        Err(diags)
    }
}

fn outer_of(fqn: &str, prog: &Program) -> Option<String> {
    fqn.rsplit_once('.')
        .map(|(o, _)| o.to_string())
        .filter(|o| prog.class(o).is_some())
}

fn resolve_supertypes(prog: &mut Program, diags: &mut Vec<Diagnostic>) {
    let mut resolved = Vec::new();
    for info in &prog.classes {
        let d = &info.decl;
        let ctx = outer_of(&d.fqn, prog);
        let path = prog.units[d.unit].path.clone();
        let mut find = |name: &str| match prog.resolve_class(d.unit, ctx.as_deref(), name) {
            Some(f) if prog.exists(&f) => Some(f),
            _ => {
                diags.push(Diagnostic::new(
                    &path,
                    d.line,
                    format!("cannot find symbol\n  symbol: class {name}"),
                ));
                None
            }
        };
        let sup = match &d.superclass {
            Some(s) => find(s),
            None if d.is_interface => None,
            None => Some(OBJECT.to_string()),
        };
        let itfs: Vec<String> = d.interfaces.iter().filter_map(|i| find(i)).collect();
        resolved.push((sup, itfs));
    }
    for (info, (sup, itfs)) in prog.classes.iter_mut().zip(resolved) {
        info.superclass = sup;
        info.interfaces = itfs;
    }
    // Cycles would make every chain walk loop.
    for info in &prog.classes {
        let mut cur = info.superclass.clone();
        let mut steps = 0;
        while let Some(c) = cur {
            if c == info.decl.fqn || steps > prog.classes.len() {
                diags.push(Diagnostic::new(
                    &prog.units[info.decl.unit].path,
                    info.decl.line,
                    format!("cyclic inheritance involving {}", info.decl.fqn),
                ));
                break;
            }
            steps += 1;
            cur = prog.class(&c).and_then(|i| i.superclass.clone());
        }
    }
}

fn library_package(path: &str) -> bool {
    path.starts_with("java.") || path.starts_with("javax.")
}

fn check_imports(prog: &Program, diags: &mut Vec<Diagnostic>) {
    let packages: BTreeSet<String> = prog
        .classes
        .iter()
        .filter_map(|c| c.decl.fqn.rsplit_once('.').map(|(p, _)| p.to_string()))
        .chain(
            program::BUILTIN_CLASSES
                .iter()
                .filter_map(|(n, _)| n.rsplit_once('.').map(|(p, _)| p.to_string())),
        )
        .collect();
    for u in &prog.units {
        for imp in &u.imports {
            // Static imports name a member; type imports name a class.
            let class = if imp.is_static && !imp.wildcard {
                imp.path.rsplit_once('.').map_or(imp.path.as_str(), |(c, _)| c)
            } else {
                imp.path.as_str()
            };
            let ok = if imp.wildcard && !imp.is_static {
                packages.contains(class) || prog.exists(class) || library_package(class)
            } else {
                prog.exists(class) || library_package(class)
            };
            if !ok {
                let pkg = class.rsplit_once('.').map_or(class, |(p, _)| p);
                let msg = if packages.contains(pkg) {
                    format!("cannot find symbol\n  symbol:   class {}\n  location: package {pkg}", program::simple_name(class))
                } else {
                    format!("package {pkg} does not exist")
                };
                diags.push(Diagnostic::new(&u.path, 1, msg));
            }
        }
    }
}

fn stmt_lines(s: &Stmt, out: &mut BTreeSet<Line>) {
    if s.line > 0 && !matches!(s.kind, StmtKind::Block(_) | StmtKind::Empty) {
        out.insert(s.line);
    }
    match &s.kind {
        StmtKind::If(_, a, b) => {
            stmt_lines(a, out);
            if let Some(b) = b {
                stmt_lines(b, out);
            }
        }
        StmtKind::While(_, b) | StmtKind::DoWhile(b, _) | StmtKind::Labeled(_, b) => stmt_lines(b, out),
        StmtKind::For { init, body, .. } => {
            for i in init {
                stmt_lines(i, out);
            }
            stmt_lines(body, out);
        }
        StmtKind::ForEach { body, .. } => stmt_lines(body, out),
        StmtKind::Block(b) => block_lines(b, out),
        StmtKind::Try { body, catches, finally } => {
            block_lines(body, out);
            for c in catches {
                block_lines(&c.body, out);
            }
            if let Some(f) = finally {
                block_lines(f, out);
            }
        }
        _ => {}
    }
}

fn block_lines(b: &Block, out: &mut BTreeSet<Line>) {
    for s in &b.stmts {
        stmt_lines(s, out);
    }
}

fn class_lines(info: &ClassInfo) -> BTreeSet<Line> {
    let d = &info.decl;
    let mut out = BTreeSet::new();
    if d.is_interface {
        return out;
    }
    for f in d.fields.iter().filter(|f| f.init.is_some()) {
        out.insert(f.line);
    }
    if d.ctors.is_empty() {
        out.insert(d.line);
    }
    for c in &d.ctors {
        out.insert(c.line);
        if let Some(e) = &c.explicit {
            out.insert(e.line);
        }
        block_lines(&c.body, &mut out);
    }
    for m in &d.methods {
        if let Some(b) = &m.body {
            block_lines(b, &mut out);
        }
    }
    for b in d.static_init.iter().chain(&d.instance_init) {
        block_lines(b, &mut out);
    }
    out
}

enum Lifecycle {
    JUnit3,
    Annotated,
}

struct Plan<'p> {
    info: &'p ClassInfo,
    style: Lifecycle,
    tests: Vec<(&'p ClassInfo, &'p ast::MethodDecl)>,
    before_all: Vec<(&'p ClassInfo, &'p ast::MethodDecl)>,
    after_all: Vec<(&'p ClassInfo, &'p ast::MethodDecl)>,
    before: Vec<(&'p ClassInfo, &'p ast::MethodDecl)>,
    after: Vec<(&'p ClassInfo, &'p ast::MethodDecl)>,
}

type Pair<'p> = (&'p ClassInfo, &'p ast::MethodDecl);

impl Compiled {
    pub fn class_names(&self) -> Vec<String> {
        self.prog.classes.iter().map(|c| c.decl.fqn.clone()).collect()
    }

    /// Coverable lines for every class, in declaration order.
    pub fn coverage_map(&self) -> Vec<ClassLines> {
        self.prog
            .classes
            .iter()
            .map(|c| ClassLines {
                fqn: c.decl.fqn.clone(),
                path: self.prog.units[c.decl.unit].path.clone(),
                package: self.prog.units[c.decl.unit].package.clone(),
                coverable: class_lines(c),
            })
            .collect()
    }

    fn plan<'p>(&'p self, info: &'p ClassInfo) -> Plan<'p> {
        let prog = &self.prog;
        // Most-derived first; superclass hooks run before subclass hooks.
        let chain: Vec<&ClassInfo> = prog.chain(&info.decl.fqn).iter().filter_map(|c| prog.class(c)).collect();
        let mut plan = Plan {
            info,
            style: if prog.extends_test_case(&info.decl.fqn) { Lifecycle::JUnit3 } else { Lifecycle::Annotated },
            tests: Vec::new(),
            before_all: Vec::new(),
            after_all: Vec::new(),
            before: Vec::new(),
            after: Vec::new(),
        };
        let mut names: Vec<&str> = Vec::new();
        for c in &chain {
            for m in &c.decl.methods {
                if m.body.is_none() || m.is_abstract || names.contains(&m.name.as_str()) && m.params.is_empty() {
                    continue;
                }
                let skip = m.has_annotation("Ignore") || m.has_annotation("Disabled");
                match plan.style {
                    Lifecycle::JUnit3 => {
                        if m.name.starts_with("test") && m.params.is_empty() && !m.is_static && m.ret == ast::TypeRef::Void {
                            plan.tests.push((c, m));
                        }
                    }
                    Lifecycle::Annotated => {
                        if m.has_annotation("Test") && !skip {
                            plan.tests.push((c, m));
                        }
                        if m.has_annotation("BeforeClass") || m.has_annotation("BeforeAll") {
                            plan.before_all.insert(0, (c, m));
                        }
                        if m.has_annotation("AfterClass") || m.has_annotation("AfterAll") {
                            plan.after_all.push((c, m));
                        }
                        if m.has_annotation("Before") || m.has_annotation("BeforeEach") {
                            plan.before.insert(0, (c, m));
                        }
                        if m.has_annotation("After") || m.has_annotation("AfterEach") {
                            plan.after.push((c, m));
                        }
                    }
                }
                if m.params.is_empty() {
                    names.push(&m.name);
                }
            }
        }
        if let Lifecycle::JUnit3 = plan.style {
            let hook = |name: &str| prog.methods_named(&info.decl.fqn, name).into_iter().find(|(_, m)| m.params.is_empty() && m.body.is_some());
            plan.before.extend(hook("setUp"));
            plan.after.extend(hook("tearDown"));
        }
        plan
    }

    /// Runs every test of `fqn` in source order on a fresh interpreter.
    pub fn run_class(&self, fqn: &str, limits: &Limits) -> Result<ClassRun, RunError> {
        let info = self
            .prog
            .class(fqn)
            .filter(|c| !c.decl.is_interface && !c.decl.is_abstract)
            .ok_or_else(|| RunError::ClassNotFound(fqn.to_string()))?;
        std::thread::scope(|s| {
            std::thread::Builder::new()
                .stack_size(512 << 20)
                .spawn_scoped(s, || self.run_plan(self.plan(info), limits.clone()))
                .expect("spawn test thread")
                .join()
                .unwrap_or(Err(RunError::TimedOut))
        })
    }

    fn run_plan(&self, plan: Plan<'_>, limits: Limits) -> Result<ClassRun, RunError> {
        let prog = &self.prog;
        let mut it = Interp::new(prog, limits);
        let mut results = Vec::new();
        let fqn = plan.info.decl.fqn.clone();
        let mut class_failure = None;
        if let Err(e) = it.ensure_init(&fqn) {
            class_failure = Some(e);
        }
        if class_failure.is_none() {
            for (owner, m) in &plan.before_all {
                if let Err(e) = it.invoke(owner, m, None, Vec::new()) {
                    class_failure = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = class_failure {
            let Abrupt::Throw(v) = e else { return Err(RunError::TimedOut) };
            for (_, m) in &plan.tests {
                results.push(self.outcome(&mut it, m.name.clone(), Duration::ZERO, Some(v.clone()), None));
            }
        } else {
            for (owner, m) in &plan.tests {
                let started = Instant::now();
                let expected = self.expected_exception(owner, m);
                let thrown = match self.run_one(&mut it, &plan, owner, m) {
                    Ok(t) => t,
                    Err(()) => return Err(RunError::TimedOut),
                };
                results.push(self.outcome(&mut it, m.name.clone(), started.elapsed(), thrown, expected));
            }
            for (owner, m) in &plan.after_all {
                if let Err(Abrupt::Halt) = it.invoke(owner, m, None, Vec::new()) {
                    return Err(RunError::TimedOut);
                }
            }
        }
        let mut hits: BTreeMap<String, BTreeSet<Line>> = BTreeMap::new();
        for (unit, lines) in std::mem::take(&mut it.hits) {
            hits.entry(prog.units[unit].path.clone()).or_default().extend(lines);
        }
        Ok(ClassRun { results, hits })
    }

    fn expected_exception(&self, owner: &ClassInfo, m: &ast::MethodDecl) -> Option<String> {
        let ann = m.annotations.iter().find(|a| a.name == "Test")?;
        let (_, ty) = ann.class_values.iter().find(|(k, _)| k == "expected")?;
        match self.prog.resolve_type(owner.decl.unit, Some(&owner.decl.fqn), ty) {
            Ok(Ty::Class(c)) => Some(c),
            _ => None,
        }
    }

    /// `Err(())` means the budget ran out.
    fn run_one<'p>(&'p self, it: &mut Interp<'p>, plan: &Plan<'p>, owner: &'p ClassInfo, m: &'p ast::MethodDecl) -> Result<Option<Value>, ()> {
        let fqn = &plan.info.decl.fqn;
        let lift = |r: Result<Value, Abrupt>| match r {
            Ok(_) => Ok(None),
            Err(Abrupt::Throw(v)) => Ok(Some(v)),
            Err(Abrupt::Halt) => Err(()),
        };
        let instance = match self.new_instance(it, plan.info, &m.name) {
            Ok(Value::Obj(o)) => o,
            Ok(_) => return Ok(None),
            Err(e) => return lift(Err(e)),
        };
        let run = |it: &mut Interp<'p>, list: &[Pair<'p>]| -> Result<Option<Value>, ()> {
            for (o, h) in list {
                if let Some(t) = lift(it.invoke(o, h, if h.is_static { None } else { Some(instance.clone()) }, Vec::new()))? {
                    return Ok(Some(t));
                }
            }
            Ok(None)
        };
        let _ = fqn;
        let mut thrown = run(it, &plan.before)?;
        if thrown.is_none() {
            thrown = lift(it.invoke(owner, m, Some(instance.clone()), Vec::new()))?;
        }
        let after = run(it, &plan.after)?;
        Ok(thrown.or(after))
    }

    fn new_instance<'p>(&'p self, it: &mut Interp<'p>, info: &'p ClassInfo, test: &str) -> Result<Value, Abrupt> {
        let takes_name = !info.decl.ctors.is_empty()
            && !info.decl.ctors.iter().any(|c| c.params.is_empty())
            && info.decl.ctors.iter().any(|c| c.params.len() == 1);
        let args = if takes_name { vec![it.str_value(test)] } else { Vec::new() };
        it.instantiate(&info.decl.fqn, args)
    }

    fn outcome(&self, it: &mut Interp<'_>, name: String, duration: Duration, thrown: Option<Value>, expected: Option<String>) -> TestResult {
        let describe = |v: &Value| -> (String, Option<String>) {
            match v {
                Value::Obj(o) => {
                    let msg = match o.fields.borrow().get("message") {
                        Some(Value::Str(s)) => Some(s.to_string()),
                        _ => None,
                    };
                    (o.class.clone(), msg)
                }
                other => (other.class_name().to_string(), None),
            }
        };
        let (status, failure_class, message) = match (thrown, expected) {
            (None, None) => (TestStatus::Passed, None, None),
            (None, Some(exp)) => (
                TestStatus::Failed,
                Some(ASSERTION_ERROR.to_string()),
                Some(format!("Expected exception: {exp}")),
            ),
            (Some(v), Some(exp)) if self.prog.is_subclass(v.class_name(), &exp) => (TestStatus::Passed, None, None),
            (Some(v), exp) => {
                let (class, msg) = describe(&v);
                if let Some(exp) = exp {
                    let got = it.plain_string(&v);
                    let text = format!("Unexpected exception, expected<{exp}> but was<{class}>");
                    let _ = got;
                    (TestStatus::Errored, Some("java.lang.Exception".to_string()), Some(text))
                } else if self.prog.is_subclass(&class, ASSERTION_ERROR) {
                    (TestStatus::Failed, Some(class), msg)
                } else {
                    (TestStatus::Errored, Some(class), msg)
                }
            }
        };
        TestResult {
            name,
            status,
            failure_class,
            message,
            duration,
        }
    }
}
