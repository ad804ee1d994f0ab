//! Class table and name resolution shared by the checker and interpreter.

use std::collections::HashMap;

use crate::ast::*;

pub const OBJECT: &str = "java.lang.Object";
pub const STRING: &str = "java.lang.String";
pub const BUILDER: &str = "java.lang.StringBuilder";
pub const THROWABLE: &str = "java.lang.Throwable";
pub const ASSERTION_ERROR: &str = "java.lang.AssertionError";
pub const TEST_CASE: &str = "junit.framework.TestCase";

/// Library classes the interpreter knows, with their superclass.
pub const BUILTIN_CLASSES: &[(&str, Option<&str>)] = &[
    (OBJECT, None),
    (STRING, Some(OBJECT)),
    (BUILDER, Some(OBJECT)),
    ("java.lang.Math", Some(OBJECT)),
    ("java.lang.System", Some(OBJECT)),
    ("java.lang.Integer", Some(OBJECT)),
    ("java.lang.Long", Some(OBJECT)),
    ("java.lang.Double", Some(OBJECT)),
    ("java.lang.Float", Some(OBJECT)),
    ("java.lang.Boolean", Some(OBJECT)),
    ("java.lang.Character", Some(OBJECT)),
    ("java.lang.Short", Some(OBJECT)),
    ("java.lang.Byte", Some(OBJECT)),
    ("java.lang.Class", Some(OBJECT)),
    ("java.lang.Override", Some(OBJECT)),
    ("java.lang.Deprecated", Some(OBJECT)),
    ("java.lang.SuppressWarnings", Some(OBJECT)),
    ("java.io.PrintStream", Some(OBJECT)),
    (THROWABLE, Some(OBJECT)),
    ("java.lang.Exception", Some(THROWABLE)),
    ("java.lang.Error", Some(THROWABLE)),
    ("java.lang.RuntimeException", Some("java.lang.Exception")),
    ("java.io.IOException", Some("java.lang.Exception")),
    (ASSERTION_ERROR, Some("java.lang.Error")),
    ("java.lang.StackOverflowError", Some("java.lang.Error")),
    ("java.lang.ArithmeticException", Some("java.lang.RuntimeException")),
    ("java.lang.NullPointerException", Some("java.lang.RuntimeException")),
    ("java.lang.IllegalArgumentException", Some("java.lang.RuntimeException")),
    ("java.lang.IllegalStateException", Some("java.lang.RuntimeException")),
    ("java.lang.UnsupportedOperationException", Some("java.lang.RuntimeException")),
    ("java.lang.ClassCastException", Some("java.lang.RuntimeException")),
    ("java.lang.NegativeArraySizeException", Some("java.lang.RuntimeException")),
    ("java.lang.IndexOutOfBoundsException", Some("java.lang.RuntimeException")),
    ("java.lang.ArrayIndexOutOfBoundsException", Some("java.lang.IndexOutOfBoundsException")),
    ("java.lang.StringIndexOutOfBoundsException", Some("java.lang.IndexOutOfBoundsException")),
    ("java.lang.NumberFormatException", Some("java.lang.IllegalArgumentException")),
    ("java.lang.ArrayStoreException", Some("java.lang.RuntimeException")),
    ("java.lang.LinkageError", Some("java.lang.Error")),
    ("java.lang.NoClassDefFoundError", Some("java.lang.LinkageError")),
    ("java.lang.IncompatibleClassChangeError", Some("java.lang.LinkageError")),
    ("java.lang.NoSuchFieldError", Some("java.lang.IncompatibleClassChangeError")),
    ("java.lang.NoSuchMethodError", Some("java.lang.IncompatibleClassChangeError")),
    ("java.lang.AbstractMethodError", Some("java.lang.IncompatibleClassChangeError")),
    ("java.lang.OutOfMemoryError", Some("java.lang.Error")),
    ("org.junit.Test", Some(OBJECT)),
    ("org.junit.Before", Some(OBJECT)),
    ("org.junit.After", Some(OBJECT)),
    ("org.junit.BeforeClass", Some(OBJECT)),
    ("org.junit.AfterClass", Some(OBJECT)),
    ("org.junit.Ignore", Some(OBJECT)),
    ("org.junit.Assert", Some(OBJECT)),
    ("org.junit.ComparisonFailure", Some(ASSERTION_ERROR)),
    ("org.junit.internal.ArrayComparisonFailure", Some(ASSERTION_ERROR)),
    ("junit.framework.Assert", Some(OBJECT)),
    (TEST_CASE, Some("junit.framework.Assert")),
    ("junit.framework.AssertionFailedError", Some(ASSERTION_ERROR)),
    ("junit.framework.ComparisonFailure", Some("junit.framework.AssertionFailedError")),
    ("org.junit.jupiter.api.Test", Some(OBJECT)),
    ("org.junit.jupiter.api.BeforeEach", Some(OBJECT)),
    ("org.junit.jupiter.api.AfterEach", Some(OBJECT)),
    ("org.junit.jupiter.api.BeforeAll", Some(OBJECT)),
    ("org.junit.jupiter.api.AfterAll", Some(OBJECT)),
    ("org.junit.jupiter.api.Disabled", Some(OBJECT)),
    ("org.junit.jupiter.api.DisplayName", Some(OBJECT)),
    ("org.junit.jupiter.api.Assertions", Some(OBJECT)),
    ("org.opentest4j.AssertionFailedError", Some(ASSERTION_ERROR)),
];

/// Which assertion library a call resolves to; the failure types differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertFlavor {
    JUnit4,
    JUnit3,
    Jupiter,
}

impl AssertFlavor {
    fn of_class(fqn: &str) -> Option<AssertFlavor> {
        match fqn {
            "org.junit.Assert" => Some(AssertFlavor::JUnit4),
            "junit.framework.Assert" | TEST_CASE => Some(AssertFlavor::JUnit3),
            "org.junit.jupiter.api.Assertions" => Some(AssertFlavor::Jupiter),
            _ => None,
        }
    }
}

pub const ASSERT_METHODS: &[&str] = &[
    "assertEquals",
    "assertNotEquals",
    "assertTrue",
    "assertFalse",
    "assertNull",
    "assertNotNull",
    "assertSame",
    "assertNotSame",
    "assertArrayEquals",
    "fail",
];

pub fn builtin_super(fqn: &str) -> Option<Option<&'static str>> {
    BUILTIN_CLASSES.iter().find(|(n, _)| *n == fqn).map(|(_, s)| *s)
}

pub fn is_builtin(fqn: &str) -> bool {
    builtin_super(fqn).is_some()
}

pub fn is_throwable_builtin(fqn: &str) -> bool {
    let mut cur = Some(fqn);
    while let Some(c) = cur {
        if c == THROWABLE {
            return true;
        }
        cur = builtin_super(c).flatten();
    }
    false
}

pub fn simple_name(fqn: &str) -> &str {
    fqn.rsplit('.').next().unwrap_or(fqn)
}

/// Boxed wrapper and `String` spellings used in type positions.
pub fn boxed_prim(name: &str) -> Option<Prim> {
    Some(match name.trim_start_matches("java.lang.") {
        "Integer" => Prim::Int,
        "Long" => Prim::Long,
        "Double" => Prim::Double,
        "Float" => Prim::Float,
        "Boolean" => Prim::Boolean,
        "Character" => Prim::Char,
        "Short" => Prim::Short,
        "Byte" => Prim::Byte,
        _ => return None,
    })
}

/// Static types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Prim(Prim),
    Null,
    Void,
    Class(String),
    Array(Box<Ty>),
    /// Error recovery; compatible with everything.
    Unknown,
}

impl Ty {
    pub fn string() -> Ty {
        Ty::Class(STRING.into())
    }
    pub fn object() -> Ty {
        Ty::Class(OBJECT.into())
    }
    pub fn is_string(&self) -> bool {
        matches!(self, Ty::Class(c) if c == STRING)
    }
    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Prim(p) if *p != Prim::Boolean) || *self == Ty::Unknown
    }
    pub fn is_integral(&self) -> bool {
        matches!(self, Ty::Prim(Prim::Byte | Prim::Short | Prim::Int | Prim::Long | Prim::Char))
            || *self == Ty::Unknown
    }
    pub fn is_boolean(&self) -> bool {
        matches!(self, Ty::Prim(Prim::Boolean)) || *self == Ty::Unknown
    }
    pub fn is_reference(&self) -> bool {
        matches!(self, Ty::Null | Ty::Class(_) | Ty::Array(_) | Ty::Unknown)
    }

    pub fn display(&self) -> String {
        match self {
            Ty::Prim(p) => prim_name(*p).to_string(),
            Ty::Null => "<null>".into(),
            Ty::Void => "void".into(),
            Ty::Class(c) => simple_name(c).to_string(),
            Ty::Array(e) => format!("{}[]", e.display()),
            Ty::Unknown => "?".into(),
        }
    }
}

pub fn boxed_name(p: Prim) -> &'static str {
    match p {
        Prim::Byte => "java.lang.Byte",
        Prim::Short => "java.lang.Short",
        Prim::Int => "java.lang.Integer",
        Prim::Long => "java.lang.Long",
        Prim::Float => "java.lang.Float",
        Prim::Double => "java.lang.Double",
        Prim::Boolean => "java.lang.Boolean",
        Prim::Char => "java.lang.Character",
    }
}

pub fn prim_name(p: Prim) -> &'static str {
    match p {
        Prim::Byte => "byte",
        Prim::Short => "short",
        Prim::Int => "int",
        Prim::Long => "long",
        Prim::Float => "float",
        Prim::Double => "double",
        Prim::Boolean => "boolean",
        Prim::Char => "char",
    }
}

fn prim_rank(p: Prim) -> u8 {
    match p {
        Prim::Byte => 1,
        Prim::Short | Prim::Char => 2,
        Prim::Int => 3,
        Prim::Long => 4,
        Prim::Float => 5,
        Prim::Double => 6,
        Prim::Boolean => 0,
    }
}

pub fn widens(from: Prim, to: Prim) -> bool {
    if from == to {
        return true;
    }
    if from == Prim::Boolean || to == Prim::Boolean || to == Prim::Char {
        return false;
    }
    if from == Prim::Char && to == Prim::Short {
        return false;
    }
    if from == Prim::Byte && to == Prim::Char {
        return false;
    }
    prim_rank(from) < prim_rank(to)
}

/// Binary numeric promotion.
pub fn promote(a: Prim, b: Prim) -> Prim {
    use Prim::*;
    if a == Double || b == Double {
        Double
    } else if a == Float || b == Float {
        Float
    } else if a == Long || b == Long {
        Long
    } else {
        Int
    }
}

pub fn unary_promote(a: Prim) -> Prim {
    match a {
        Prim::Byte | Prim::Short | Prim::Char => Prim::Int,
        other => other,
    }
}

pub struct ClassInfo {
    pub decl: ClassDecl,
    /// Resolved superclass fqn; `None` only for interfaces without parents.
    pub superclass: Option<String>,
    pub interfaces: Vec<String>,
}

/// All units of a compilation, with class names resolved.
pub struct Program {
    pub units: Vec<Unit>,
    pub classes: Vec<ClassInfo>,
    by_fqn: HashMap<String, usize>,
}

impl Program {
    pub fn new(units: Vec<Unit>, decls: Vec<ClassDecl>) -> Program {
        let by_fqn = decls.iter().enumerate().map(|(i, c)| (c.fqn.clone(), i)).collect();
        let classes = decls
            .into_iter()
            .map(|decl| ClassInfo {
                decl,
                superclass: None,
                interfaces: Vec::new(),
            })
            .collect();
        Program {
            units,
            classes,
            by_fqn,
        }
    }

    pub fn class_index(&self, fqn: &str) -> Option<usize> {
        self.by_fqn.get(fqn).copied()
    }

    pub fn class(&self, fqn: &str) -> Option<&ClassInfo> {
        self.class_index(fqn).map(|i| &self.classes[i])
    }

    pub fn exists(&self, fqn: &str) -> bool {
        self.by_fqn.contains_key(fqn) || is_builtin(fqn)
    }

    pub fn superclass_of(&self, fqn: &str) -> Option<String> {
        match self.class(fqn) {
            Some(c) => c.superclass.clone(),
            None => builtin_super(fqn).flatten().map(str::to_string),
        }
    }

    /// Class chain starting at `fqn` itself.
    pub fn chain(&self, fqn: &str) -> Vec<String> {
        let mut out = vec![fqn.to_string()];
        while let Some(s) = self.superclass_of(out.last().map(String::as_str).unwrap_or("")) {
            if out.contains(&s) {
                break;
            }
            out.push(s);
        }
        out
    }

    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        if sup == OBJECT {
            return true;
        }
        let mut todo = vec![sub.to_string()];
        let mut seen = Vec::new();
        while let Some(c) = todo.pop() {
            if c == sup {
                return true;
            }
            if seen.contains(&c) {
                continue;
            }
            if let Some(s) = self.superclass_of(&c) {
                todo.push(s);
            }
            if let Some(info) = self.class(&c) {
                todo.extend(info.interfaces.iter().cloned());
            }
            seen.push(c);
        }
        false
    }

    pub fn is_throwable(&self, fqn: &str) -> bool {
        self.is_subclass(fqn, THROWABLE)
    }

    pub fn extends_test_case(&self, fqn: &str) -> bool {
        self.is_subclass(fqn, TEST_CASE)
    }

    /// Resolves a class name as written in `unit`, from inside class
    /// `ctx` (if any).
    pub fn resolve_class(&self, unit: usize, ctx: Option<&str>, name: &str) -> Option<String> {
        let name = name.trim_end_matches("<>");
        let u = &self.units[unit];
        let pkg_prefix = u.package.as_deref().map(|p| format!("{p}.")).unwrap_or_default();
        if let Some((head, rest)) = name.split_once('.') {
            if self.exists(name) {
                return Some(name.to_string());
            }
            let outer = self.resolve_class(unit, ctx, head)?;
            let full = format!("{outer}.{rest}");
            return self.exists(&full).then_some(full);
        }
        // Nested classes visible from the context, innermost first.
        if let Some(ctx) = ctx {
            let mut scope = Some(ctx.to_string());
            while let Some(sc) = scope {
                if !self.by_fqn.contains_key(&sc) {
                    break;
                }
                if simple_name(&sc) == name {
                    return Some(sc);
                }
                for anc in self.chain(&sc) {
                    let cand = format!("{anc}.{name}");
                    if self.by_fqn.contains_key(&cand) {
                        return Some(cand);
                    }
                }
                scope = sc.rsplit_once('.').map(|(a, _)| a.to_string());
            }
        }
        let own = format!("{pkg_prefix}{name}");
        if self.by_fqn.get(&own).is_some_and(|&i| self.classes[i].decl.unit == unit) {
            return Some(own);
        }
        for imp in u.imports.iter().filter(|i| !i.is_static && !i.wildcard) {
            if simple_name(&imp.path) == name {
                return Some(imp.path.clone());
            }
        }
        if self.by_fqn.contains_key(&own) {
            return Some(own);
        }
        for imp in u.imports.iter().filter(|i| !i.is_static && i.wildcard) {
            let cand = format!("{}.{name}", imp.path);
            if self.exists(&cand) {
                return Some(cand);
            }
        }
        let lang = format!("java.lang.{name}");
        is_builtin(&lang).then_some(lang)
    }

    /// Resolves a written type. `Err` carries the unresolved class name.
    pub fn resolve_type(&self, unit: usize, ctx: Option<&str>, t: &TypeRef) -> Result<Ty, String> {
        Ok(match t {
            TypeRef::Prim(p) => Ty::Prim(*p),
            TypeRef::Void => Ty::Void,
            TypeRef::Infer => Ty::Unknown,
            TypeRef::Array(e) => Ty::Array(Box::new(self.resolve_type(unit, ctx, e)?)),
            TypeRef::Named(n) => {
                if let Some(p) = boxed_prim(n) {
                    return Ok(Ty::Prim(p));
                }
                match self.resolve_class(unit, ctx, n) {
                    Some(fqn) if self.exists(&fqn) => Ty::Class(fqn),
                    _ => return Err(n.trim_end_matches("<>").to_string()),
                }
            }
        })
    }

    /// The assertion library an unqualified call to `name` reaches from
    /// `class`, via inheritance or a static import.
    pub fn assert_flavor(&self, unit: usize, class: &str, name: &str) -> Option<AssertFlavor> {
        if !ASSERT_METHODS.contains(&name) {
            return None;
        }
        if self.extends_test_case(class) {
            return Some(AssertFlavor::JUnit3);
        }
        for imp in self.units[unit].imports.iter().filter(|i| i.is_static) {
            let (owner, member) = if imp.wildcard {
                (imp.path.as_str(), None)
            } else {
                match imp.path.rsplit_once('.') {
                    Some((o, m)) => (o, Some(m)),
                    None => continue,
                }
            };
            if member.is_some_and(|m| m != name) {
                continue;
            }
            if let Some(f) = AssertFlavor::of_class(owner) {
                return Some(f);
            }
        }
        None
    }

    pub fn assert_flavor_of_class(&self, fqn: &str) -> Option<AssertFlavor> {
        AssertFlavor::of_class(fqn)
    }

    pub fn is_assignable(&self, from: &Ty, to: &Ty) -> bool {
        match (from, to) {
            (Ty::Unknown, _) | (_, Ty::Unknown) => true,
            (Ty::Prim(a), Ty::Prim(b)) => widens(*a, *b),
            // Boxing into Object.
            (Ty::Prim(_), Ty::Class(c)) => c == OBJECT,
            (Ty::Null, Ty::Class(_) | Ty::Array(_)) => true,
            (Ty::Class(a), Ty::Class(b)) => self.is_subclass(a, b),
            (Ty::Array(_), Ty::Class(c)) => c == OBJECT,
            (Ty::Array(a), Ty::Array(b)) => match (&**a, &**b) {
                (Ty::Prim(x), Ty::Prim(y)) => x == y,
                (x, y) => self.is_assignable(x, y),
            },
            _ => false,
        }
    }

    /// Method candidates named `name` along the class chain of `fqn`,
    /// subclass first, overridden signatures dropped.
    pub fn methods_named(&self, fqn: &str, name: &str) -> Vec<(&ClassInfo, &MethodDecl)> {
        let mut out: Vec<(&ClassInfo, &MethodDecl)> = Vec::new();
        let mut classes: Vec<String> = self.chain(fqn);
        // Interfaces contribute default or abstract methods.
        let mut i = 0;
        while i < classes.len() {
            if let Some(info) = self.class(&classes[i]) {
                for itf in &info.interfaces {
                    if !classes.contains(itf) {
                        classes.push(itf.clone());
                    }
                }
            }
            i += 1;
        }
        for c in classes {
            let Some(info) = self.class(&c) else { continue };
            for m in info.decl.methods.iter().filter(|m| m.name == name) {
                let shadowed = out.iter().any(|(_, o)| {
                    o.params.len() == m.params.len()
                        && o.params.iter().zip(&m.params).all(|(a, b)| a.ty == b.ty)
                });
                if !shadowed {
                    out.push((info, m));
                }
            }
        }
        out
    }

    /// Field declaration visible as `name` from class `fqn`.
    pub fn find_field(&self, fqn: &str, name: &str) -> Option<(&ClassInfo, &FieldDecl)> {
        for c in self.chain(fqn) {
            let Some(info) = self.class(&c) else { continue };
            if let Some(f) = info.decl.fields.iter().find(|f| f.name == name) {
                return Some((info, f));
            }
            for itf in &info.interfaces {
                if let Some(r) = self.find_field(itf, name) {
                    return Some(r);
                }
            }
        }
        None
    }

    pub fn param_types(&self, owner: &ClassInfo, params: &[Param]) -> Vec<Ty> {
        params
            .iter()
            .map(|p| {
                self.resolve_type(owner.decl.unit, Some(&owner.decl.fqn), &p.ty)
                    .unwrap_or(Ty::Unknown)
            })
            .collect()
    }

    /// Picks the most specific applicable candidate for `args`.
    pub fn select<'a, T>(&self, cands: &'a [(Vec<Ty>, T)], args: &[Ty]) -> Option<&'a T> {
        let applicable: Vec<&(Vec<Ty>, T)> = cands
            .iter()
            .filter(|(ps, _)| ps.len() == args.len() && ps.iter().zip(args).all(|(p, a)| self.is_assignable(a, p)))
            .collect();
        let best = applicable.iter().find(|(ps, _)| {
            applicable
                .iter()
                .all(|(qs, _)| ps.iter().zip(qs).all(|(p, q)| self.is_assignable(p, q)))
        });
        best.or(applicable.first()).map(|(_, t)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widening() {
        assert!(widens(Prim::Int, Prim::Long));
        assert!(widens(Prim::Char, Prim::Int));
        assert!(!widens(Prim::Long, Prim::Int));
        assert!(!widens(Prim::Short, Prim::Char));
        assert!(!widens(Prim::Boolean, Prim::Int));
        assert_eq!(promote(Prim::Char, Prim::Int), Prim::Int);
        assert_eq!(promote(Prim::Int, Prim::Float), Prim::Float);
    }

    #[test]
    fn exception_hierarchy() {
        assert!(is_throwable_builtin("junit.framework.ComparisonFailure"));
        assert!(!is_throwable_builtin(STRING));
    }
}
