//! Static signatures of the supported library surface. The runtime side
//! lives in `rt`.

use crate::ast::Prim;
use crate::program::*;

fn int() -> Ty {
    Ty::Prim(Prim::Int)
}
fn long() -> Ty {
    Ty::Prim(Prim::Long)
}
fn double() -> Ty {
    Ty::Prim(Prim::Double)
}
fn boolean() -> Ty {
    Ty::Prim(Prim::Boolean)
}
fn char_() -> Ty {
    Ty::Prim(Prim::Char)
}

fn fits(prog: Option<&Program>, a: &Ty, p: &Ty) -> bool {
    match prog {
        Some(prog) => prog.is_assignable(a, p),
        None => match (a, p) {
            (Ty::Unknown, _) | (_, Ty::Unknown) => true,
            (Ty::Prim(x), Ty::Prim(y)) => widens(*x, *y),
            (Ty::Null, Ty::Class(_)) => true,
            (Ty::Class(x), Ty::Class(y)) => x == y || y == OBJECT,
            (Ty::Prim(_) | Ty::Array(_), Ty::Class(y)) => y == OBJECT,
            _ => false,
        },
    }
}

fn args_fit(args: &[Ty], params: &[Ty]) -> bool {
    args.len() == params.len() && args.iter().zip(params).all(|(a, p)| fits(None, a, p))
}

fn numeric(args: &[Ty]) -> Option<Prim> {
    let mut out: Option<Prim> = None;
    for a in args {
        match a {
            Ty::Prim(p) if *p != Prim::Boolean => out = Some(out.map_or(unary_promote(*p), |o| promote(o, *p))),
            Ty::Unknown => out = Some(out.unwrap_or(Prim::Int)),
            _ => return None,
        }
    }
    out
}

fn is_value(t: &Ty) -> bool {
    *t != Ty::Void
}

pub fn ctor_applicable(_prog: &Program, fqn: &str, args: &[Ty]) -> bool {
    let s = Ty::string();
    if is_throwable_builtin(fqn) {
        let thr = Ty::Class(THROWABLE.into());
        return args.is_empty()
            || args_fit(args, std::slice::from_ref(&s))
            || args_fit(args, &[s.clone(), thr.clone()])
            || (fqn == ASSERTION_ERROR && args.len() == 1 && is_value(&args[0]))
            || args.len() == 1 && matches!(&args[0], Ty::Class(c) if is_throwable_builtin(c));
    }
    match fqn {
        OBJECT => args.is_empty(),
        BUILDER => args.is_empty() || args_fit(args, &[s]) || args_fit(args, &[int()]),
        STRING => args.is_empty() || args_fit(args, &[s]) || args_fit(args, &[Ty::Array(Box::new(char_()))]),
        TEST_CASE => args.is_empty() || args_fit(args, &[s]),
        _ => false,
    }
}

pub fn static_field(class: &str, name: &str) -> Option<Ty> {
    Some(match (class, name) {
        ("java.lang.Integer", "MAX_VALUE" | "MIN_VALUE") => int(),
        ("java.lang.Long", "MAX_VALUE" | "MIN_VALUE") => long(),
        ("java.lang.Short", "MAX_VALUE" | "MIN_VALUE") => Ty::Prim(Prim::Short),
        ("java.lang.Byte", "MAX_VALUE" | "MIN_VALUE") => Ty::Prim(Prim::Byte),
        ("java.lang.Character", "MAX_VALUE" | "MIN_VALUE") => char_(),
        ("java.lang.Double", "MAX_VALUE" | "MIN_VALUE" | "NaN" | "POSITIVE_INFINITY" | "NEGATIVE_INFINITY") => {
            double()
        }
        ("java.lang.Math", "PI" | "E") => double(),
        ("java.lang.System", "out" | "err") => Ty::Class("java.io.PrintStream".into()),
        ("java.lang.Boolean", "TRUE" | "FALSE") => boolean(),
        _ => return None,
    })
}

pub fn static_method(class: &str, name: &str, args: &[Ty]) -> Option<Ty> {
    let s = Ty::string();
    let n = args.len();
    Some(match (class, name) {
        (STRING, "valueOf") if n == 1 && is_value(&args[0]) => s,
        (STRING, "join") if n >= 1 && args.iter().all(|a| fits(None, a, &s)) => s,
        ("java.lang.Math", "abs") if n == 1 => Ty::Prim(numeric(args)?),
        ("java.lang.Math", "max" | "min") if n == 2 => Ty::Prim(numeric(args)?),
        ("java.lang.Math", "round") if n == 1 => match numeric(args)? {
            Prim::Float | Prim::Int => int(),
            _ => long(),
        },
        ("java.lang.Math", "floorDiv" | "floorMod" | "addExact" | "multiplyExact" | "subtractExact") if n == 2 => {
            Ty::Prim(numeric(args)?)
        }
        ("java.lang.Math", "pow" | "hypot" | "atan2") if n == 2 => {
            numeric(args)?;
            double()
        }
        (
            "java.lang.Math",
            "sqrt" | "cbrt" | "floor" | "ceil" | "exp" | "log" | "log10" | "sin" | "cos" | "tan" | "signum" | "rint"
            | "toRadians" | "toDegrees",
        ) if n == 1 => {
            numeric(args)?;
            double()
        }
        ("java.lang.Integer", "parseInt") if args_fit(args, std::slice::from_ref(&s)) || args_fit(args, &[s.clone(), int()]) => int(),
        ("java.lang.Integer", "valueOf") if args_fit(args, std::slice::from_ref(&s)) || args_fit(args, &[int()]) => int(),
        ("java.lang.Integer", "toString" | "toBinaryString" | "toHexString" | "toOctalString")
            if args_fit(args, &[int()]) =>
        {
            s
        }
        ("java.lang.Integer", "max" | "min" | "sum" | "compare") if args_fit(args, &[int(), int()]) => int(),
        ("java.lang.Integer", "bitCount" | "signum" | "reverse" | "highestOneBit" | "lowestOneBit")
            if args_fit(args, &[int()]) =>
        {
            int()
        }
        ("java.lang.Long", "parseLong") if args_fit(args, std::slice::from_ref(&s)) => long(),
        ("java.lang.Long", "valueOf") if args_fit(args, std::slice::from_ref(&s)) || args_fit(args, &[long()]) => long(),
        ("java.lang.Long", "toString") if args_fit(args, &[long()]) => s,
        ("java.lang.Long", "max" | "min" | "sum") if args_fit(args, &[long(), long()]) => long(),
        ("java.lang.Long", "compare") if args_fit(args, &[long(), long()]) => int(),
        ("java.lang.Double", "parseDouble") if args_fit(args, std::slice::from_ref(&s)) => double(),
        ("java.lang.Double", "valueOf") if args_fit(args, std::slice::from_ref(&s)) || args_fit(args, &[double()]) => double(),
        ("java.lang.Double", "toString") if args_fit(args, &[double()]) => s,
        ("java.lang.Double", "compare") if args_fit(args, &[double(), double()]) => int(),
        ("java.lang.Double", "max" | "min" | "sum") if args_fit(args, &[double(), double()]) => double(),
        ("java.lang.Double", "isNaN" | "isInfinite" | "isFinite") if args_fit(args, &[double()]) => boolean(),
        ("java.lang.Boolean", "parseBoolean") if args_fit(args, std::slice::from_ref(&s)) => boolean(),
        ("java.lang.Boolean", "valueOf") if args_fit(args, std::slice::from_ref(&s)) || args_fit(args, &[boolean()]) => boolean(),
        ("java.lang.Boolean", "toString") if args_fit(args, &[boolean()]) => s,
        ("java.lang.Boolean", "compare") if args_fit(args, &[boolean(), boolean()]) => int(),
        (
            "java.lang.Character",
            "isDigit" | "isLetter" | "isLetterOrDigit" | "isWhitespace" | "isUpperCase" | "isLowerCase"
            | "isAlphabetic" | "isSpaceChar",
        ) if args_fit(args, &[int()]) => boolean(),
        ("java.lang.Character", "toUpperCase" | "toLowerCase") if args_fit(args, &[char_()]) => char_(),
        ("java.lang.Character", "getNumericValue") if args_fit(args, &[int()]) => int(),
        ("java.lang.Character", "toString") if args_fit(args, &[char_()]) => s,
        ("java.lang.Character", "valueOf") if args_fit(args, &[char_()]) => char_(),
        ("java.lang.Character", "compare") if args_fit(args, &[char_(), char_()]) => int(),
        ("java.lang.System", "currentTimeMillis" | "nanoTime") if n == 0 => long(),
        ("java.lang.System", "lineSeparator") if n == 0 => s,
        ("java.lang.System", "identityHashCode") if n == 1 => int(),
        ("java.lang.System", "arraycopy") if n == 5 => Ty::Void,
        _ => return None,
    })
}

pub fn is_instance_method(prog: &Program, class: &str, name: &str) -> bool {
    // Probe with an empty argument list, then a single wildcard.
    [0, 1, 2, 3]
        .iter()
        .any(|&n| instance_method(prog, class, name, &vec![Ty::Unknown; n]).is_some())
}

pub fn instance_method(prog: &Program, class: &str, name: &str, args: &[Ty]) -> Option<Ty> {
    let s = Ty::string();
    let sb = Ty::Class(BUILDER.into());
    let n = args.len();
    let any1 = n == 1 && is_value(&args[0]);
    if class == STRING {
        return Some(match name {
            "length" | "hashCode" if n == 0 => int(),
            "isEmpty" | "isBlank" if n == 0 => boolean(),
            "charAt" if args_fit(args, &[int()]) => char_(),
            "codePointAt" if args_fit(args, &[int()]) => int(),
            "substring" if args_fit(args, &[int()]) || args_fit(args, &[int(), int()]) => s,
            "indexOf" | "lastIndexOf"
                if args_fit(args, std::slice::from_ref(&s))
                    || args_fit(args, &[int()])
                    || args_fit(args, &[s.clone(), int()])
                    || args_fit(args, &[int(), int()]) =>
            {
                int()
            }
            "contains" | "startsWith" | "endsWith" | "equalsIgnoreCase"
                if args_fit(args, std::slice::from_ref(&s)) || (name == "startsWith" && args_fit(args, &[s.clone(), int()])) =>
            {
                boolean()
            }
            "equals" if any1 => boolean(),
            "compareTo" | "compareToIgnoreCase" if args_fit(args, std::slice::from_ref(&s)) => int(),
            "toUpperCase" | "toLowerCase" | "trim" | "strip" | "stripLeading" | "stripTrailing" | "intern"
            | "toString"
                if n == 0 =>
            {
                s
            }
            "replace" if args_fit(args, &[char_(), char_()]) || args_fit(args, &[s.clone(), s.clone()]) => s,
            "concat" if args_fit(args, std::slice::from_ref(&s)) => s,
            "repeat" if args_fit(args, &[int()]) => s,
            "toCharArray" if n == 0 => Ty::Array(Box::new(char_())),
            _ => return None,
        });
    }
    if class == BUILDER {
        return Some(match name {
            "append" if any1 => sb,
            "insert" if n == 2 && fits(None, &args[0], &int()) && is_value(&args[1]) => sb,
            "reverse" if n == 0 => sb,
            "deleteCharAt" if args_fit(args, &[int()]) => sb,
            "delete" | "replace" if args_fit(args, &[int(), int()]) || args_fit(args, &[int(), int(), s.clone()]) => sb,
            "toString" if n == 0 => s,
            "length" if n == 0 => int(),
            "isEmpty" if n == 0 => boolean(),
            "charAt" if args_fit(args, &[int()]) => char_(),
            "indexOf" if args_fit(args, std::slice::from_ref(&s)) => int(),
            "setLength" if args_fit(args, &[int()]) => Ty::Void,
            "setCharAt" if args_fit(args, &[int(), char_()]) => Ty::Void,
            _ => return None,
        });
    }
    if class == "java.io.PrintStream" {
        return match name {
            "println" if n == 0 || any1 => Some(Ty::Void),
            "print" if any1 => Some(Ty::Void),
            _ => None,
        };
    }
    if class == THROWABLE {
        match name {
            "getMessage" | "getLocalizedMessage" if n == 0 => return Some(s),
            "getCause" if n == 0 => return Some(Ty::Class(THROWABLE.into())),
            _ => {}
        }
    }
    if class == OBJECT {
        return Some(match name {
            "equals" if any1 => boolean(),
            "hashCode" if n == 0 => int(),
            "toString" if n == 0 => s,
            _ => return None,
        });
    }
    let _ = prog;
    None
}

/// Arity and shape of the assertion entry points. Messages come first for
/// JUnit 3 and 4 and last for Jupiter.
pub fn assertion_applicable(flavor: AssertFlavor, name: &str, args: &[Ty]) -> bool {
    let s = Ty::string();
    let n = args.len();
    let is_str = |t: &Ty| fits(None, t, &s);
    let (msg_ok, rest): (bool, &[Ty]) = match flavor {
        AssertFlavor::Jupiter => {
            let core = match name {
                "fail" => 0,
                "assertTrue" | "assertFalse" | "assertNull" | "assertNotNull" => 1,
                _ => 2,
            };
            let extra = if matches!(name, "assertEquals" | "assertNotEquals" | "assertArrayEquals")
                && n >= 3
                && args[2..].iter().any(|t| t.is_numeric() && *t != Ty::Unknown)
            {
                1
            } else {
                0
            };
            if n == core + extra + 1 {
                (is_str(&args[n - 1]), &args[..n - 1])
            } else {
                (true, args)
            }
        }
        _ => {
            let core = match name {
                "fail" => 0,
                "assertTrue" | "assertFalse" | "assertNull" | "assertNotNull" => 1,
                _ => 2,
            };
            let delta = matches!(name, "assertEquals" | "assertNotEquals" | "assertArrayEquals")
                && n >= 3
                && args[n - 1].is_numeric()
                && args[n - 2].is_numeric()
                && args[n - 3].is_numeric();
            let expect = core + usize::from(delta);
            if n == expect + 1 {
                (is_str(&args[0]), &args[1..])
            } else {
                (true, args)
            }
        }
    };
    if !msg_ok {
        return false;
    }
    let m = rest.len();
    match name {
        "fail" => m == 0,
        "assertTrue" | "assertFalse" => m == 1 && rest[0].is_boolean(),
        "assertNull" | "assertNotNull" => m == 1 && is_value(&rest[0]),
        "assertSame" | "assertNotSame" => m == 2,
        "assertEquals" | "assertNotEquals" => {
            (m == 2 && is_value(&rest[0]) && is_value(&rest[1]))
                || (m == 3 && rest.iter().all(Ty::is_numeric))
        }
        "assertArrayEquals" => {
            (m == 2 || m == 3)
                && rest[..2]
                    .iter()
                    .all(|t| matches!(t, Ty::Array(_) | Ty::Null | Ty::Unknown))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assertion_shapes() {
        let s = Ty::string();
        assert!(assertion_applicable(AssertFlavor::JUnit4, "assertEquals", &[s.clone(), int(), int()]));
        assert!(assertion_applicable(AssertFlavor::JUnit4, "assertEquals", &[double(), double(), double()]));
        assert!(assertion_applicable(AssertFlavor::Jupiter, "assertEquals", &[int(), int(), s.clone()]));
        assert!(assertion_applicable(AssertFlavor::JUnit4, "assertTrue", &[s.clone(), boolean()]));
        assert!(!assertion_applicable(AssertFlavor::JUnit4, "assertTrue", &[int()]));
        assert!(!assertion_applicable(AssertFlavor::JUnit4, "assertTrue", &[boolean(), s]));
    }

    #[test]
    fn math_types_follow_promotion() {
        assert_eq!(static_method("java.lang.Math", "max", &[int(), long()]), Some(long()));
        assert_eq!(static_method("java.lang.Math", "abs", &[char_()]), Some(int()));
        assert_eq!(static_method("java.lang.Math", "abs", &[boolean()]), None);
    }
}
