//! Runtime behavior of library classes and the JUnit assertion families.

use std::cell::RefCell;
use std::rc::Rc;

use crate::interp::{Abrupt, Interp, R};
use crate::program::*;
use crate::value::*;

fn identity_hash(id: u32) -> i32 {
    (id.wrapping_mul(0x9e37_79b9) >> 1) as i32
}

fn java_string_hash(s: &str) -> i32 {
    s.encode_utf16().fold(0i32, |h, c| h.wrapping_mul(31).wrapping_add(c as i32))
}

fn trim_java(s: &str) -> &str {
    s.trim_matches(|c: char| (c as u32) <= 0x20)
}

impl<'p> Interp<'p> {
    /// `String.valueOf` for values that need no user code.
    pub fn plain_string(&self, v: &Value) -> String {
        match v {
            Value::Int(i) => i.to_string(),
            Value::Long(l) => l.to_string(),
            Value::Float(f) => java_float(*f),
            Value::Double(d) => java_double(*d),
            Value::Bool(b) => b.to_string(),
            Value::Char(c) => char_string(*c),
            Value::Null => "null".into(),
            Value::Str(s) => s.to_string(),
            Value::Builder(b, _) => b.borrow().clone(),
            Value::Arr(a) => {
                let code = match &a.elem {
                    Ty::Prim(p) => match prim_name(*p) {
                        "boolean" => "Z".to_string(),
                        "long" => "J".to_string(),
                        other => other[..1].to_uppercase(),
                    },
                    other => format!("L{};", other.display()),
                };
                format!("[{code}@{:x}", identity_hash(a.id))
            }
            Value::Obj(o) => {
                if self.prog.is_throwable(&o.class) {
                    match o.fields.borrow().get("message") {
                        Some(Value::Str(m)) => format!("{}: {m}", o.class),
                        _ => o.class.clone(),
                    }
                } else if o.class == "java.lang.Class" {
                    let name = o.fields.borrow().get("name").map(|n| self.plain_string(n));
                    format!("class {}", name.unwrap_or_default())
                } else {
                    format!("{}@{:x}", o.class, identity_hash(o.id))
                }
            }
        }
    }

    /// `String.valueOf`, running a user `toString()` when there is one.
    pub fn to_jstring(&mut self, v: &Value) -> R<String> {
        if let Value::Obj(o) = v {
            if self.prog.class(&o.class).is_some() {
                if let Some(r) = self.dispatch(&o.class.clone(), "toString", Some(o.clone()), Vec::new())? {
                    return Ok(self.plain_string(&r));
                }
            }
        }
        Ok(self.plain_string(v))
    }

    /// `Object.equals` with user overrides and boxed-value semantics.
    pub fn jequals(&mut self, a: &Value, b: &Value) -> R<bool> {
        match (a, b) {
            (Value::Null, _) => Ok(b.is_null()),
            (Value::Str(x), Value::Str(y)) => Ok(x == y),
            (Value::Obj(o), _) if self.prog.class(&o.class).is_some() => {
                match self.dispatch(&o.class.clone(), "equals", Some(o.clone()), vec![b.clone()])? {
                    Some(r) => Ok(r.as_bool()),
                    None => Ok(a.same(b)),
                }
            }
            (Value::Bool(x), Value::Bool(y)) => Ok(x == y),
            _ => match (num(a), num(b)) {
                // Boxed equality: same wrapper type and value.
                (Some(x), Some(y)) => Ok(std::mem::discriminant(a) == std::mem::discriminant(b) && match (x, y) {
                    (Num::D(p), Num::D(q)) => p.to_bits() == q.to_bits(),
                    (Num::F(p), Num::F(q)) => p.to_bits() == q.to_bits(),
                    _ => x.to_i64() == y.to_i64(),
                }),
                _ => Ok(a.same(b)),
            },
        }
    }

    fn str_arg(&mut self, v: &Value) -> R<Rc<str>> {
        match v {
            Value::Str(s) => Ok(s.clone()),
            Value::Null => Err(self.npe("read string")),
            other => {
                let s = self.plain_string(other);
                Ok(Rc::from(s))
            }
        }
    }

    fn sioobe(&mut self, msg: String) -> Abrupt {
        self.throw("java.lang.StringIndexOutOfBoundsException", Some(msg))
    }

    pub fn new_builtin(&mut self, fqn: &str, args: Vec<Value>) -> R<Value> {
        if is_throwable_builtin(fqn) {
            let v = self.make_throwable(fqn, None);
            if let Value::Obj(o) = &v {
                let mut f = o.fields.borrow_mut();
                match args.as_slice() {
                    [] => {}
                    [Value::Obj(c)] if self.prog.is_throwable(&c.class) => {
                        let text = self.plain_string(&Value::Obj(c.clone()));
                        f.insert("message".into(), self.str_value(text));
                        f.insert("cause".into(), Value::Obj(c.clone()));
                    }
                    [m @ (Value::Str(_) | Value::Null)] => {
                        f.insert("message".into(), m.clone());
                    }
                    [other] => {
                        let text = self.plain_string(other);
                        f.insert("message".into(), self.str_value(text));
                    }
                    [m, c, ..] => {
                        f.insert("message".into(), m.clone());
                        f.insert("cause".into(), c.clone());
                    }
                }
            }
            return Ok(v);
        }
        match fqn {
            BUILDER => {
                let init = match args.first() {
                    Some(Value::Str(s)) => s.to_string(),
                    Some(Value::Null) => return Err(self.npe("create StringBuilder")),
                    _ => String::new(),
                };
                let id = self.fresh_id();
                Ok(Value::Builder(Rc::new(RefCell::new(init)), id))
            }
            STRING => Ok(match args.first() {
                Some(Value::Str(s)) => self.str_value(s.to_string()),
                Some(Value::Arr(a)) => {
                    let units: Vec<u16> = a
                        .data
                        .borrow()
                        .iter()
                        .map(|v| match v {
                            Value::Char(c) => *c,
                            _ => 0,
                        })
                        .collect();
                    self.str_value(String::from_utf16_lossy(&units))
                }
                _ => self.str_value(""),
            }),
            _ => {
                let id = self.fresh_id();
                Ok(Value::Obj(Rc::new(Obj {
                    class: fqn.to_string(),
                    fields: RefCell::new(Default::default()),
                    id,
                })))
            }
        }
    }

    pub fn builtin_static_call(&mut self, class: &str, name: &str, args: Vec<Value>) -> R<Value> {
        let a0 = args.first().cloned().unwrap_or(Value::Null);
        let a1 = args.get(1).cloned().unwrap_or(Value::Null);
        let n0 = num(&a0);
        let n1 = num(&a1);
        let d0 = n0.map_or(0.0, Num::to_f64);
        let d1 = n1.map_or(0.0, Num::to_f64);
        let short = class.rsplit('.').next().unwrap_or(class);
        let nfe = |me: &mut Self, s: &str| me.throw("java.lang.NumberFormatException", Some(format!("For input string: \"{s}\"")));
        Ok(match (short, name) {
            ("String", "valueOf") => {
                let s = self.to_jstring(&a0)?;
                self.str_value(s)
            }
            ("String", "join") => {
                let sep = self.str_arg(&a0)?;
                let mut parts = Vec::new();
                for p in &args[1..] {
                    parts.push(self.to_jstring(p)?);
                }
                self.str_value(parts.join(&sep))
            }
            ("Math", "abs") => match n0 {
                Some(Num::I(i)) => Value::Int(i.wrapping_abs()),
                Some(Num::L(l)) => Value::Long(l.wrapping_abs()),
                Some(Num::F(f)) => Value::Float(f.abs()),
                _ => Value::Double(d0.abs()),
            },
            ("Math", "max" | "min") => {
                let (x, y) = promote_pair(n0.unwrap_or(Num::I(0)), n1.unwrap_or(Num::I(0)));
                let pick_first = match (x, y) {
                    (Num::I(p), Num::I(q)) => (p >= q) == (name == "max"),
                    (Num::L(p), Num::L(q)) => (p >= q) == (name == "max"),
                    (p, q) => {
                        let (p, q) = (p.to_f64(), q.to_f64());
                        if p.is_nan() {
                            true
                        } else if q.is_nan() {
                            false
                        } else {
                            (p >= q) == (name == "max")
                        }
                    }
                };
                if pick_first { x } else { y }.value()
            }
            ("Math", "round") => match n0 {
                Some(Num::F(f)) => Value::Int((f as f64 + 0.5).floor() as i32),
                Some(Num::I(i)) => Value::Int(i),
                _ => Value::Long((d0 + 0.5).floor() as i64),
            },
            ("Math", "floorDiv" | "floorMod") => {
                let (x, y) = promote_pair(n0.unwrap_or(Num::I(0)), n1.unwrap_or(Num::I(1)));
                if y.to_i64() == 0 {
                    return Err(self.throw("java.lang.ArithmeticException", Some("/ by zero".into())));
                }
                let (p, q) = (x.to_i64(), y.to_i64());
                let r = if name == "floorDiv" { p.div_euclid(q) - i64::from(q < 0 && p.rem_euclid(q) != 0) } else { ((p % q) + q) % q };
                match x {
                    Num::I(_) => Value::Int(r as i32),
                    _ => Value::Long(r),
                }
            }
            ("Math", "addExact" | "subtractExact" | "multiplyExact") => {
                let (x, y) = promote_pair(n0.unwrap_or(Num::I(0)), n1.unwrap_or(Num::I(0)));
                let r = match (x, y, name) {
                    (Num::I(p), Num::I(q), "addExact") => p.checked_add(q).map(Value::Int),
                    (Num::I(p), Num::I(q), "subtractExact") => p.checked_sub(q).map(Value::Int),
                    (Num::I(p), Num::I(q), _) => p.checked_mul(q).map(Value::Int),
                    (p, q, "addExact") => p.to_i64().checked_add(q.to_i64()).map(Value::Long),
                    (p, q, "subtractExact") => p.to_i64().checked_sub(q.to_i64()).map(Value::Long),
                    (p, q, _) => p.to_i64().checked_mul(q.to_i64()).map(Value::Long),
                };
                match r {
                    Some(v) => v,
                    None => {
                        let what = if matches!(x, Num::I(_)) { "integer" } else { "long" };
                        return Err(self.throw("java.lang.ArithmeticException", Some(format!("{what} overflow"))));
                    }
                }
            }
            ("Math", f) => Value::Double(match f {
                "pow" => d0.powf(d1),
                "hypot" => d0.hypot(d1),
                "atan2" => d0.atan2(d1),
                "sqrt" => d0.sqrt(),
                "cbrt" => d0.cbrt(),
                "floor" => d0.floor(),
                "ceil" => d0.ceil(),
                "exp" => d0.exp(),
                "log" => d0.ln(),
                "log10" => d0.log10(),
                "sin" => d0.sin(),
                "cos" => d0.cos(),
                "tan" => d0.tan(),
                "rint" => {
                    let r = d0.round();
                    if (d0 - d0.trunc()).abs() == 0.5 && r % 2.0 != 0.0 {
                        r - d0.signum()
                    } else {
                        r
                    }
                }
                "signum" => {
                    if d0 == 0.0 || d0.is_nan() {
                        d0
                    } else {
                        d0.signum()
                    }
                }
                "toRadians" => d0.to_radians(),
                "toDegrees" => d0.to_degrees(),
                _ => f64::NAN,
            }),
            ("Integer", "parseInt") | ("Integer", "valueOf") if matches!(a0, Value::Str(_) | Value::Null) => {
                let s = match &a0 {
                    Value::Str(s) => s.clone(),
                    _ => return Err(self.throw("java.lang.NumberFormatException", Some("Cannot parse null string: null".into()))),
                };
                let radix = n1.map_or(10, |r| r.to_i64() as u32);
                match parse_java_int(&s, radix).and_then(|v| i32::try_from(v).ok()) {
                    Some(v) => Value::Int(v),
                    None => return Err(nfe(self, &s)),
                }
            }
            ("Integer", "valueOf") => convert(a0, crate::ast::Prim::Int),
            ("Integer", "toString") => self.str_value(a0.as_int().to_string()),
            ("Integer", "toBinaryString") => self.str_value(format!("{:b}", a0.as_int() as u32)),
            ("Integer", "toHexString") => self.str_value(format!("{:x}", a0.as_int() as u32)),
            ("Integer", "toOctalString") => self.str_value(format!("{:o}", a0.as_int() as u32)),
            ("Integer", "max") => Value::Int(a0.as_int().max(a1.as_int())),
            ("Integer", "min") => Value::Int(a0.as_int().min(a1.as_int())),
            ("Integer", "sum") => Value::Int(a0.as_int().wrapping_add(a1.as_int())),
            ("Integer", "compare") => Value::Int(a0.as_int().cmp(&a1.as_int()) as i32),
            ("Integer", "bitCount") => Value::Int(a0.as_int().count_ones() as i32),
            ("Integer", "signum") => Value::Int(a0.as_int().signum()),
            ("Integer", "reverse") => Value::Int(a0.as_int().reverse_bits()),
            ("Integer", "highestOneBit") => {
                let v = a0.as_int() as u32;
                Value::Int(if v == 0 { 0 } else { (1u32 << (31 - v.leading_zeros())) as i32 })
            }
            ("Integer", "lowestOneBit") => {
                let v = a0.as_int();
                Value::Int(v & v.wrapping_neg())
            }
            ("Long", "parseLong") | ("Long", "valueOf") if matches!(a0, Value::Str(_) | Value::Null) => {
                let s = self.str_arg(&a0)?;
                match parse_java_int(&s, 10) {
                    Some(v) => Value::Long(v),
                    None => return Err(nfe(self, &s)),
                }
            }
            ("Long", "valueOf") => convert(a0, crate::ast::Prim::Long),
            ("Long", "toString") => self.str_value(n0.map_or(0, Num::to_i64).to_string()),
            ("Long", "max") => Value::Long(n0.map_or(0, Num::to_i64).max(n1.map_or(0, Num::to_i64))),
            ("Long", "min") => Value::Long(n0.map_or(0, Num::to_i64).min(n1.map_or(0, Num::to_i64))),
            ("Long", "sum") => Value::Long(n0.map_or(0, Num::to_i64).wrapping_add(n1.map_or(0, Num::to_i64))),
            ("Long", "compare") => Value::Int(n0.map_or(0, Num::to_i64).cmp(&n1.map_or(0, Num::to_i64)) as i32),
            ("Double", "parseDouble") | ("Double", "valueOf") if matches!(a0, Value::Str(_) | Value::Null) => {
                let s = self.str_arg(&a0)?;
                match parse_java_double(&s) {
                    Some(v) => Value::Double(v),
                    None => return Err(nfe(self, &s)),
                }
            }
            ("Double", "valueOf") => Value::Double(d0),
            ("Double", "toString") => self.str_value(java_double(d0)),
            ("Double", "compare") => Value::Int(java_double_compare(d0, d1)),
            ("Double", "max") => Value::Double(if d0.is_nan() || d1.is_nan() { f64::NAN } else { d0.max(d1) }),
            ("Double", "min") => Value::Double(if d0.is_nan() || d1.is_nan() { f64::NAN } else { d0.min(d1) }),
            ("Double", "sum") => Value::Double(d0 + d1),
            ("Double", "isNaN") => Value::Bool(d0.is_nan()),
            ("Double", "isInfinite") => Value::Bool(d0.is_infinite()),
            ("Double", "isFinite") => Value::Bool(d0.is_finite()),
            ("Boolean", "parseBoolean") => Value::Bool(matches!(&a0, Value::Str(s) if s.eq_ignore_ascii_case("true"))),
            ("Boolean", "valueOf") => match &a0 {
                Value::Str(s) => Value::Bool(s.eq_ignore_ascii_case("true")),
                Value::Null => Value::Bool(false),
                other => other.clone(),
            },
            ("Boolean", "toString") => self.str_value(a0.as_bool().to_string()),
            ("Boolean", "compare") => Value::Int(a0.as_bool().cmp(&a1.as_bool()) as i32),
            ("Character", f) => {
                let code = n0.map_or(0, Num::to_i64) as u32;
                let c = char::from_u32(code).unwrap_or('\u{fffd}');
                match f {
                    "isDigit" => Value::Bool(c.is_numeric() && c.is_ascii_digit() || c.is_numeric() && !c.is_ascii()),
                    "isLetter" | "isAlphabetic" => Value::Bool(c.is_alphabetic()),
                    "isLetterOrDigit" => Value::Bool(c.is_alphanumeric()),
                    "isWhitespace" => Value::Bool(c.is_whitespace() && c != '\u{a0}'),
                    "isSpaceChar" => Value::Bool(c == ' ' || c == '\u{a0}'),
                    "isUpperCase" => Value::Bool(c.is_uppercase()),
                    "isLowerCase" => Value::Bool(c.is_lowercase()),
                    "toUpperCase" => Value::Char(c.to_uppercase().next().map_or(code as u16, |u| u as u32 as u16)),
                    "toLowerCase" => Value::Char(c.to_lowercase().next().map_or(code as u16, |u| u as u32 as u16)),
                    "getNumericValue" => Value::Int(c.to_digit(36).map_or(-1, |d| d as i32)),
                    "toString" => self.str_value(c.to_string()),
                    "valueOf" => Value::Char(code as u16),
                    "compare" => Value::Int(code as i32 - n1.map_or(0, Num::to_i64) as i32),
                    _ => return Err(self.throw("java.lang.NoSuchMethodError", Some(name.to_string()))),
                }
            }
            ("System", "currentTimeMillis") => Value::Long(
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_millis() as i64),
            ),
            ("System", "nanoTime") => Value::Long(
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_nanos() as i64),
            ),
            ("System", "lineSeparator") => self.str_value("\n"),
            ("System", "identityHashCode") => Value::Int(match &a0 {
                Value::Obj(o) => identity_hash(o.id),
                Value::Arr(a) => identity_hash(a.id),
                Value::Builder(_, id) => identity_hash(*id),
                Value::Str(s) => java_string_hash(s),
                _ => 0,
            }),
            ("System", "arraycopy") => {
                let (Value::Arr(src), Value::Arr(dst)) = (&a0, &args[2]) else {
                    return Err(self.npe("copy array"));
                };
                let sp = a1.as_int();
                let dp = args[3].as_int();
                let len = args[4].as_int();
                let (sl, dl) = (src.data.borrow().len() as i64, dst.data.borrow().len() as i64);
                if sp < 0 || dp < 0 || len < 0 || sp as i64 + len as i64 > sl || dp as i64 + len as i64 > dl {
                    return Err(self.throw(
                        "java.lang.ArrayIndexOutOfBoundsException",
                        Some(format!("arraycopy: last source index {} out of bounds for length {sl}", sp as i64 + len as i64)),
                    ));
                }
                let chunk: Vec<Value> = src.data.borrow()[sp as usize..(sp + len) as usize].to_vec();
                dst.data.borrow_mut()[dp as usize..(dp + len) as usize].clone_from_slice(&chunk);
                Value::Null
            }
            _ => return Err(self.throw("java.lang.NoSuchMethodError", Some(format!("{class}.{name}")))),
        })
    }

    pub fn builtin_instance_call(&mut self, recv: &Value, name: &str, args: Vec<Value>, implicit: bool) -> R<Value> {
        let a0 = args.first().cloned().unwrap_or(Value::Null);
        let a1 = args.get(1).cloned().unwrap_or(Value::Null);
        match recv {
            Value::Null if !implicit => return Err(self.npe(&format!("invoke \"{name}()\""))),
            Value::Str(s) => return self.string_method(s.clone(), name, &args),
            Value::Builder(b, id) => return self.builder_method(recv, b.clone(), *id, name, &args),
            Value::Arr(a) if name == "clone" => {
                let data = a.data.borrow().clone();
                return Ok(Value::Arr(Rc::new(Arr {
                    elem: a.elem.clone(),
                    data: RefCell::new(data),
                    id: self.fresh_id(),
                })));
            }
            Value::Obj(o) if o.class == "java.io.PrintStream" => return Ok(Value::Null),
            Value::Obj(o) if self.prog.is_throwable(&o.class) => match name {
                "getMessage" | "getLocalizedMessage" => {
                    return Ok(o.fields.borrow().get("message").cloned().unwrap_or(Value::Null))
                }
                "getCause" => return Ok(o.fields.borrow().get("cause").cloned().unwrap_or(Value::Null)),
                _ => {}
            },
            _ => {}
        }
        Ok(match name {
            "equals" => Value::Bool(self.jequals(recv, &a0)?),
            "hashCode" => Value::Int(match recv {
                Value::Obj(o) => identity_hash(o.id),
                Value::Arr(a) => identity_hash(a.id),
                Value::Int(i) => *i,
                Value::Char(c) => *c as i32,
                Value::Bool(b) => if *b { 1231 } else { 1237 },
                Value::Long(l) => (*l ^ (*l >> 32)) as i32,
                Value::Double(d) => {
                    let b = d.to_bits();
                    (b ^ (b >> 32)) as i32
                }
                _ => 0,
            }),
            "toString" => {
                let s = self.plain_string(recv);
                self.str_value(s)
            }
            "compareTo" => match (num(recv), num(&a0)) {
                (Some(x), Some(y)) => Value::Int(java_double_compare(x.to_f64(), y.to_f64())),
                _ => Value::Int(0),
            },
            _ => {
                let _ = a1;
                return Err(self.throw("java.lang.NoSuchMethodError", Some(name.to_string())));
            }
        })
    }

    fn string_method(&mut self, s: Rc<str>, name: &str, args: &[Value]) -> R<Value> {
        let a0 = args.first().cloned().unwrap_or(Value::Null);
        let a1 = args.get(1).cloned().unwrap_or(Value::Null);
        let units = || utf16(&s);
        let from16 = |u: &[u16]| String::from_utf16_lossy(u);
        Ok(match name {
            "length" => Value::Int(s.encode_utf16().count() as i32),
            "isEmpty" => Value::Bool(s.is_empty()),
            "isBlank" => Value::Bool(s.trim().is_empty()),
            "hashCode" => Value::Int(java_string_hash(&s)),
            "charAt" | "codePointAt" => {
                let u = units();
                let i = a0.as_int();
                match usize::try_from(i).ok().and_then(|i| u.get(i)) {
                    Some(c) if name == "charAt" => Value::Char(*c),
                    Some(c) => Value::Int(*c as i32),
                    None => {
                        return Err(self.sioobe(format!("Index {i} out of bounds for length {}", u.len())));
                    }
                }
            }
            "substring" => {
                let u = units();
                let len = u.len() as i32;
                let b = a0.as_int();
                let e = if args.len() > 1 { a1.as_int() } else { len };
                if b < 0 || e > len || b > e {
                    return Err(self.sioobe(format!("begin {b}, end {e}, length {len}")));
                }
                self.str_value(from16(&u[b as usize..e as usize]))
            }
            "indexOf" | "lastIndexOf" => {
                let u = units();
                let needle: Vec<u16> = match &a0 {
                    Value::Str(n) => utf16(n),
                    Value::Null => return Err(self.npe("search string")),
                    other => vec![other.as_int() as u16],
                };
                let from = if args.len() > 1 { Some(a1.as_int()) } else { None };
                Value::Int(find16(&u, &needle, from, name == "lastIndexOf"))
            }
            "contains" | "startsWith" | "endsWith" | "equalsIgnoreCase" | "compareTo" | "compareToIgnoreCase"
            | "concat" => {
                let o = match &a0 {
                    Value::Str(o) => o.clone(),
                    Value::Null if name == "equalsIgnoreCase" => return Ok(Value::Bool(false)),
                    _ => return Err(self.npe(&format!("invoke \"String.{name}()\""))),
                };
                match name {
                    "contains" => Value::Bool(s.contains(&*o)),
                    "startsWith" => {
                        let off = if args.len() > 1 { a1.as_int() } else { 0 };
                        let u = units();
                        let p = utf16(&o);
                        Value::Bool(off >= 0 && u.get(off as usize..).is_some_and(|rest| rest.starts_with(&p)))
                    }
                    "endsWith" => Value::Bool(s.ends_with(&*o)),
                    "equalsIgnoreCase" => Value::Bool(s.to_lowercase() == o.to_lowercase()),
                    "compareTo" => Value::Int(compare16(&units(), &utf16(&o))),
                    "compareToIgnoreCase" => Value::Int(compare16(&utf16(&s.to_lowercase()), &utf16(&o.to_lowercase()))),
                    _ => self.str_value(format!("{s}{o}")),
                }
            }
            "equals" => Value::Bool(matches!(&a0, Value::Str(o) if **o == *s)),
            "toUpperCase" => self.str_value(s.to_uppercase()),
            "toLowerCase" => self.str_value(s.to_lowercase()),
            "trim" => self.str_value(trim_java(&s)),
            "strip" => self.str_value(s.trim()),
            "stripLeading" => self.str_value(s.trim_start()),
            "stripTrailing" => self.str_value(s.trim_end()),
            "intern" => Value::Str(self.intern(&s)),
            "toString" => Value::Str(s),
            "replace" => match (&a0, &a1) {
                (Value::Str(x), Value::Str(y)) => self.str_value(s.replace(&**x, y)),
                (Value::Char(x), Value::Char(y)) => {
                    let u: Vec<u16> = units().into_iter().map(|c| if c == *x { *y } else { c }).collect();
                    self.str_value(from16(&u))
                }
                _ => return Err(self.npe("replace in string")),
            },
            "repeat" => {
                let n = a0.as_int();
                if n < 0 {
                    return Err(self.throw("java.lang.IllegalArgumentException", Some(format!("count is negative: {n}"))));
                }
                self.str_value(s.repeat(n as usize))
            }
            "toCharArray" => {
                let data = units().into_iter().map(Value::Char).collect();
                Value::Arr(Rc::new(Arr {
                    elem: Ty::Prim(crate::ast::Prim::Char),
                    data: RefCell::new(data),
                    id: self.fresh_id(),
                }))
            }
            _ => return Err(self.throw("java.lang.NoSuchMethodError", Some(format!("String.{name}")))),
        })
    }

    fn builder_method(&mut self, recv: &Value, b: Rc<RefCell<String>>, _id: u32, name: &str, args: &[Value]) -> R<Value> {
        let a0 = args.first().cloned().unwrap_or(Value::Null);
        let a1 = args.get(1).cloned().unwrap_or(Value::Null);
        let len16 = |b: &RefCell<String>| b.borrow().encode_utf16().count() as i32;
        let bad = |me: &mut Self, msg: String| me.sioobe(msg);
        match name {
            "append" => {
                let s = self.to_jstring(&a0)?;
                b.borrow_mut().push_str(&s);
                Ok(recv.clone())
            }
            "insert" => {
                let at = a0.as_int();
                let len = len16(&b);
                if at < 0 || at > len {
                    return Err(bad(self, format!("offset {at}, length {len}")));
                }
                let s = self.to_jstring(&a1)?;
                let mut u = utf16(&b.borrow());
                u.splice(at as usize..at as usize, utf16(&s));
                *b.borrow_mut() = String::from_utf16_lossy(&u);
                Ok(recv.clone())
            }
            "reverse" => {
                let r: String = b.borrow().chars().rev().collect();
                *b.borrow_mut() = r;
                Ok(recv.clone())
            }
            "deleteCharAt" | "setCharAt" | "charAt" => {
                let i = a0.as_int();
                let mut u = utf16(&b.borrow());
                if i < 0 || i as usize >= u.len() {
                    return Err(bad(self, format!("index {i},length {}", u.len())));
                }
                match name {
                    "charAt" => return Ok(Value::Char(u[i as usize])),
                    "setCharAt" => u[i as usize] = num(&a1).map_or(0, |n| n.to_i64() as u16),
                    _ => {
                        u.remove(i as usize);
                    }
                }
                *b.borrow_mut() = String::from_utf16_lossy(&u);
                Ok(if name == "setCharAt" { Value::Null } else { recv.clone() })
            }
            "delete" | "replace" => {
                let mut u = utf16(&b.borrow());
                let len = u.len() as i32;
                let start = a0.as_int();
                let end = a1.as_int().min(len);
                if start < 0 || start > len || start > end {
                    return Err(bad(self, format!("start {start}, end {end}, length {len}")));
                }
                let with = match args.get(2) {
                    Some(v) => utf16(&self.str_arg(v)?),
                    None => Vec::new(),
                };
                u.splice(start as usize..end as usize, with);
                *b.borrow_mut() = String::from_utf16_lossy(&u);
                Ok(recv.clone())
            }
            "setLength" => {
                let n = a0.as_int();
                if n < 0 {
                    return Err(bad(self, format!("String index out of range: {n}")));
                }
                let mut u = utf16(&b.borrow());
                u.resize(n as usize, 0);
                *b.borrow_mut() = String::from_utf16_lossy(&u);
                Ok(Value::Null)
            }
            "toString" => Ok(self.str_value(b.borrow().clone())),
            "length" => Ok(Value::Int(len16(&b))),
            "isEmpty" => Ok(Value::Bool(b.borrow().is_empty())),
            "indexOf" => {
                let n = utf16(&self.str_arg(&a0)?);
                Ok(Value::Int(find16(&utf16(&b.borrow()), &n, None, false)))
            }
            _ => self.builtin_instance_call(&Value::Obj(Rc::new(Obj {
                class: OBJECT.into(),
                fields: RefCell::new(Default::default()),
                id: _id,
            })), name, args.to_vec(), false),
        }
    }
}

fn find16(hay: &[u16], needle: &[u16], from: Option<i32>, last: bool) -> i32 {
    let n = needle.len();
    if n > hay.len() {
        return -1;
    }
    let max_start = hay.len() - n;
    if last {
        let start = from.map_or(max_start as i64, |f| (f as i64).min(max_start as i64));
        let mut i = start;
        while i >= 0 {
            if hay[i as usize..i as usize + n] == *needle {
                return i as i32;
            }
            i -= 1;
        }
        -1
    } else {
        let start = from.map_or(0, |f| f.max(0) as usize);
        (start..=max_start)
            .find(|&i| hay[i..i + n] == *needle)
            .map_or(-1, |i| i as i32)
    }
}

fn compare16(a: &[u16], b: &[u16]) -> i32 {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return *x as i32 - *y as i32;
        }
    }
    a.len() as i32 - b.len() as i32
}

fn parse_java_int(s: &str, radix: u32) -> Option<i64> {
    if s.is_empty() || s == "+" || s == "-" || !(2..=36).contains(&radix) {
        return None;
    }
    i64::from_str_radix(s, radix).ok()
}

fn parse_java_double(s: &str) -> Option<f64> {
    let t = trim_java(s);
    let t = t.strip_suffix(['d', 'D', 'f', 'F']).unwrap_or(t);
    match t {
        "NaN" => Some(f64::NAN),
        "Infinity" | "+Infinity" => Some(f64::INFINITY),
        "-Infinity" => Some(f64::NEG_INFINITY),
        _ if t.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') => None,
        _ => t.parse().ok(),
    }
}

pub fn java_double_compare(a: f64, b: f64) -> i32 {
    if a < b {
        -1
    } else if a > b {
        1
    } else {
        let (x, y) = (a.to_bits() as i64, b.to_bits() as i64);
        // NaN sorts last, -0.0 before 0.0.
        match (a.is_nan(), b.is_nan()) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => -1,
            _ => (x.cmp(&y)) as i32,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_and_compare() {
        let h = utf16("hello");
        assert_eq!(find16(&h, &utf16("l"), None, false), 2);
        assert_eq!(find16(&h, &utf16("l"), None, true), 3);
        assert_eq!(find16(&h, &utf16("z"), None, false), -1);
        assert_eq!(find16(&h, &utf16(""), None, false), 0);
        assert_eq!(compare16(&utf16("apple"), &utf16("banana")), -1);
        assert_eq!(compare16(&utf16("ab"), &utf16("abc")), -1);
        assert_eq!(java_string_hash("hello"), 99162322);
    }

    #[test]
    fn number_parsing() {
        assert_eq!(parse_java_int("-42", 10), Some(-42));
        assert_eq!(parse_java_int("", 10), None);
        assert_eq!(parse_java_int("4x", 10), None);
        assert_eq!(parse_java_double(" 2.5 "), Some(2.5));
        assert_eq!(parse_java_double("abc"), None);
    }
}
