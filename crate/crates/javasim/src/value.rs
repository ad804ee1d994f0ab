//! Runtime values and the numeric rules they follow.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::ast::Prim;
use crate::program::{Ty, BUILDER, OBJECT, STRING};

pub struct Obj {
    pub class: String,
    pub fields: RefCell<HashMap<String, Value>>,
    pub id: u32,
}

pub struct Arr {
    pub elem: Ty,
    pub data: RefCell<Vec<Value>>,
    pub id: u32,
}

#[derive(Clone)]
pub enum Value {
    Int(i32),
    Long(i64),
    Float(f32),
    Double(f64),
    Bool(bool),
    Char(u16),
    Null,
    Str(Rc<str>),
    Obj(Rc<Obj>),
    Arr(Rc<Arr>),
    Builder(Rc<RefCell<String>>, u32),
}

impl std::fmt::Debug for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "Int({v})"),
            Value::Long(v) => write!(f, "Long({v})"),
            Value::Float(v) => write!(f, "Float({v})"),
            Value::Double(v) => write!(f, "Double({v})"),
            Value::Bool(v) => write!(f, "Bool({v})"),
            Value::Char(v) => write!(f, "Char({v})"),
            Value::Null => f.write_str("Null"),
            Value::Str(s) => write!(f, "Str({s:?})"),
            Value::Obj(o) => write!(f, "Obj({}#{})", o.class, o.id),
            Value::Arr(a) => write!(f, "Arr(#{})", a.id),
            Value::Builder(b, _) => write!(f, "Builder({:?})", b.borrow()),
        }
    }
}

impl Value {
    pub fn runtime_ty(&self) -> Ty {
        match self {
            Value::Int(_) => Ty::Prim(Prim::Int),
            Value::Long(_) => Ty::Prim(Prim::Long),
            Value::Float(_) => Ty::Prim(Prim::Float),
            Value::Double(_) => Ty::Prim(Prim::Double),
            Value::Bool(_) => Ty::Prim(Prim::Boolean),
            Value::Char(_) => Ty::Prim(Prim::Char),
            Value::Null => Ty::Null,
            Value::Str(_) => Ty::string(),
            Value::Obj(o) => Ty::Class(o.class.clone()),
            Value::Arr(a) => Ty::Array(Box::new(a.elem.clone())),
            Value::Builder(..) => Ty::Class(BUILDER.into()),
        }
    }

    pub fn class_name(&self) -> &str {
        match self {
            Value::Str(_) => STRING,
            Value::Obj(o) => &o.class,
            Value::Builder(..) => BUILDER,
            _ => OBJECT,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_bool(&self) -> bool {
        matches!(self, Value::Bool(true))
    }

    pub fn as_int(&self) -> i32 {
        match num(self) {
            Some(n) => n.to_i64() as i32,
            None => 0,
        }
    }

    /// Reference identity, with value equality for primitives.
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Str(a), Value::Str(b)) => Rc::ptr_eq(a, b),
            (Value::Obj(a), Value::Obj(b)) => Rc::ptr_eq(a, b),
            (Value::Arr(a), Value::Arr(b)) => Rc::ptr_eq(a, b),
            (Value::Builder(a, _), Value::Builder(b, _)) => Rc::ptr_eq(a, b),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (a, b) => match (num(a), num(b)) {
                (Some(x), Some(y)) => compare_eq(x, y),
                _ => false,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Num {
    I(i32),
    L(i64),
    F(f32),
    D(f64),
}

impl Num {
    pub fn to_i64(self) -> i64 {
        match self {
            Num::I(v) => v as i64,
            Num::L(v) => v,
            Num::F(v) => v as i64,
            Num::D(v) => v as i64,
        }
    }
    pub fn to_f64(self) -> f64 {
        match self {
            Num::I(v) => v as f64,
            Num::L(v) => v as f64,
            Num::F(v) => v as f64,
            Num::D(v) => v,
        }
    }
    fn rank(self) -> u8 {
        match self {
            Num::I(_) => 0,
            Num::L(_) => 1,
            Num::F(_) => 2,
            Num::D(_) => 3,
        }
    }
    fn widen_to(self, rank: u8) -> Num {
        match rank {
            0 => self,
            1 => Num::L(self.to_i64()),
            2 => Num::F(match self {
                Num::I(v) => v as f32,
                Num::L(v) => v as f32,
                Num::F(v) => v,
                Num::D(v) => v as f32,
            }),
            _ => Num::D(self.to_f64()),
        }
    }
    pub fn value(self) -> Value {
        match self {
            Num::I(v) => Value::Int(v),
            Num::L(v) => Value::Long(v),
            Num::F(v) => Value::Float(v),
            Num::D(v) => Value::Double(v),
        }
    }
}

pub fn num(v: &Value) -> Option<Num> {
    Some(match v {
        Value::Int(i) => Num::I(*i),
        Value::Char(c) => Num::I(*c as i32),
        Value::Long(l) => Num::L(*l),
        Value::Float(f) => Num::F(*f),
        Value::Double(d) => Num::D(*d),
        _ => return None,
    })
}

pub fn promote_pair(a: Num, b: Num) -> (Num, Num) {
    let r = a.rank().max(b.rank());
    (a.widen_to(r), b.widen_to(r))
}

fn compare_eq(a: Num, b: Num) -> bool {
    match promote_pair(a, b) {
        (Num::I(x), Num::I(y)) => x == y,
        (Num::L(x), Num::L(y)) => x == y,
        (Num::F(x), Num::F(y)) => x == y,
        (x, y) => x.to_f64() == y.to_f64(),
    }
}

/// Arithmetic fault raised by integer division.
pub struct DivByZero;

pub fn arith(op: crate::ast::BinOp, a: Num, b: Num) -> Result<Value, DivByZero> {
    use crate::ast::BinOp::*;
    let (a, b) = promote_pair(a, b);
    Ok(match (a, b) {
        (Num::I(x), Num::I(y)) => Value::Int(match op {
            Add => x.wrapping_add(y),
            Sub => x.wrapping_sub(y),
            Mul => x.wrapping_mul(y),
            Div if y == 0 => return Err(DivByZero),
            Div => x.wrapping_div(y),
            Rem if y == 0 => return Err(DivByZero),
            Rem => x.wrapping_rem(y),
            _ => 0,
        }),
        (Num::L(x), Num::L(y)) => Value::Long(match op {
            Add => x.wrapping_add(y),
            Sub => x.wrapping_sub(y),
            Mul => x.wrapping_mul(y),
            Div if y == 0 => return Err(DivByZero),
            Div => x.wrapping_div(y),
            Rem if y == 0 => return Err(DivByZero),
            Rem => x.wrapping_rem(y),
            _ => 0,
        }),
        (Num::F(x), Num::F(y)) => Value::Float(match op {
            Add => x + y,
            Sub => x - y,
            Mul => x * y,
            Div => x / y,
            _ => x % y,
        }),
        (x, y) => {
            let (x, y) = (x.to_f64(), y.to_f64());
            Value::Double(match op {
                Add => x + y,
                Sub => x - y,
                Mul => x * y,
                Div => x / y,
                _ => x % y,
            })
        }
    })
}

pub fn compare(op: crate::ast::BinOp, a: Num, b: Num) -> bool {
    use crate::ast::BinOp::*;
    let ord = match promote_pair(a, b) {
        (Num::I(x), Num::I(y)) => x.partial_cmp(&y),
        (Num::L(x), Num::L(y)) => x.partial_cmp(&y),
        (Num::F(x), Num::F(y)) => x.partial_cmp(&y),
        (x, y) => x.to_f64().partial_cmp(&y.to_f64()),
    };
    use std::cmp::Ordering::*;
    match (op, ord) {
        (Ne, None) => true,
        (_, None) => false,
        (Lt, Some(o)) => o == Less,
        (Le, Some(o)) => o != Greater,
        (Gt, Some(o)) => o == Greater,
        (Ge, Some(o)) => o != Less,
        (Eq, Some(o)) => o == Equal,
        (Ne, Some(o)) => o != Equal,
        _ => false,
    }
}

pub fn bitwise(op: crate::ast::BinOp, a: Num, b: Num) -> Value {
    use crate::ast::BinOp::*;
    match promote_pair(a, b) {
        (Num::I(x), Num::I(y)) => Value::Int(match op {
            BitAnd => x & y,
            BitOr => x | y,
            _ => x ^ y,
        }),
        (x, y) => {
            let (x, y) = (x.to_i64(), y.to_i64());
            Value::Long(match op {
                BitAnd => x & y,
                BitOr => x | y,
                _ => x ^ y,
            })
        }
    }
}

pub fn shift(op: crate::ast::BinOp, a: Num, b: Num) -> Value {
    use crate::ast::BinOp::*;
    let s = b.to_i64();
    match a {
        Num::L(x) => {
            let s = (s & 63) as u32;
            Value::Long(match op {
                Shl => x.wrapping_shl(s),
                Shr => x.wrapping_shr(s),
                _ => ((x as u64) >> s) as i64,
            })
        }
        other => {
            let x = other.to_i64() as i32;
            let s = (s & 31) as u32;
            Value::Int(match op {
                Shl => x.wrapping_shl(s),
                Shr => x.wrapping_shr(s),
                _ => ((x as u32) >> s) as i32,
            })
        }
    }
}

/// Primitive conversion, as assignment or a cast performs it.
pub fn convert(v: Value, to: Prim) -> Value {
    if to == Prim::Boolean {
        return v;
    }
    let Some(n) = num(&v) else { return v };
    let as_i32 = || match n {
        Num::I(x) => x,
        Num::L(x) => x as i32,
        Num::F(x) => x as i32,
        Num::D(x) => x as i32,
    };
    match to {
        Prim::Int => Value::Int(as_i32()),
        Prim::Byte => Value::Int(as_i32() as i8 as i32),
        Prim::Short => Value::Int(as_i32() as i16 as i32),
        Prim::Char => Value::Char(as_i32() as u16),
        Prim::Long => Value::Long(match n {
            Num::F(x) => x as i64,
            Num::D(x) => x as i64,
            other => other.to_i64(),
        }),
        Prim::Float => Value::Float(match n {
            Num::I(x) => x as f32,
            Num::L(x) => x as f32,
            Num::F(x) => x,
            Num::D(x) => x as f32,
        }),
        Prim::Double => Value::Double(n.to_f64()),
        Prim::Boolean => v,
    }
}

pub fn default_value(t: &Ty) -> Value {
    match t {
        Ty::Prim(Prim::Long) => Value::Long(0),
        Ty::Prim(Prim::Float) => Value::Float(0.0),
        Ty::Prim(Prim::Double) => Value::Double(0.0),
        Ty::Prim(Prim::Boolean) => Value::Bool(false),
        Ty::Prim(Prim::Char) => Value::Char(0),
        Ty::Prim(_) => Value::Int(0),
        _ => Value::Null,
    }
}

/// `Double.toString`.
pub fn java_double(d: f64) -> String {
    if d.is_nan() {
        return "NaN".into();
    }
    if d.is_infinite() {
        return if d > 0.0 { "Infinity" } else { "-Infinity" }.into();
    }
    if d == 0.0 {
        return if d.is_sign_negative() { "-0.0" } else { "0.0" }.into();
    }
    let a = d.abs();
    if (1e-3..1e7).contains(&a) {
        let s = format!("{d}");
        if s.contains('.') {
            s
        } else {
            format!("{s}.0")
        }
    } else {
        sci(&format!("{d:e}"))
    }
}

pub fn java_float(f: f32) -> String {
    if f.is_nan() {
        return "NaN".into();
    }
    if f.is_infinite() {
        return if f > 0.0 { "Infinity" } else { "-Infinity" }.into();
    }
    if f == 0.0 {
        return if f.is_sign_negative() { "-0.0" } else { "0.0" }.into();
    }
    let a = f.abs();
    if (1e-3..1e7).contains(&a) {
        let s = format!("{f}");
        if s.contains('.') {
            s
        } else {
            format!("{s}.0")
        }
    } else {
        sci(&format!("{f:e}"))
    }
}

fn sci(rust: &str) -> String {
    let (mant, exp) = rust.split_once('e').unwrap_or((rust, "0"));
    let mant = if mant.contains('.') {
        mant.to_string()
    } else {
        format!("{mant}.0")
    };
    format!("{mant}E{exp}")
}

pub fn char_string(c: u16) -> String {
    String::from_utf16_lossy(&[c])
}

pub fn utf16(s: &str) -> Vec<u16> {
    s.encode_utf16().collect()
}
