//! Assertion methods of JUnit 3, JUnit 4 and Jupiter, with their failure messages.

use crate::interp::{Abrupt, Interp, R};
use crate::program::AssertFlavor;
use crate::rt::java_double_compare;
use crate::value::*;

const CONTEXT: usize = 20;

/// `expected:<[a]b> but was:<[c]b>` style compaction used by ComparisonFailure.
pub fn compact(message: Option<&str>, expected: &str, actual: &str) -> String {
    let e = utf16(expected);
    let a = utf16(actual);
    if e == a {
        return classic_format(message, expected, actual);
    }
    let end = e.len().min(a.len());
    let prefix = (0..end).find(|&i| e[i] != a[i]).unwrap_or(end);
    let max_suffix = (e.len() - prefix).min(a.len() - prefix);
    let mut suffix = 0;
    while suffix < max_suffix && e[e.len() - 1 - suffix] == a[a.len() - 1 - suffix] {
        suffix += 1;
    }
    let s = |u: &[u16]| String::from_utf16_lossy(u);
    let pre = if prefix <= CONTEXT {
        s(&e[..prefix])
    } else {
        format!("...{}", s(&e[prefix - CONTEXT..prefix]))
    };
    let suf_slice = &e[e.len() - suffix..];
    let suf = if suffix <= CONTEXT {
        s(suf_slice)
    } else {
        format!("{}...", s(&suf_slice[..CONTEXT]))
    };
    let ed = s(&e[prefix..e.len() - suffix]);
    let ad = s(&a[prefix..a.len() - suffix]);
    classic_format(message, &format!("{pre}[{ed}]{suf}"), &format!("{pre}[{ad}]{suf}"))
}

fn classic_prefix(message: Option<&str>) -> String {
    match message {
        Some(m) if !m.is_empty() => format!("{m} "),
        _ => String::new(),
    }
}

fn classic_format(message: Option<&str>, expected: &str, actual: &str) -> String {
    format!("{}expected:<{expected}> but was:<{actual}>", classic_prefix(message))
}

fn jupiter_prefix(message: Option<&str>) -> String {
    match message {
        Some(m) if !m.trim().is_empty() => format!("{m} ==> "),
        _ => String::new(),
    }
}

fn is_float(v: &Value) -> bool {
    matches!(v, Value::Float(_) | Value::Double(_))
}

fn is_integral(v: &Value) -> bool {
    matches!(v, Value::Int(_) | Value::Long(_) | Value::Char(_))
}

fn core_arity(name: &str) -> usize {
    match name {
        "fail" => 0,
        "assertTrue" | "assertFalse" | "assertNull" | "assertNotNull" => 1,
        _ => 2,
    }
}

fn takes_delta(name: &str) -> bool {
    matches!(name, "assertEquals" | "assertNotEquals" | "assertArrayEquals")
}

fn opt_str(v: Value) -> Option<String> {
    match v {
        Value::Str(s) => Some(s.to_string()),
        _ => None,
    }
}

struct Call {
    message: Option<String>,
    args: Vec<Value>,
    delta: Option<f64>,
}

fn split_args(flavor: AssertFlavor, name: &str, mut vals: Vec<Value>) -> Call {
    let core = core_arity(name);
    let mut message = None;
    match flavor {
        AssertFlavor::Jupiter => {
            let has_delta = takes_delta(name) && vals.len() > core && num(&vals[core]).is_some();
            let expect = core + usize::from(has_delta);
            if vals.len() > expect {
                message = opt_str(vals.pop().unwrap_or(Value::Null));
            }
        }
        _ => {
            let n = vals.len();
            let has_delta = takes_delta(name) && n >= 3 && vals[n - 3..].iter().all(|v| num(v).is_some());
            if n > core + usize::from(has_delta) {
                message = opt_str(vals.remove(0));
            }
        }
    }
    let delta = if takes_delta(name) && vals.len() > core {
        vals.pop().and_then(|d| num(&d)).map(Num::to_f64)
    } else {
        None
    };
    Call { message, args: vals, delta }
}

impl<'p> Interp<'p> {
    fn fail_with(&mut self, class: &str, message: Option<String>) -> Abrupt {
        self.throw(class, message)
    }

    fn show(&mut self, flavor: AssertFlavor, v: &Value) -> R<String> {
        // JUnit 4 widens char to long for the primitive overload.
        if flavor == AssertFlavor::JUnit4 {
            if let Value::Char(c) = v {
                return Ok((*c as i64).to_string());
            }
        }
        self.to_jstring(v)
    }

    pub(crate) fn assertion(&mut self, flavor: AssertFlavor, name: &str, vals: Vec<Value>) -> R<()> {
        let Call { message, args, delta } = split_args(flavor, name, vals);
        let msg = message.as_deref();
        let basic = match flavor {
            AssertFlavor::JUnit4 => "java.lang.AssertionError",
            AssertFlavor::JUnit3 => "junit.framework.AssertionFailedError",
            AssertFlavor::Jupiter => "org.opentest4j.AssertionFailedError",
        };
        let a0 = args.first().cloned().unwrap_or(Value::Null);
        let a1 = args.get(1).cloned().unwrap_or(Value::Null);
        match name {
            "fail" => Err(self.fail_with(basic, message)),
            "assertTrue" | "assertFalse" => {
                let want = name == "assertTrue";
                if a0.as_bool() == want {
                    return Ok(());
                }
                let text = match flavor {
                    AssertFlavor::Jupiter => Some(format!("{}expected: <{want}> but was: <{}>", jupiter_prefix(msg), !want)),
                    _ => message,
                };
                Err(self.fail_with(basic, text))
            }
            "assertNull" => {
                if a0.is_null() {
                    return Ok(());
                }
                let shown = self.to_jstring(&a0)?;
                let text = match flavor {
                    AssertFlavor::JUnit4 => format!("{}expected null, but was:<{shown}>", classic_prefix_nonnull(msg)),
                    AssertFlavor::JUnit3 => match message {
                        Some(m) => m,
                        None => format!("Expected: <null> but was: {shown}"),
                    },
                    AssertFlavor::Jupiter => format!("{}expected: <null> but was: <{shown}>", jupiter_prefix(msg)),
                };
                Err(self.fail_with(basic, Some(text)))
            }
            "assertNotNull" => {
                if !a0.is_null() {
                    return Ok(());
                }
                let text = match flavor {
                    AssertFlavor::Jupiter => Some(format!("{}expected: not <null>", jupiter_prefix(msg))),
                    _ => message,
                };
                Err(self.fail_with(basic, text))
            }
            "assertSame" | "assertNotSame" => {
                let same = a0.same(&a1);
                if same == (name == "assertSame") {
                    return Ok(());
                }
                let e = self.to_jstring(&a0)?;
                let a = self.to_jstring(&a1)?;
                let text = match (flavor, name) {
                    (AssertFlavor::Jupiter, "assertSame") => format!("{}expected: <{e}> but was: <{a}>", jupiter_prefix(msg)),
                    (AssertFlavor::Jupiter, _) => format!("{}expected: not same but was: <{a}>", jupiter_prefix(msg)),
                    (_, "assertSame") => format!("{}expected same:<{e}> was not:<{a}>", classic_prefix_nonnull(msg)),
                    _ => format!("{}expected not same", classic_prefix_nonnull(msg)),
                };
                Err(self.fail_with(basic, Some(text)))
            }
            "assertEquals" => self.assert_equals(flavor, msg, &a0, &a1, delta),
            "assertNotEquals" => {
                let equal = self.values_equal(flavor, &a0, &a1, delta)?;
                if !equal {
                    return Ok(());
                }
                let shown = self.to_jstring(&a1)?;
                let text = match flavor {
                    AssertFlavor::Jupiter => format!("{}expected: not equal but was: <{shown}>", jupiter_prefix(msg)),
                    _ => {
                        let head = match msg {
                            Some(m) => format!("{m}. "),
                            None => "Values should be different. ".to_string(),
                        };
                        format!("{head}Actual: {shown}")
                    }
                };
                Err(self.fail_with(basic, Some(text)))
            }
            "assertArrayEquals" => self.assert_array_equals(flavor, msg, &a0, &a1, delta),
            _ => Err(self.throw("java.lang.NoSuchMethodError", Some(name.to_string()))),
        }
    }

    fn values_equal(&mut self, flavor: AssertFlavor, e: &Value, a: &Value, delta: Option<f64>) -> R<bool> {
        if let Some(d) = delta {
            let (x, y) = (num(e).map_or(0.0, Num::to_f64), num(a).map_or(0.0, Num::to_f64));
            return Ok(java_double_compare(x, y) == 0 || (x - y).abs() <= d);
        }
        if let (Some(x), Some(y)) = (num(e), num(a)) {
            if is_integral(e) && is_integral(a) {
                return Ok(x.to_i64() == y.to_i64());
            }
            if flavor != AssertFlavor::JUnit3 || (is_float(e) && is_float(a)) {
                return Ok(x.to_f64().to_bits() == y.to_f64().to_bits());
            }
        }
        if e.is_null() {
            return Ok(a.is_null());
        }
        self.jequals(e, a)
    }

    fn assert_equals(&mut self, flavor: AssertFlavor, msg: Option<&str>, e: &Value, a: &Value, delta: Option<f64>) -> R<()> {
        if flavor == AssertFlavor::JUnit4 && delta.is_none() && (is_float(e) || is_float(a)) && num(e).is_some() && num(a).is_some() {
            return Err(self.throw(
                "java.lang.AssertionError",
                Some("Use assertEquals(expected, actual, delta) to compare floating-point numbers".into()),
            ));
        }
        if self.values_equal(flavor, e, a, delta)? {
            return Ok(());
        }
        let es = self.show(flavor, e)?;
        let as_ = self.show(flavor, a)?;
        match flavor {
            AssertFlavor::Jupiter => {
                let text = if es == as_ {
                    format!(
                        "{}expected: {}<{es}> but was: {}<{as_}>",
                        jupiter_prefix(msg),
                        e.class_name(),
                        a.class_name()
                    )
                } else {
                    format!("{}expected: <{es}> but was: <{as_}>", jupiter_prefix(msg))
                };
                Err(self.throw("org.opentest4j.AssertionFailedError", Some(text)))
            }
            _ => {
                let strings = matches!((e, a), (Value::Str(_), Value::Str(_)));
                let (class, text) = match (flavor, strings) {
                    (AssertFlavor::JUnit4, true) => ("org.junit.ComparisonFailure", compact(msg, &es, &as_)),
                    (_, true) => ("junit.framework.ComparisonFailure", compact(msg, &es, &as_)),
                    (AssertFlavor::JUnit4, false) => {
                        let text = if es == as_ {
                            format!(
                                "{}expected: {}<{es}> but was: {}<{as_}>",
                                classic_prefix(msg),
                                e.class_name(),
                                a.class_name()
                            )
                        } else {
                            classic_format(msg, &es, &as_)
                        };
                        ("java.lang.AssertionError", text)
                    }
                    _ => ("junit.framework.AssertionFailedError", classic_format(msg, &es, &as_)),
                };
                Err(self.throw(class, Some(text)))
            }
        }
    }

    fn assert_array_equals(&mut self, flavor: AssertFlavor, msg: Option<&str>, e: &Value, a: &Value, delta: Option<f64>) -> R<()> {
        let jupiter = flavor == AssertFlavor::Jupiter;
        let class = if jupiter { "org.opentest4j.AssertionFailedError" } else { "org.junit.internal.ArrayComparisonFailure" };
        let header = if jupiter {
            jupiter_prefix(msg)
        } else {
            msg.map(|m| format!("{m}: ")).unwrap_or_default()
        };
        let (ea, aa) = match (e, a) {
            (Value::Null, Value::Null) => return Ok(()),
            (Value::Arr(x), Value::Arr(y)) => (x.clone(), y.clone()),
            (Value::Null, _) => {
                let text = if jupiter { format!("{header}expected array was <null> but was: <{}>", self.to_jstring(a)?) } else { format!("{header}expected array was null") };
                return Err(self.throw(if jupiter { class } else { "java.lang.AssertionError" }, Some(text)));
            }
            _ => {
                let text = if jupiter { format!("{header}actual array was <null>") } else { format!("{header}actual array was null") };
                return Err(self.throw(if jupiter { class } else { "java.lang.AssertionError" }, Some(text)));
            }
        };
        let ev = ea.data.borrow().clone();
        let av = aa.data.borrow().clone();
        if ev.len() != av.len() {
            let text = if jupiter {
                format!("{header}array lengths differ, expected: <{}> but was: <{}>", ev.len(), av.len())
            } else {
                format!("{header}array lengths differed, expected.length={} actual.length={}", ev.len(), av.len())
            };
            return Err(self.throw(class, Some(text)));
        }
        for (i, (x, y)) in ev.iter().zip(&av).enumerate() {
            let equal = match (x, y) {
                (Value::Arr(_), Value::Arr(_)) => {
                    match self.assert_array_equals(flavor, None, x, y, delta) {
                        Ok(()) => true,
                        Err(Abrupt::Throw(_)) => false,
                        Err(other) => return Err(other),
                    }
                }
                _ => self.values_equal(flavor, x, y, delta)?,
            };
            if equal {
                continue;
            }
            let xs = self.to_jstring(x)?;
            let ys = self.to_jstring(y)?;
            let text = if jupiter {
                format!("{header}array contents differ at index [{i}], expected: <{xs}> but was: <{ys}>")
            } else {
                let inner = match (x, y) {
                    (Value::Str(_), Value::Str(_)) => compact(None, &xs, &ys),
                    _ => classic_format(None, &xs, &ys),
                };
                format!("{header}arrays first differed at element [{i}]; {inner}")
            };
            return Err(self.throw(class, Some(text)));
        }
        Ok(())
    }
}

fn classic_prefix_nonnull(message: Option<&str>) -> String {
    message.map(|m| format!("{m} ")).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compaction() {
        assert_eq!(compact(None, "abc", "abd"), "expected:<ab[c]> but was:<ab[d]>");
        assert_eq!(compact(Some("m"), "a", "b"), "m expected:<[a]> but was:<[b]>");
        assert_eq!(compact(None, "ab", "abc"), "expected:<ab[]> but was:<ab[c]>");
        assert_eq!(compact(None, "x", "x"), "expected:<x> but was:<x>");
        let long = "a".repeat(30);
        assert_eq!(
            compact(None, &format!("{long}X"), &format!("{long}Y")),
            format!("expected:<...{}[X]> but was:<...{}[Y]>", "a".repeat(20), "a".repeat(20))
        );
    }

    #[test]
    fn argument_split() {
        let c = split_args(AssertFlavor::JUnit4, "assertEquals", vec![Value::Str("m".into()), Value::Int(1), Value::Int(2)]);
        assert_eq!(c.message.as_deref(), Some("m"));
        assert!(c.delta.is_none());
        let c = split_args(AssertFlavor::JUnit4, "assertEquals", vec![Value::Double(1.0), Value::Double(2.0), Value::Double(0.5)]);
        assert_eq!(c.delta, Some(0.5));
        assert!(c.message.is_none());
        let c = split_args(AssertFlavor::Jupiter, "assertTrue", vec![Value::Bool(false), Value::Str("why".into())]);
        assert_eq!(c.message.as_deref(), Some("why"));
        assert_eq!(c.args.len(), 1);
    }
}
