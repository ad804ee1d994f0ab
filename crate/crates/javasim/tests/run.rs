use t2t_javasim::{compile, Limits, RunError, TestStatus};

fn src(path: &str, body: &str) -> (String, String) {
    (path.to_string(), body.to_string())
}

const CALC: &str = r#"package demo;

public class Calc {
    private int total;

    public Calc() {
        total = 0;
    }

    public int add(int a, int b) {
        return a + b;
    }

    public int div(int a, int b) {
        if (b == 0) {
            throw new IllegalArgumentException("divide by zero");
        }
        return a / b;
    }

    public int sumTo(int n) {
        int s = 0;
        for (int i = 1; i <= n; i++) {
            s += i;
        }
        return s;
    }

    public String greet(String name) {
        StringBuilder sb = new StringBuilder("Hello, ");
        sb.append(name).append('!');
        return sb.toString();
    }

    public void accumulate(int x) {
        total += x;
    }

    public int getTotal() {
        return total;
    }
}
"#;

#[test]
fn junit4_pass_fail_and_error() {
    let test = r#"package demo;

import org.junit.Test;
import static org.junit.Assert.*;

public class CalcTest {
    @Test
    public void adds() {
        assertEquals(5, new Calc().add(2, 3));
    }

    @Test
    public void wrongSum() {
        assertEquals(11, new Calc().sumTo(4));
    }

    @Test
    public void greets() {
        assertEquals("Hello, Bob?", new Calc().greet("Bob"));
    }

    @Test
    public void divideByZero() {
        new Calc().div(1, 0);
    }

    @Test(expected = IllegalArgumentException.class)
    public void expectedThrow() {
        new Calc().div(1, 0);
    }

    @Test
    public void npe() {
        String s = null;
        s.length();
    }
}
"#;
    let c = compile(&[src("demo/Calc.java", CALC), src("demo/CalcTest.java", test)]).expect("compiles");
    let run = c.run_class("demo.CalcTest", &Limits::default()).unwrap();
    let by = |n: &str| run.results.iter().find(|r| r.name == n).unwrap().clone();
    assert_eq!(run.results.len(), 6);
    assert_eq!(by("adds").status, TestStatus::Passed);
    let w = by("wrongSum");
    assert_eq!(w.status, TestStatus::Failed);
    assert_eq!(w.failure_class.as_deref(), Some("java.lang.AssertionError"));
    assert_eq!(w.message.as_deref(), Some("expected:<11> but was:<10>"));
    let g = by("greets");
    assert_eq!(g.failure_class.as_deref(), Some("org.junit.ComparisonFailure"));
    assert_eq!(g.message.as_deref(), Some("expected:<Hello, Bob[?]> but was:<Hello, Bob[!]>"));
    let d = by("divideByZero");
    assert_eq!(d.status, TestStatus::Errored);
    assert_eq!(d.failure_class.as_deref(), Some("java.lang.IllegalArgumentException"));
    assert_eq!(d.message.as_deref(), Some("divide by zero"));
    assert_eq!(by("expectedThrow").status, TestStatus::Passed);
    assert_eq!(by("npe").failure_class.as_deref(), Some("java.lang.NullPointerException"));

    let cov = c.coverage_map();
    let calc = cov.iter().find(|l| l.fqn == "demo.Calc").unwrap();
    let hits = &run.hits["demo/Calc.java"];
    // accumulate/getTotal never ran.
    assert!(calc.coverable.contains(&40));
    assert!(!hits.contains(&40));
    assert!(hits.contains(&11));
    assert!(hits.iter().all(|l| calc.coverable.contains(l)));
}

#[test]
fn junit3_and_jupiter_messages() {
    let j3 = r#"package demo;

import junit.framework.TestCase;

public class OldTest extends TestCase {
    private Calc calc;

    protected void setUp() {
        calc = new Calc();
    }

    public void testTotal() {
        calc.accumulate(3);
        assertEquals("total", 4, calc.getTotal());
    }

    public void testTrue() {
        assertTrue("Escape character should match", calc.getTotal() == 1);
    }

    public void testNames() {
        assertEquals("greeting", "Hi", calc.greet("x"));
    }
}
"#;
    let j5 = r#"package demo;

import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.*;

class NewTest {
    @Test
    void total() {
        assertEquals(2, new Calc().add(1, 2), "sum");
    }

    @Test
    void truth() {
        assertTrue(false);
    }
}
"#;
    let c = compile(&[
        src("demo/Calc.java", CALC),
        src("demo/OldTest.java", j3),
        src("demo/NewTest.java", j5),
    ])
    .unwrap();
    let old = c.run_class("demo.OldTest", &Limits::default()).unwrap();
    assert_eq!(old.results.len(), 3);
    assert_eq!(old.results[0].failure_class.as_deref(), Some("junit.framework.AssertionFailedError"));
    assert_eq!(old.results[0].message.as_deref(), Some("total expected:<4> but was:<3>"));
    assert_eq!(old.results[1].message.as_deref(), Some("Escape character should match"));
    assert_eq!(old.results[2].failure_class.as_deref(), Some("junit.framework.ComparisonFailure"));
    let new = c.run_class("demo.NewTest", &Limits::default()).unwrap();
    assert_eq!(new.results[0].failure_class.as_deref(), Some("org.opentest4j.AssertionFailedError"));
    assert_eq!(new.results[0].message.as_deref(), Some("sum ==> expected: <2> but was: <3>"));
    assert_eq!(new.results[1].message.as_deref(), Some("expected: <true> but was: <false>"));
}

#[test]
fn compile_errors_are_reported() {
    let missing_brace = r#"package demo;
import org.junit.Test;
public class T {
    @Test
    public void testIsSurroundingSpacesIgnored()
        boolean spacesIgnored = true;
        assertFalse(spacesIgnored);}
}
"#;
    let errs = compile(&[src("demo/Calc.java", CALC), src("demo/T.java", missing_brace)]).err().unwrap();
    assert!(!errs.is_empty());
    assert_eq!(errs[0].path, "demo/T.java");

    let bad_symbol = r#"package demo;
public class U {
    int f() { return undefinedThing + 1; }
}
"#;
    let errs = compile(&[src("demo/U.java", bad_symbol)]).err().unwrap();
    assert!(errs[0].message.contains("cannot find symbol"), "{:?}", errs);

    let bad_type = r#"package demo;
public class V {
    int f() { String s = 3; return 0; }
}
"#;
    let errs = compile(&[src("demo/V.java", bad_type)]).err().unwrap();
    assert!(errs[0].message.contains("incompatible types"), "{:?}", errs);

    let no_return = r#"package demo;
public class W {
    int f(int x) { if (x > 0) { return 1; } }
}
"#;
    let errs = compile(&[src("demo/W.java", no_return)]).err().unwrap();
    assert!(errs[0].message.contains("missing return statement"), "{:?}", errs);

    let bad_pkg = "package demo;\nimport com.nowhere.Thing;\npublic class X {}\n";
    let errs = compile(&[src("demo/X.java", bad_pkg)]).err().unwrap();
    assert!(errs[0].message.contains("does not exist"), "{:?}", errs);
}

#[test]
fn runaway_loops_time_out() {
    let spin = r#"package demo;
import org.junit.Test;
public class SpinTest {
    @Test
    public void spin() {
        int i = 0;
        while (i >= 0) {
            i = i % 7;
        }
    }
}
"#;
    let c = compile(&[src("demo/SpinTest.java", spin)]).unwrap();
    let limits = Limits {
        max_steps: 200_000,
        ..Limits::default()
    };
    assert_eq!(c.run_class("demo.SpinTest", &limits).unwrap_err(), RunError::TimedOut);
    assert!(matches!(c.run_class("demo.Nope", &limits), Err(RunError::ClassNotFound(_))));
}

#[test]
fn deep_recursion_overflows_cleanly() {
    let rec = r#"package demo;
import org.junit.Test;
public class RecTest {
    int down(int n) { return down(n + 1); }
    @Test
    public void deep() { down(0); }
}
"#;
    let c = compile(&[src("demo/RecTest.java", rec)]).unwrap();
    let run = c.run_class("demo.RecTest", &Limits::default()).unwrap();
    assert_eq!(run.results[0].failure_class.as_deref(), Some("java.lang.StackOverflowError"));
}

#[test]
fn language_features() {
    let code = r#"package demo;

import org.junit.Test;
import static org.junit.Assert.*;

public class FeatureTest {
    interface Shape { double area(); }

    static class Sq implements Shape {
        private final double side;
        Sq(double side) { this.side = side; }
        public double area() { return side * side; }
        @Override
        public String toString() { return "Sq(" + side + ")"; }
    }

    static abstract class Animal {
        abstract String sound();
        String speak() { return "says " + sound(); }
    }

    static class Dog extends Animal {
        String sound() { return "woof"; }
    }

    static int counter = 0;

    static int fib(int n) {
        return n < 2 ? n : fib(n - 1) + fib(n - 2);
    }

    @Test
    public void everything() {
        Shape s = new Sq(3);
        assertEquals(9.0, s.area(), 1e-9);
        assertEquals("Sq(3.0)", s.toString());
        assertEquals("says woof", new Dog().speak());
        assertEquals(55, fib(10));
        int[] xs = {3, 1, 2};
        int total = 0;
        for (int x : xs) {
            total += x;
        }
        assertEquals(6, total);
        int[][] grid = new int[2][3];
        grid[1][2] = 7;
        assertEquals(7, grid[1][2]);
        assertArrayEquals(new int[] {3, 1, 2}, xs);
        long big = Integer.MAX_VALUE + 1L;
        assertEquals(2147483648L, big);
        assertEquals(-2147483648, Integer.MAX_VALUE + 1);
        char c = 'a';
        c += 2;
        assertEquals('c', c);
        String t = "x=" + 1 + 2 + 'c' + 1.5f + true + null;
        assertEquals("x=12c1.5truenull", t);
        assertEquals(3, "hello".indexOf('l', 3));
        assertTrue("abc".compareTo("abd") < 0);
        outer:
        for (int i = 0; i < 3; i++) {
            for (int j = 0; j < 3; j++) {
                if (j == 1) continue outer;
                if (i == 2) break outer;
                counter++;
            }
        }
        assertEquals(2, counter);
        try {
            Object o = "str";
            Integer bad = (Integer) o;
            fail("should not cast");
        } catch (ClassCastException e) {
            assertNotNull(e.getMessage());
        } finally {
            counter = 100;
        }
        assertEquals(100, counter);
        assertEquals(1, Math.max(1, 0));
        assertEquals(42, Integer.parseInt("42"));
        assertEquals(0.1 + 0.2, 0.30000000000000004, 0.0);
        assertEquals("0.30000000000000004", String.valueOf(0.1 + 0.2));
        int k = 0;
        do { k += 3; } while (k < 10);
        assertEquals(12, k);
        assertEquals(-1, -7 / 4 + 0);
        assertEquals(-3, -7 % 4);
        assertEquals(-4, -7 >> 1);
        assertEquals(2147483644, -7 >>> 1);
    }
}
"#;
    let c = match compile(&[src("demo/FeatureTest.java", code)]) {
        Ok(c) => c,
        Err(e) => panic!("{}", e.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")),
    };
    let run = c.run_class("demo.FeatureTest", &Limits::default()).unwrap();
    assert_eq!(run.results[0].status, TestStatus::Passed, "{:?}", run.results[0]);
}
