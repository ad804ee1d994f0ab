//! Acceptance suite: one PASS/FAIL line per criterion. Runs without a JDK;
//! execution goes through the bundled simulator.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant, SystemTime};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fixture, matrix_toml, planned_metrics, read, write_replay_stores};
use t2t_core::eval::{
    aggregate_metrics, check_syntax, evaluate_project, shell_class_name, wrap_in_shell, ErrorCategory, EvalItem,
    EvalOptions, EvaluationRecord, GroundTruth,
};
use t2t_core::gateway::{estimate_cost, FINETUNE_RATE_PER_1K};
use t2t_core::miner::{build_triplets, split_corpus, split_sizes, DescriptionKind, MineOptions, Triplet};
use t2t_core::mutation::{compute_mutation_score, enumerate_mutants, run_kill_analysis, KillConfig, Operator, Outcome};
use t2t_core::orchestrator::{run_matrix, Cell, MatrixConfig, Variant};
use t2t_core::postprocess::{is_balanced, postprocess_text, verify_signature};
use t2t_core::prompt::{finetune_jsonl, FineTuneRecord};
use t2t_core::stats::{wilcoxon_signed_rank, StatsError};
use t2t_core::toolchain::{JavaSource, SimToolchain};

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("miner fixture", miner_fixture),
        ("split arithmetic", split_arithmetic),
        ("post-processor properties", postprocessor_properties),
        ("mutation engine oracle", mutation_oracle),
        ("error classifier", error_classifier),
        ("metric aggregation", metric_aggregation),
        ("wilcoxon", wilcoxon),
        ("end-to-end replay", end_to_end_replay),
        ("fine-tune export", finetune_export),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.2}s]");
            }
        }
    }
    println!("{}/{ran} acceptance criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- miner

struct Expected {
    test_class: &'static str,
    test_method: &'static str,
    focal_class: &'static str,
    focal_method: &'static str,
    kind: DescriptionKind,
    text: &'static str,
    testcase: &'static str,
    method: &'static str,
}

fn expected_triplets() -> Vec<Expected> {
    vec![
        Expected {
            test_class: "shop.CartTest",
            test_method: "testAddItem",
            focal_class: "Cart",
            focal_method: "addItem",
            kind: DescriptionKind::JavadocOnly,
            text: "Adds one item to the cart and returns the new item count.",
            testcase: "@Test\n    public void testAddItem() {\n        Cart cart = new Cart();\n        assertEquals(1, cart.addItem());\n        assertEquals(2, cart.addItem());\n    }",
            method: "public int addItem() {\n        count++;\n        return count;\n    }",
        },
        Expected {
            test_class: "shop.CartTest",
            test_method: "testClear",
            focal_class: "Cart",
            focal_method: "clear",
            kind: DescriptionKind::JavadocOnly,
            text: "Removes every item from the cart.",
            testcase: "@Test\n    public void testClear() {\n        Cart cart = new Cart();\n        cart.addItem();\n        cart.clear();\n        assertEquals(0, cart.size());\n    }",
            method: "public void clear() {\n        count = 0;\n    }",
        },
        // overloaded focal: the first `format` in source order
        Expected {
            test_class: "shop.TestPrice",
            test_method: "testFormat",
            focal_class: "Price",
            focal_method: "format",
            kind: DescriptionKind::Combined,
            text: "Formats an amount given in cents as dollars and cents. two digits after the point",
            testcase: "@Test\n    public void testFormat() {\n        assertEquals(\"$3.05\", new Price().format(305));\n    }",
            method: "public String format(int cents) {\n        // two digits after the point\n        int dollars = cents / 100;\n        int rest = cents % 100;\n        String pad = rest < 10 ? \"0\" : \"\";\n        return \"$\" + dollars + \".\" + pad + rest;\n    }",
        },
        Expected {
            test_class: "shop.TestPrice",
            test_method: "roundTest",
            focal_class: "Price",
            focal_method: "round",
            kind: DescriptionKind::InlineOnly,
            text: "rounds to the nearest multiple of ten cents",
            testcase: "@Test\n    public void roundTest() {\n        assertEquals(130, new Price().round(126));\n    }",
            method: "public int round(int cents) {\n        // rounds to the nearest multiple of ten cents\n        return (cents + 5) / 10 * 10;\n    }",
        },
    ]
}

fn miner_fixture() -> Verdict {
    let root = fixture("mini");
    let start = Instant::now();
    let runs: Vec<_> = (0..3)
        .map(|_| build_triplets(&root, &MineOptions::default()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let elapsed = start.elapsed();
    let first = &runs[0];
    for (i, r) in runs.iter().enumerate().skip(1) {
        ensure!(r.triplets == first.triplets, "run {} differs from run 1", i + 1);
        ensure!(r.report == first.report, "run {} report differs", i + 1);
    }
    let expected = expected_triplets();
    ensure!(
        first.triplets.len() == expected.len(),
        "{} triplets, expected {}: {:?}",
        first.triplets.len(),
        expected.len(),
        first.triplets.iter().map(|t| &t.id).collect::<Vec<_>>()
    );
    for (t, e) in first.triplets.iter().zip(&expected) {
        let id = format!("mini:{}#{}", e.test_class, e.test_method);
        ensure!(t.id == id, "id {} != {id}", t.id);
        ensure!(t.project_id == "mini", "{}: project {}", t.id, t.project_id);
        ensure!(t.focal_class == e.focal_class && t.focal_method == e.focal_method, "{}: focal {}.{}", id, t.focal_class, t.focal_method);
        ensure!(t.test_method == e.test_method, "{id}: test method {}", t.test_method);
        ensure!(t.description_kind == e.kind, "{id}: kind {:?}", t.description_kind);
        ensure!(t.text == e.text, "{id}: text {:?}", t.text);
        ensure!(t.testcase == e.testcase, "{id}: testcase {:?}", t.testcase);
        ensure!(t.method == e.method, "{id}: method {:?}", t.method);
    }
    let r = &first.report;
    ensure!(r.files == 6 && r.test_classes == 3, "files/test classes {}/{}", r.files, r.test_classes);
    ensure!(r.unmatched_classes == 1, "unmatched classes {}", r.unmatched_classes);
    ensure!(r.test_methods == 8 && r.unmatched_methods == 2, "test methods {}/{} unmatched", r.test_methods, r.unmatched_methods);
    ensure!(r.ambiguous_overloads == 1, "ambiguous overloads {}", r.ambiguous_overloads);
    ensure!(r.no_description == 1 && r.out_of_bounds == 1, "dropped {} / {}", r.no_description, r.out_of_bounds);
    ensure!(elapsed < Duration::from_secs(5 * 3), "3 runs took {elapsed:?}");
    Ok(format!(
        "{} triplets exact, 3 identical runs, {:.0}ms per run",
        expected.len(),
        elapsed.as_secs_f64() * 1000.0 / 3.0
    ))
}

// ---------------------------------------------------------------- split

fn dummy(i: usize) -> Triplet {
    Triplet {
        id: format!("p:T#t{i}"),
        text: format!("description number {i}"),
        testcase: String::new(),
        method: String::new(),
        focal_class: "F".into(),
        focal_method: format!("m{i}"),
        test_method: format!("t{i}"),
        description_kind: DescriptionKind::JavadocOnly,
        project_id: "p".into(),
    }
}

fn split_arithmetic() -> Verdict {
    let r = [0.6, 0.2, 0.2];
    for (n, want) in [(100, [60, 20, 20]), (101, [61, 20, 20])] {
        let got = split_sizes(n, r).map_err(|e| e.to_string())?;
        ensure!(got == want, "n={n}: {got:?} != {want:?}");
        let s = split_corpus((0..n).map(dummy).collect(), r, 7).map_err(|e| e.to_string())?;
        let sizes = [s.train.len(), s.validation.len(), s.test.len()];
        ensure!(sizes == want, "n={n}: split sizes {sizes:?}");
    }

    let strategy = (0usize..400, 0u32..=100, 0u32..=100, any::<u64>());
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, |(n, a, b, seed)| {
            let (lo, hi) = (a.min(b), a.max(b));
            let ratios = [lo as f64 / 100.0, (hi - lo) as f64 / 100.0, (100 - hi) as f64 / 100.0];
            let input: Vec<Triplet> = (0..n).map(dummy).collect();
            let s = split_corpus(input.clone(), ratios, seed).unwrap();
            let sizes = split_sizes(n, ratios).unwrap();
            prop_assert_eq!([s.train.len(), s.validation.len(), s.test.len()], sizes);
            for (part, ratio) in [(&s.train, ratios[0]), (&s.validation, ratios[1]), (&s.test, ratios[2])] {
                let floor = (n as f64 * ratio + 1e-9).floor() as usize;
                prop_assert!(part.len() >= floor && part.len() <= floor + 1);
            }
            let mut ids: Vec<&str> = s.train.iter().chain(&s.validation).chain(&s.test).map(|t| t.id.as_str()).collect();
            ids.sort_unstable();
            let mut want: Vec<&str> = input.iter().map(|t| t.id.as_str()).collect();
            want.sort_unstable();
            prop_assert_eq!(ids, want);
            prop_assert_eq!(split_corpus(input, ratios, seed).unwrap(), s);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("(60,20,20) and (61,20,20); partition held on 1000 random cases".into())
}

// ---------------------------------------------------------------- post-processing

const EXEMPLAR_ASSERTION: &str = "@Test\npublic void testGetEscape() {\n    CSVFormat format = CSVFormat.DEFAULT;\n    char expectedEscape = '\\\\';\n    assertEquals(\"escape char is the default one\", expectedEscape, format.getEscape());}";
const EXEMPLAR_SYNTAX: &str = "@Test\npublic void testIsSurroundingSpacesIgnored()\n    CSVFormat format = CSVFormat.DEFAULT;\n    boolean spacesIgnored = format.isSurroundingSpacesIgnored();\n    assertTrue(\"spaces are ignored by default\", spacesIgnored);}";
const EXEMPLAR_VALUE: &str = "@Test\npublic void testGetLineSeparator() {\n    CSVFormat format = CSVFormat.DEFAULT;\n    String expectedLineSeparator = \"\\n\";\n    assertEquals(\"line separator is the default one\", expectedLineSeparator, format.getLineSeparator());}";
const EXEMPLAR_OTHER: &str = "@Test\npublic void testJsonNullConstructor() {\n        JsonNull jsonNull = new JsonNull();\n        assertNotNull(jsonNull);\n        String value = jsonNull.getValue();\n        assertEquals(\"null\", value);}";

fn valid_tests() -> Vec<String> {
    let mut v: Vec<String> = ["addItem", "clear", "format", "round"]
        .iter()
        .map(|m| common::generation(m, common::Gen::Good))
        .collect();
    v.extend([EXEMPLAR_ASSERTION, EXEMPLAR_VALUE, EXEMPLAR_OTHER].map(String::from));
    v.push("@Test(expected = IllegalStateException.class)\npublic void testParse() throws Exception {\n    // brace in a comment {\n    String s = \"unbalanced ( [ {\";\n    char c = '}';\n    int[] xs = new int[] { 1, 2 };\n    if (xs.length > 1) { parse(s + c); }\n}".into());
    v
}

fn compiles_against_exemplars(method: &str) -> Result<bool, String> {
    let gt = GroundTruth::load(&fixture("exemplars")).map_err(|e| e.to_string())?;
    let shell = wrap_in_shell(method, Some("org.apache.commons.csv"), &shell_class_name(0));
    check_syntax(&SimToolchain::default(), &gt, &shell)
        .map(|(ok, _)| ok)
        .map_err(|e| e.to_string())
}

fn postprocessor_properties() -> Verdict {
    let seeds = valid_tests();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = 0;
    while cases < 500 {
        let seed = &seeds[rng.random_range(0..seeds.len())];
        // cut somewhere after the parameter list opens so a header survives
        let header = seed.find("void ").expect("test header");
        let min = header + seed[header..].find('(').expect("parameter list") + 1;
        let cut = rng.random_range(min..=seed.len());
        if !seed.is_char_boundary(cut) {
            continue;
        }
        let mut input = seed[..cut].to_string();
        // occasionally also lose one character in the middle
        if rng.random_bool(0.2) && input.len() > min + 1 {
            let at = rng.random_range(min..input.len());
            if input.is_char_boundary(at) && input.is_char_boundary(at + 1) {
                input.remove(at);
            }
        }
        cases += 1;
        let out = postprocess_text(&input, "someMethod").map_err(|e| format!("case {cases} {input:?}: {e}"))?;
        ensure!(verify_signature(&out.repaired).ok, "signature fails on {:?}", out.repaired);
        ensure!(is_balanced(&out.repaired), "unbalanced output {:?}", out.repaired);
        let again = postprocess_text(&out.repaired, "someMethod").map_err(|e| e.to_string())?;
        ensure!(again.repaired == out.repaired && again.repairs.is_empty(), "not idempotent on {input:?}");
    }

    let fixed = postprocess_text(EXEMPLAR_SYNTAX, "isSurroundingSpacesIgnored").map_err(|e| e.to_string())?;
    ensure!(!compiles_against_exemplars(EXEMPLAR_SYNTAX)?, "raw missing-brace test unexpectedly compiles");
    ensure!(compiles_against_exemplars(&fixed.repaired)?, "repaired test does not compile:\n{}", fixed.repaired);
    Ok(format!("{cases} fuzzed truncations all repaired and idempotent; missing-brace test now compiles"))
}

// ---------------------------------------------------------------- mutation

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(String),
    Str(String),
    Chr,
    Op(String),
}

const MULTI: [&str; 25] = [
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "<<", ">>",
];

fn lex(src: &str) -> Vec<Tok> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if src[i..].starts_with("//") {
            i = src[i..].find('\n').map_or(b.len(), |n| i + n);
        } else if src[i..].starts_with("/*") {
            i = src[i + 2..].find("*/").map_or(b.len(), |n| i + 2 + n + 2);
        } else if c == b'"' || c == b'\'' {
            let start = i;
            i += 1;
            while i < b.len() && b[i] != c {
                i += if b[i] == b'\\' { 2 } else { 1 };
            }
            i += 1;
            out.push(if c == b'"' { Tok::Str(src[start..i].to_string()) } else { Tok::Chr });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'.') {
                i += 1;
            }
            out.push(Tok::Num(src[start..i].to_string()));
        } else if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'$') {
                i += 1;
            }
            out.push(Tok::Word(src[start..i].to_string()));
        } else {
            let op = MULTI.iter().find(|m| src[i..].starts_with(**m)).map_or(&src[i..i + 1], |m| *m);
            i += op.len();
            out.push(Tok::Op(op.to_string()));
        }
    }
    out
}

const KEYWORDS: [&str; 12] = ["return", "throw", "case", "new", "else", "do", "assert", "if", "while", "for", "switch", "yield"];
const TYPES: [&str; 10] = ["int", "long", "short", "byte", "char", "boolean", "double", "float", "var", "final"];
const STATEMENT_KEYWORDS: [&str; 10] = ["if", "for", "while", "do", "throw", "break", "continue", "try", "return", "assert"];

fn is_op(t: Option<&Tok>, s: &str) -> bool {
    matches!(t, Some(Tok::Op(o)) if o == s)
}

fn ends_operand(t: Option<&Tok>) -> bool {
    match t {
        Some(Tok::Word(w)) => !KEYWORDS.contains(&w.as_str()),
        Some(Tok::Num(_) | Tok::Str(_) | Tok::Chr) => true,
        Some(Tok::Op(o)) => matches!(o.as_str(), ")" | "]" | "++" | "--"),
        None => false,
    }
}

fn plain_word(t: Option<&Tok>) -> bool {
    matches!(t, Some(Tok::Word(w)) if !KEYWORDS.contains(&w.as_str()) && !STATEMENT_KEYWORDS.contains(&w.as_str()))
}

/// Mutant counts per operator found by scanning tokens: every operator,
/// literal and statement inside a method or constructor body.
fn token_oracle(src: &str) -> BTreeMap<Operator, usize> {
    let toks = lex(src);
    let mut counts: BTreeMap<Operator, usize> = BTreeMap::new();
    fn bump(counts: &mut BTreeMap<Operator, usize>, op: Operator, n: usize) {
        *counts.entry(op).or_default() += n;
    }
    let add = bump;
    let (mut depth, mut parens) = (0usize, 0usize);
    let mut at_start = false;
    // statement starts directly inside the current member body
    let mut body_statements: Vec<(usize, bool)> = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &toks[j]);
        let next = toks.get(i + 1);
        let in_body = depth >= 2;
        if in_body && at_start && parens == 0 {
            at_start = false;
            let deletable = match t {
                Tok::Op(o) if o == "}" || o == "{" => o == "{",
                Tok::Word(w) if w == "else" || w == "catch" || w == "finally" => false,
                Tok::Word(w) if STATEMENT_KEYWORDS.contains(&w.as_str()) => true,
                Tok::Word(w) if TYPES.contains(&w.as_str()) => false,
                Tok::Word(_) if plain_word(next) => false,
                Tok::Word(_) if is_op(next, "[") && is_op(toks.get(i + 2), "]") => false,
                _ => true,
            };
            if deletable && !is_op(Some(t), "{") {
                add(&mut counts, Operator::STD, 1);
            }
            let continuation = matches!(t, Tok::Word(w) if w == "else" || w == "catch" || w == "finally");
            if depth == 2 && !is_op(Some(t), "}") && !continuation {
                let sole_return_value = matches!(t, Tok::Word(w) if w == "return") && !is_op(next, ";");
                body_statements.push((i, sole_return_value));
            }
        }
        match t {
            Tok::Op(o) => match o.as_str() {
                "{" => {
                    depth += 1;
                    if depth == 2 {
                        body_statements.clear();
                    }
                    at_start = depth >= 2;
                }
                "}" => {
                    if depth == 2 && body_statements.len() == 1 && body_statements[0].1 {
                        // a lone `return value;` cannot go
                        *counts.get_mut(&Operator::STD).expect("counted at its start") -= 1;
                    }
                    depth -= 1;
                    at_start = depth >= 2;
                }
                ";" => at_start = parens == 0,
                "(" => parens += 1,
                ")" => parens -= 1,
                _ if !in_body => {}
                "+" | "-" | "*" | "/" | "%" if ends_operand(prev) => add(&mut counts, Operator::AOR, 4),
                "-" if !matches!(next, Some(Tok::Num(_))) => add(&mut counts, Operator::ORU, 1),
                "!" | "~" => add(&mut counts, Operator::ORU, 1),
                "&" | "|" | "^" => add(&mut counts, Operator::LOR, 2),
                "&&" | "||" => add(&mut counts, Operator::COR, 1),
                "<<" | ">>" | ">>>" => add(&mut counts, Operator::SOR, 2),
                "<" | "<=" | ">" | ">=" | "==" | "!=" => add(&mut counts, Operator::ROR, 5),
                _ => {}
            },
            _ if !in_body => {}
            Tok::Num(n) => {
                let v: f64 = n.trim_end_matches(['l', 'L', 'f', 'F', 'd', 'D']).parse().expect("decimal literal");
                add(&mut counts, Operator::LVR, if v == 0.0 || v == 1.0 { 2 } else { 3 });
            }
            Tok::Word(w) if w == "true" || w == "false" => add(&mut counts, Operator::LVR, 1),
            Tok::Str(s) if s != "\"\"" => add(&mut counts, Operator::LVR, 1),
            _ => {}
        }
    }
    counts.retain(|_, n| *n > 0);
    counts
}

fn engine_counts(file: &str, src: &str) -> Result<BTreeMap<Operator, usize>, String> {
    let mut counts = BTreeMap::new();
    for m in enumerate_mutants(file, src, &Operator::ALL).map_err(|e| e.to_string())? {
        *counts.entry(m.operator).or_default() += 1;
    }
    Ok(counts)
}

fn load_tree(root: &Path) -> Vec<JavaSource> {
    t2t_core::miner::java_files(root)
        .unwrap()
        .into_iter()
        .map(|(rel, abs)| JavaSource::new(rel, read(&abs)))
        .collect()
}

fn mutation_oracle() -> Verdict {
    let calc_root = fixture("mutation/calc");
    let calc = read(&calc_root.join("src/demo/Calc.java"));
    let oracle = token_oracle(&calc);
    let engine = engine_counts("demo/Calc.java", &calc)?;
    ensure!(oracle == engine, "Calc.java per-operator counts: oracle {oracle:?}, engine {engine:?}");
    ensure!(oracle.len() == 8, "Calc.java should exercise all eight operators: {oracle:?}");
    // the same oracle on every other fixture source
    for root in ["mini", "exemplars", "mutation/steps"] {
        for s in load_tree(&fixture(root)) {
            let (o, e) = (token_oracle(&s.content), engine_counts(&s.path, &s.content)?);
            ensure!(o == e, "{root}/{}: oracle {o:?}, engine {e:?}", s.path);
        }
    }

    let start = Instant::now();
    let tc = SimToolchain::default();
    let cfg = KillConfig {
        timeout: Duration::from_secs(5),
        workers: 4,
    };
    let sources = load_tree(&calc_root.join("src"));
    let mutants = enumerate_mutants("demo/Calc.java", &calc, &Operator::ALL).map_err(|e| e.to_string())?;
    let classes = ["demo.CalcTest".to_string()];
    let score = |tests: &[JavaSource], classes: &[String]| -> Result<f64, String> {
        let m = run_kill_analysis(&mutants, &sources, tests, classes, &tc, &cfg).map_err(|e| e.to_string())?;
        compute_mutation_score(&m).map_err(|e| e.to_string())
    };
    let complete = score(&load_tree(&calc_root.join("complete")), &classes)?;
    ensure!(complete == 1.0, "complete suite scored {complete}");
    let empty = score(&[], &[])?;
    ensure!(empty == 0.0, "empty suite scored {empty}");
    // weak suite: add(7,3) kills all 4 AOR mutants of `a + b`; isPositive(1)
    // kills `<`, `<=`, `==` and `x > 1`; 1 of the 47 mutants (deleting
    // sign's final return) does not compile.
    let weak = score(&load_tree(&calc_root.join("weak")), &classes)?;
    let hand = 8.0 / 46.0;
    ensure!(mutants.len() == 47, "{} mutants, expected 47", mutants.len());
    ensure!(weak == hand, "weak suite scored {weak}, hand value {hand}");

    // `i < n` → `i != n` never terminates for odd n; a timeout counts as a kill
    let steps = load_tree(&fixture("mutation/steps/src"));
    let ror = enumerate_mutants("demo/Steps.java", &steps[0].content, &[Operator::ROR]).map_err(|e| e.to_string())?;
    let ne: Vec<_> = ror.into_iter().filter(|m| m.replacement == "!=").collect();
    ensure!(ne.len() == 1, "expected one `!=` mutant");
    let quick = KillConfig {
        timeout: Duration::from_secs(2),
        workers: 1,
    };
    let m = run_kill_analysis(&ne, &steps, &load_tree(&fixture("mutation/steps/test")), &["demo.StepsTest".into()], &tc, &quick)
        .map_err(|e| e.to_string())?;
    ensure!(m.outcomes[&ne[0].id] == Outcome::TimedOut, "loop mutant: {:?}", m.outcomes[&ne[0].id]);
    ensure!(compute_mutation_score(&m).map_err(|e| e.to_string())? == 1.0, "timed-out mutant not counted as killed");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "kill analysis took {elapsed:?}");
    Ok(format!(
        "counts match oracle ({} mutants); complete 100%, empty 0%, weak {:.4}% = 8/46; timeout killed; {:.1}s (simulator)",
        mutants.len(),
        weak * 100.0,
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- classifier

fn error_classifier() -> Verdict {
    let gt = GroundTruth::load(&fixture("exemplars")).map_err(|e| e.to_string())?;
    let exemplars = [
        (EXEMPLAR_ASSERTION, "CSVFormat", ErrorCategory::AssertionError),
        (EXEMPLAR_SYNTAX, "CSVFormat", ErrorCategory::SyntaxError),
        (EXEMPLAR_VALUE, "CSVFormat", ErrorCategory::ValueError),
        (EXEMPLAR_OTHER, "JsonNull", ErrorCategory::Other),
    ];
    let items: Vec<EvalItem> = exemplars
        .iter()
        .enumerate()
        .map(|(i, (src, focal, _))| EvalItem {
            id: format!("exemplar-{}", i + 1),
            focal_class: focal.to_string(),
            test_source: src.to_string(),
        })
        .collect();
    let out = evaluate_project(&SimToolchain::default(), &gt, &items, &EvalOptions::default()).map_err(|e| e.to_string())?;
    let mut hits = 0;
    for (r, (_, _, want)) in out.records.iter().zip(&exemplars) {
        ensure!(
            r.error_category == Some(*want),
            "{}: {:?} != {want:?} ({})",
            r.test_id,
            r.error_category,
            r.detail.as_deref().unwrap_or("")
        );
        hits += 1;
    }
    Ok(format!("{hits}/4 exemplars classified exactly"))
}

// ---------------------------------------------------------------- metrics

fn record(syntax_ok: bool, aligned: Option<bool>, cov: Option<(u64, u64)>) -> EvaluationRecord {
    EvaluationRecord {
        test_id: "t".into(),
        syntax_ok,
        aligned,
        covered_lines: cov.map(|c| c.0),
        coverable_lines: cov.map(|c| c.1),
        error_category: None,
        detail: None,
    }
}

fn metric_aggregation() -> Verdict {
    // 3 of 4 compile, 2 of 4 pass; the passing two cover 3/10 and 7/10.
    let batch = [
        record(true, Some(true), Some((3, 10))),
        record(true, Some(true), Some((7, 10))),
        record(true, Some(false), None),
        record(false, None, None),
    ];
    let m = aggregate_metrics("p", &batch, None).map_err(|e| e.to_string())?;
    let got = [m.syntax_correctness, m.requirement_alignment, m.code_coverage];
    ensure!(
        got.iter().zip([75.0, 50.0, 50.0]).all(|(g, w)| (g - w).abs() < 1e-9),
        "{got:?} != (75, 50, 50)"
    );

    let rec = (any::<bool>(), any::<bool>(), 0u64..50, 0u64..50).prop_map(|(syntax, pass, a, b)| {
        let (covered, coverable) = (a.min(b), a.max(b));
        if syntax {
            record(true, Some(pass), pass.then_some((covered, coverable)))
        } else {
            record(false, None, None)
        }
    });
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&proptest::collection::vec(rec, 1..40), |batch| {
            let m = aggregate_metrics("p", &batch, None).unwrap();
            prop_assert!(m.requirement_alignment <= m.syntax_correctness);
            prop_assert!((0.0..=100.0).contains(&m.syntax_correctness));
            prop_assert!((0.0..=100.0).contains(&m.code_coverage));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("(75.0, 50.0, 50.0) reproduced; alignment <= syntax on 1000 random batches".into())
}

// ---------------------------------------------------------------- wilcoxon

/// Two-sided p by listing all 2^n sign patterns over the mid-ranks.
fn enumerate_p(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    let mut ranks = vec![0.0; n];
    for i in 0..n {
        let below = d.iter().filter(|x| x.abs() < d[i].abs()).count();
        let equal = d.iter().filter(|x| x.abs() == d[i].abs()).count();
        ranks[i] = below as f64 + (equal as f64 + 1.0) / 2.0;
    }
    let total: f64 = ranks.iter().sum();
    let plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let stat = plus.min(total - plus);
    let mut at_most = 0u64;
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if w <= stat + 1e-9 {
            at_most += 1;
        }
    }
    (stat, (2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0))
}

fn wilcoxon() -> Verdict {
    let r = wilcoxon_signed_rank(&[1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0], &[2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).map_err(|e| e.to_string())?;
    ensure!(r.statistic == 0.0 && (r.p_value - 0.03125).abs() < 1e-12, "worked example gave {r:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for n in 1..=12usize {
        for case in 0..40 {
            // small integers give ties and zero differences
            let spread = if case % 2 == 0 { 4 } else { 1000 };
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..spread) as f64).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..spread) as f64).collect();
            let nonzero = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            match wilcoxon_signed_rank(&a, &b) {
                Err(StatsError::TooFewPairs(k)) => ensure!(nonzero < 5 && k == nonzero, "n={n}: refused {k} pairs"),
                Err(e) => return Err(format!("n={n}: {e}")),
                Ok(r) => {
                    ensure!(nonzero >= 5 && r.exact, "n={n}: unexpected result {r:?}");
                    let (stat, p) = enumerate_p(&a, &b);
                    ensure!(r.statistic == stat, "n={n}: statistic {} != {stat}", r.statistic);
                    worst = worst.max((r.p_value - p).abs());
                    ensure!((r.p_value - p).abs() < 1e-12, "n={n}: p {} != {p}", r.p_value);
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("worked example exact; {checked} random samples (n <= 12) within {worst:.1e} of enumeration"))
}

// ---------------------------------------------------------------- end to end

fn mtimes(dir: &Path) -> HashMap<String, SystemTime> {
    walkdir_files(dir)
        .into_iter()
        .map(|p| {
            let t = std::fs::metadata(&p).and_then(|m| m.modified()).unwrap();
            (p.display().to_string(), t)
        })
        .collect()
}

fn walkdir_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out
}

fn end_to_end_replay() -> Verdict {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let triplets = build_triplets(&fixture("mini"), &MineOptions::default()).map_err(|e| e.to_string())?.triplets;
    let replay = tmp.path().join("replay");
    write_replay_stores(&replay, &triplets, None);
    let out = tmp.path().join("runs");
    let cfg = MatrixConfig::from_toml(&matrix_toml(&replay, &out)).map_err(|e| e.to_string())?;

    let first = run_matrix(&cfg).map_err(|e| e.to_string())?;
    ensure!(first.computed == 4 && first.reused == 0, "first run computed {} reused {}", first.computed, first.reused);
    for v in Variant::ALL {
        let cell = first.grid.get(v, "mini").ok_or(format!("{v}: cell missing"))?;
        let Cell::Completed { metrics } = cell else {
            return Err(format!("{v}: {cell:?}"));
        };
        let (syntax, aligned) = planned_metrics(v);
        ensure!(
            metrics.syntax_correctness == syntax && metrics.requirement_alignment == aligned,
            "{v}: got ({}, {}), planned ({syntax}, {aligned})",
            metrics.syntax_correctness,
            metrics.requirement_alignment
        );
        ensure!(metrics.code_coverage > 0.0, "{v}: no coverage");
    }
    let before = mtimes(&out.join("cells"));

    let second = run_matrix(&cfg).map_err(|e| e.to_string())?;
    ensure!(second.computed == 0 && second.reused == 4, "rerun computed {} reused {}", second.computed, second.reused);
    ensure!(second.grid == first.grid, "rerun changed the grid");
    ensure!(mtimes(&out.join("cells")) == before, "rerun rewrote cell artifacts");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok("4/4 cells completed with planned metrics; rerun reused 4, recomputed 0".to_string())
}

// ---------------------------------------------------------------- fine-tune export

fn finetune_export() -> Verdict {
    let triplets = build_triplets(&fixture("mini"), &MineOptions::default()).map_err(|e| e.to_string())?.triplets;
    let text = finetune_jsonl(&triplets);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = tmp.path().join("ft.jsonl");
    std::fs::write(&path, &text).map_err(|e| e.to_string())?;
    let records: Vec<FineTuneRecord> = t2t_core::jsonl::read(&path).map_err(|e| e.to_string())?;
    ensure!(records.len() == triplets.len(), "{} records for {} triplets", records.len(), triplets.len());
    let again = t2t_core::jsonl::to_string(&records);
    ensure!(again.as_bytes() == std::fs::read(&path).map_err(|e| e.to_string())?, "re-serialized dataset differs");
    let cost: f64 = estimate_cost(1000, FINETUNE_RATE_PER_1K);
    ensure!(cost == 0.0080, "cost {cost}");
    Ok(format!("{} records round-trip byte-identically; 1000 tokens -> {cost:.4}", records.len()))
}
