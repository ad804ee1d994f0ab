#![allow(dead_code)]

use std::path::{Path, PathBuf};

use t2t_core::gateway::ReplayEntry;
use t2t_core::miner::Triplet;
use t2t_core::orchestrator::{prompts_for, Variant};
use t2t_core::prompt::Demonstration;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// How a canned generation behaves once compiled and run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gen {
    Good,
    /// Good, but cut off before the closing brace.
    Truncated,
    /// Compiles, fails an assertion.
    Wrong,
    /// Does not compile.
    Broken,
}

/// Canned model output for a focal method of the `mini` fixture.
pub fn generation(focal_method: &str, kind: Gen) -> String {
    let good = match focal_method {
        "addItem" => "@Test\npublic void testAddItem() {\n    Cart cart = new Cart();\n    assertEquals(1, cart.addItem());\n    assertEquals(2, cart.addItem());\n}",
        "clear" => "@Test\npublic void testClear() {\n    Cart cart = new Cart();\n    cart.addItem();\n    cart.clear();\n    assertEquals(0, cart.size());\n}",
        "format" => "@Test\npublic void testFormat() {\n    assertEquals(\"$12.50\", new Price().format(1250));\n    assertEquals(\"$0.07\", new Price().format(7));\n}",
        "round" => "@Test\npublic void testRound() {\n    assertEquals(130, new Price().round(126));\n}",
        other => panic!("no canned test for {other}"),
    };
    match kind {
        Gen::Good => good.to_string(),
        Gen::Truncated => good.trim_end_matches('}').trim_end().to_string(),
        Gen::Wrong => good
            .replace("assertEquals(2, cart.addItem())", "assertEquals(3, cart.addItem())")
            .replace("assertEquals(0, cart.size())", "assertEquals(1, cart.size())")
            .replace("\"$12.50\"", "\"12.50\"")
            .replace("assertEquals(130,", "assertEquals(120,"),
        Gen::Broken => good
            .replace("cart.clear()", "cart.empty()")
            .replace(".addItem()", ".add()")
            .replace(".format(", ".render(")
            .replace(".round(", ".roundUp("),
    }
}

/// Per-variant outcome for (addItem, clear, format, round).
pub fn plan(variant: Variant) -> [Gen; 4] {
    match variant.label() {
        "FT+I.P" => [Gen::Good, Gen::Truncated, Gen::Good, Gen::Good],
        "FT+B.P" => [Gen::Good, Gen::Good, Gen::Good, Gen::Wrong],
        "NoFT+I.P" => [Gen::Good, Gen::Good, Gen::Wrong, Gen::Broken],
        "NoFT+B.P" => [Gen::Good, Gen::Broken, Gen::Wrong, Gen::Broken],
        other => panic!("unknown variant {other}"),
    }
}

/// Expected (syntax correctness, requirement alignment) under [`plan`].
pub fn planned_metrics(variant: Variant) -> (f64, f64) {
    let p = plan(variant);
    let n = p.len() as f64;
    let syntax = p.iter().filter(|g| **g != Gen::Broken).count() as f64;
    let aligned = p.iter().filter(|g| matches!(g, Gen::Good | Gen::Truncated)).count() as f64;
    (syntax * 100.0 / n, aligned * 100.0 / n)
}

fn slot(focal_method: &str) -> usize {
    ["addItem", "clear", "format", "round"]
        .iter()
        .position(|m| *m == focal_method)
        .unwrap_or_else(|| panic!("unexpected focal method {focal_method}"))
}

/// Writes `<dir>/<slug>.jsonl` replay stores answering every prompt the
/// matrix will send for `triplets`. `skip` leaves a variant's store empty.
pub fn write_replay_stores(dir: &Path, triplets: &[Triplet], skip: Option<Variant>) {
    std::fs::create_dir_all(dir).unwrap();
    for variant in Variant::ALL {
        let (prompts, rejected) = prompts_for(variant.prompt, triplets, &Demonstration::default());
        assert!(rejected.is_empty(), "{rejected:?}");
        let entries: Vec<ReplayEntry> = if skip == Some(variant) {
            Vec::new()
        } else {
            prompts
                .iter()
                .map(|p| {
                    let kind = plan(variant)[slot(&p.focal_method)];
                    let stop = if kind == Gen::Truncated { "length" } else { "stop" };
                    ReplayEntry::new(&p.prompt.rendered, generation(&p.focal_method, kind), stop)
                })
                .collect()
        };
        t2t_core::jsonl::write(&dir.join(format!("{}.jsonl", variant.slug())), &entries).unwrap();
    }
}

/// A run configuration over the `mini` fixture answering from `replay`.
pub fn matrix_toml(replay: &Path, out: &Path) -> String {
    format!(
        "projects = [{:?}]\nout = {:?}\nworkers = 2\ntest_timeout_secs = 20\n\n[backend]\nkind = \"replay\"\ndir = {:?}\n",
        fixture("mini").display().to_string(),
        out.display().to_string(),
        replay.display().to_string(),
    )
}
