use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;

use super::coverage::measure_coverage;
use super::shell::{shell_class_name, wrap_in_shell, TestShell};
use super::{aggregate_metrics, category_histogram_csv, classify_error, ErrorCategory, EvalError, EvaluationRecord, ProjectMetrics};
use crate::miner::{
    identify_test_classes, index_project, parse_source, ClassInfo, MineReport, StructuralIndex,
};
use crate::mutation::{
    cap_per_class, compute_mutation_score, enumerate_mutants, run_kill_analysis, KillConfig, KillMatrix, MutationError, Operator,
};
use crate::toolchain::{CompileOutcome, CompiledProgram, JavaSource, JavaToolchain, RunOptions, RunOutput};

/// One generated test to score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalItem {
    pub id: String,
    /// Simple name or fqn of the class under test.
    pub focal_class: String,
    /// The (repaired) test method text.
    pub test_source: String,
}

/// The unmodified project the generated tests run against. Only main
/// sources are kept; the project's own tests are left out.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub project_id: String,
    pub sources: Vec<JavaSource>,
    index: StructuralIndex,
}

fn in_test_tree(path: &str) -> bool {
    let mut dirs: Vec<&str> = path.split('/').collect();
    let file = dirs.pop().unwrap_or("");
    let stem = file.strip_suffix(".java").unwrap_or(file);
    dirs.iter().any(|d| *d == "test" || *d == "tests") || stem.ends_with("Test") || stem.ends_with("Tests")
}

impl GroundTruth {
    pub fn load(root: &Path) -> Result<Self, EvalError> {
        let mut report = MineReport::default();
        let full = index_project(root, None, &mut report)?;
        let test_files: BTreeSet<String> = identify_test_classes(&full)
            .into_iter()
            .map(|c| full.class(c).file_path.clone())
            .collect();
        let sources = full
            .files
            .iter()
            .filter(|f| !in_test_tree(&f.path) && !test_files.contains(&f.path))
            .map(|f| JavaSource::new(f.path.clone(), f.content.to_string()))
            .collect();
        Ok(Self::from_sources(full.project_id.clone(), sources))
    }

    /// Sources keyed by package path (`org/demo/Calc.java`) or by any
    /// project-relative path; packages come from the declarations.
    pub fn from_sources(project_id: impl Into<String>, sources: Vec<JavaSource>) -> Self {
        let project_id = project_id.into();
        let fragments = sources.iter().map(|s| parse_source(&s.path, &s.content)).collect();
        let index = StructuralIndex::from_fragments(project_id.clone(), fragments);
        GroundTruth {
            project_id,
            sources,
            index,
        }
    }

    /// Finds a focal class by fqn, nested name or simple name. Top-level
    /// classes win over nested ones of the same simple name.
    pub fn resolve_focal(&self, name: &str) -> Option<&ClassInfo> {
        let name = name.replace('$', ".");
        let classes = &self.index.classes;
        classes
            .iter()
            .find(|c| c.fqn == name)
            .or_else(|| classes.iter().find(|c| c.name == name && c.top_level))
            .or_else(|| classes.iter().find(|c| c.name == name || c.simple_name == name))
    }
}

fn package_of(class: &ClassInfo) -> Option<String> {
    let suffix = format!(".{}", class.name);
    class.fqn.strip_suffix(&suffix).map(str::to_string)
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Per test execution.
    pub timeout: Duration,
    pub workers: usize,
    /// Operators for mutation analysis; `None` skips it.
    pub mutation: Option<Vec<Operator>>,
    pub mutation_timeout: Duration,
    /// Per-class mutant cap.
    pub max_mutants: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            timeout: Duration::from_secs(30),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            mutation: None,
            mutation_timeout: Duration::from_secs(10),
            max_mutants: None,
        }
    }
}

/// What running a shell against the ground truth showed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub aligned: bool,
    /// Headline of the first failure, or why nothing ran.
    pub failure_text: Option<String>,
    /// Set when execution itself failed (timeout, launcher fault, no tests).
    pub execution_fault: bool,
    pub coverage_xml: Option<String>,
}

fn with_shell(gt: &GroundTruth, shells: &[&TestShell]) -> Vec<JavaSource> {
    gt.sources
        .iter()
        .cloned()
        .chain(shells.iter().map(|s| s.source.clone()))
        .collect()
}

/// Compiles the shell against the ground-truth sources.
pub fn check_syntax(
    toolchain: &dyn JavaToolchain,
    gt: &GroundTruth,
    shell: &TestShell,
) -> Result<(bool, String), EvalError> {
    Ok(match toolchain.compile(&with_shell(gt, &[shell]))? {
        CompileOutcome::Compiled(_) => (true, String::new()),
        CompileOutcome::Failed { diagnostics } => (false, diagnostics),
    })
}

fn run_shell(program: &dyn CompiledProgram, shell: &TestShell, timeout: Duration) -> Result<Alignment, EvalError> {
    let opts = RunOptions { timeout, coverage: true };
    let fault = |text: String| Alignment {
        aligned: false,
        failure_text: Some(text),
        execution_fault: true,
        coverage_xml: None,
    };
    Ok(match program.run_tests(&shell.fqn, &opts)? {
        RunOutput::TimedOut => fault(format!("timed out after {}s", timeout.as_secs())),
        RunOutput::LauncherFault { detail } => fault(detail),
        RunOutput::Completed { results, .. } if results.is_empty() => fault("no test methods executed".to_string()),
        RunOutput::Completed { results, coverage_xml } => {
            let failure = results.iter().find_map(|r| r.failure_text());
            Alignment {
                aligned: failure.is_none(),
                failure_text: failure,
                execution_fault: false,
                coverage_xml,
            }
        }
    })
}

/// Runs the shell's tests against the ground truth. A shell that does not
/// compile reports as unaligned with the diagnostics as failure text.
pub fn check_alignment(
    toolchain: &dyn JavaToolchain,
    gt: &GroundTruth,
    shell: &TestShell,
    timeout: Duration,
) -> Result<Alignment, EvalError> {
    match toolchain.compile(&with_shell(gt, &[shell]))? {
        CompileOutcome::Compiled(p) => run_shell(p.as_ref(), shell, timeout),
        CompileOutcome::Failed { diagnostics } => Ok(Alignment {
            aligned: false,
            failure_text: Some(diagnostics),
            execution_fault: false,
            coverage_xml: None,
        }),
    }
}

fn evaluate_one(
    toolchain: &dyn JavaToolchain,
    gt: &GroundTruth,
    shell: &TestShell,
    focal_fqn: Option<&str>,
    id: &str,
    timeout: Duration,
) -> Result<EvaluationRecord, EvalError> {
    let mut record = EvaluationRecord {
        test_id: id.to_string(),
        syntax_ok: false,
        aligned: None,
        covered_lines: None,
        coverable_lines: None,
        error_category: None,
        detail: None,
    };
    let program = match toolchain.compile(&with_shell(gt, &[shell]))? {
        CompileOutcome::Compiled(p) => p,
        CompileOutcome::Failed { diagnostics } => {
            record.error_category = Some(ErrorCategory::SyntaxError);
            record.detail = Some(diagnostics);
            return Ok(record);
        }
    };
    record.syntax_ok = true;
    let run = run_shell(program.as_ref(), shell, timeout)?;
    record.aligned = Some(run.aligned);
    if !run.aligned {
        let text = run.failure_text.unwrap_or_default();
        record.error_category = Some(if run.execution_fault {
            ErrorCategory::Other
        } else {
            classify_error(&text, true)
        });
        record.detail = Some(text);
        return Ok(record);
    }
    let (Some(xml), Some(focal)) = (run.coverage_xml.as_deref(), focal_fqn) else {
        log::warn!("{id}: no coverage data");
        return Ok(record);
    };
    let (covered, coverable) = match measure_coverage(xml, focal) {
        Ok(c) => c,
        Err(EvalError::ClassNotInReport(c)) => {
            log::warn!("{id}: {c} missing from coverage report");
            (0, 0)
        }
        Err(e) => return Err(e),
    };
    record.covered_lines = Some(covered);
    record.coverable_lines = Some(coverable);
    Ok(record)
}

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub records: Vec<EvaluationRecord>,
    pub metrics: ProjectMetrics,
    pub kill_matrix: Option<KillMatrix>,
}

/// Scores a batch of generated tests against one project.
pub fn evaluate_project(
    toolchain: &dyn JavaToolchain,
    gt: &GroundTruth,
    items: &[EvalItem],
    opts: &EvalOptions,
) -> Result<EvalOutput, EvalError> {
    if items.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let prepared: Vec<(TestShell, Option<&ClassInfo>)> = items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let focal = gt.resolve_focal(&item.focal_class);
            if focal.is_none() {
                log::warn!("{}: focal class {} not found", item.id, item.focal_class);
            }
            let pkg = focal.and_then(package_of);
            (wrap_in_shell(&item.test_source, pkg.as_deref(), &shell_class_name(i)), focal)
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .expect("thread pool");
    let records: Vec<EvaluationRecord> = pool.install(|| {
        prepared
            .par_iter()
            .zip(items)
            .map(|((shell, focal), item)| {
                evaluate_one(toolchain, gt, shell, focal.map(|c| c.fqn.as_str()), &item.id, opts.timeout)
            })
            .collect::<Result<_, _>>()
    })?;

    let kill_matrix = match &opts.mutation {
        Some(ops) => mutation_matrix(toolchain, gt, &prepared, &records, ops, opts)?,
        None => None,
    };
    let score = match &kill_matrix {
        Some(m) => Some(compute_mutation_score(m)?),
        None => None,
    };
    let metrics = aggregate_metrics(&gt.project_id, &records, score)?;
    Ok(EvalOutput {
        records,
        metrics,
        kill_matrix,
    })
}

/// Mutates every focal file of the batch and runs the aligned shells as
/// the suite. `None` when the focal code yields no mutants.
fn mutation_matrix(
    toolchain: &dyn JavaToolchain,
    gt: &GroundTruth,
    prepared: &[(TestShell, Option<&ClassInfo>)],
    records: &[EvaluationRecord],
    ops: &[Operator],
    opts: &EvalOptions,
) -> Result<Option<KillMatrix>, EvalError> {
    let files: BTreeSet<&str> = prepared
        .iter()
        .filter_map(|(_, f)| f.map(|c| c.file_path.as_str()))
        .collect();
    let mut mutants = Vec::new();
    for file in files {
        let Some(src) = gt.sources.iter().find(|s| s.path == file) else { continue };
        mutants.extend(enumerate_mutants(file, &src.content, ops)?);
    }
    let mutants = cap_per_class(mutants, opts.max_mutants);
    if mutants.is_empty() {
        log::warn!("{}: focal code yields no mutants", gt.project_id);
        return Ok(None);
    }
    let suite: Vec<&TestShell> = prepared
        .iter()
        .zip(records)
        .filter(|(_, r)| r.aligned == Some(true))
        .map(|((s, _), _)| s)
        .collect();
    let tests: Vec<JavaSource> = suite.iter().map(|s| s.source.clone()).collect();
    let classes: Vec<String> = suite.iter().map(|s| s.fqn.clone()).collect();
    let cfg = KillConfig {
        timeout: opts.mutation_timeout,
        workers: opts.workers,
    };
    match run_kill_analysis(&mutants, &gt.sources, &tests, &classes, toolchain, &cfg) {
        Ok(m) => Ok(Some(m)),
        Err(MutationError::EmptyMatrix) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Writes `records.jsonl`, `metrics.json`, `error_categories.csv` and, with
/// mutation analysis, `kills.json`.
pub fn write_outputs(dir: &Path, out: &EvalOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("records.jsonl"), crate::jsonl::to_string(&out.records))?;
    let metrics = serde_json::to_string_pretty(&out.metrics).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("metrics.json"), metrics + "\n")?;
    std::fs::write(dir.join("error_categories.csv"), category_histogram_csv(&out.records))?;
    if let Some(m) = &out.kill_matrix {
        let kills = serde_json::to_string_pretty(m).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("kills.json"), kills + "\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolchain::SimToolchain;

    const CALC: &str = "package demo;\n\npublic class Calc {\n    public int add(int a, int b) {\n        return a + b;\n    }\n\n    public int twice(int a) {\n        return a * 2;\n    }\n}\n";

    fn gt() -> GroundTruth {
        GroundTruth::from_sources("demo", vec![JavaSource::new("demo/Calc.java", CALC)])
    }

    fn item(id: &str, body: &str) -> EvalItem {
        EvalItem {
            id: id.into(),
            focal_class: "Calc".into(),
            test_source: body.into(),
        }
    }

    #[test]
    fn test_tree_paths() {
        assert!(in_test_tree("src/test/java/demo/Helper.java"));
        assert!(in_test_tree("demo/CalcTest.java"));
        assert!(!in_test_tree("src/main/java/demo/Calc.java"));
        assert!(!in_test_tree("src/main/java/demo/Testing.java"));
    }

    #[test]
    fn focal_resolution() {
        let g = gt();
        assert_eq!(g.resolve_focal("Calc").unwrap().fqn, "demo.Calc");
        assert_eq!(g.resolve_focal("demo.Calc").unwrap().fqn, "demo.Calc");
        assert!(g.resolve_focal("Nope").is_none());
        assert_eq!(package_of(g.resolve_focal("Calc").unwrap()).as_deref(), Some("demo"));
    }

    #[test]
    fn syntax_and_alignment() {
        let g = gt();
        let tc = SimToolchain::default();
        let ok = wrap_in_shell("@Test public void t() {}", Some("demo"), "A1Test");
        assert_eq!(check_syntax(&tc, &g, &ok).unwrap(), (true, String::new()));
        let broken = wrap_in_shell("@Test public void t()\n  int x = 1;\n}", Some("demo"), "A2Test");
        let (pass, diag) = check_syntax(&tc, &g, &broken).unwrap();
        assert!(!pass);
        assert!(diag.contains("expected"), "{diag}");

        let good = wrap_in_shell("@Test public void t() { assertEquals(3, new Calc().add(1, 2)); }", Some("demo"), "A3Test");
        let a = check_alignment(&tc, &g, &good, Duration::from_secs(30)).unwrap();
        assert!(a.aligned && a.coverage_xml.is_some());
        let bad = wrap_in_shell("@Test public void t() { assertEquals(4, new Calc().add(1, 2)); }", Some("demo"), "A4Test");
        let a = check_alignment(&tc, &g, &bad, Duration::from_secs(30)).unwrap();
        assert!(!a.aligned);
        assert!(a.failure_text.unwrap().contains("expected:<4> but was:<3>"));
    }

    #[test]
    fn batch_records_and_metrics() {
        let items = [
            item("p:a#1", "@Test public void t() { assertEquals(3, new Calc().add(1, 2)); }"),
            item("p:a#2", "@Test public void t() { assertEquals(4, new Calc().twice(2)); }"),
            item("p:a#3", "@Test public void t() { assertTrue(new Calc().add(1, 1) == 3); }"),
            item("p:a#4", "@Test public void t() { int x = ; }"),
            item("p:a#5", "public void notATest() {}"),
        ];
        let opts = EvalOptions {
            workers: 2,
            mutation: Some(Operator::ALL.to_vec()),
            ..Default::default()
        };
        let out = evaluate_project(&SimToolchain::default(), &gt(), &items, &opts).unwrap();
        let r = &out.records;
        assert_eq!(r.iter().map(|r| r.test_id.as_str()).collect::<Vec<_>>(), ["p:a#1", "p:a#2", "p:a#3", "p:a#4", "p:a#5"]);
        assert_eq!((r[0].aligned, r[0].covered_lines, r[0].coverable_lines), (Some(true), Some(2), Some(3)));
        // The implicit constructor counts on the class line.
        assert_eq!((r[1].aligned, r[1].covered_lines), (Some(true), Some(2)));
        assert_eq!(r[2].error_category, Some(ErrorCategory::AssertionError));
        assert_eq!((r[3].syntax_ok, r[3].aligned, r[3].error_category), (false, None, Some(ErrorCategory::SyntaxError)));
        assert_eq!(r[4].error_category, Some(ErrorCategory::Other));
        let m = &out.metrics;
        assert_eq!((m.n_tests, m.syntax_correctness, m.requirement_alignment), (5, 80.0, 40.0));
        assert!((m.code_coverage - 100.0 * 4.0 / 6.0).abs() < 1e-9);
        let kills = out.kill_matrix.unwrap();
        assert!(!kills.mutants.is_empty());
        assert!(m.mutation_score.unwrap() > 0.0);
    }
}
