//! Toolchain backed by the in-process Java-subset interpreter.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use t2t_javasim::{ClassRun, Compiled, Limits, RunError, TestStatus};

use super::{CompileOutcome, CompiledProgram, JavaSource, JavaToolchain, RunOptions, RunOutput, ShimResult, ShimStatus, ToolchainError};

#[derive(Debug, Clone)]
pub struct SimToolchain {
    /// Interpreter steps per test-class run; exhausting it counts as a timeout.
    pub max_steps: u64,
}

impl Default for SimToolchain {
    fn default() -> Self {
        SimToolchain {
            max_steps: Limits::default().max_steps,
        }
    }
}

impl JavaToolchain for SimToolchain {
    fn compile(&self, sources: &[JavaSource]) -> Result<CompileOutcome, ToolchainError> {
        let pairs: Vec<(String, String)> = sources.iter().map(|s| (s.path.clone(), s.content.clone())).collect();
        match t2t_javasim::compile(&pairs) {
            Ok(program) => Ok(CompileOutcome::Compiled(Box::new(SimProgram {
                program,
                max_steps: self.max_steps,
            }))),
            Err(diags) => {
                let mut text = String::new();
                for d in &diags {
                    let _ = writeln!(text, "{d}");
                }
                let n = diags.len();
                let _ = writeln!(text, "{n} error{}", if n == 1 { "" } else { "s" });
                Ok(CompileOutcome::Failed { diagnostics: text })
            }
        }
    }
}

struct SimProgram {
    program: Compiled,
    max_steps: u64,
}

fn to_shim(r: &t2t_javasim::TestResult) -> ShimResult {
    ShimResult {
        test_method: r.name.clone(),
        status: match r.status {
            TestStatus::Passed => ShimStatus::Passed,
            TestStatus::Failed => ShimStatus::Failed,
            TestStatus::Errored => ShimStatus::Errored,
        },
        failure_class: r.failure_class.clone(),
        message: r.message.clone(),
        duration_ms: r.duration.as_millis() as u64,
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl SimProgram {
    /// Renders hits in the JaCoCo XML layout (LINE counters only).
    fn jacoco_xml(&self, run: &ClassRun) -> String {
        let mut packages: BTreeMap<String, Vec<t2t_javasim::ClassLines>> = BTreeMap::new();
        for c in self.program.coverage_map() {
            packages.entry(c.package.clone().unwrap_or_default()).or_default().push(c);
        }
        let mut xml = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<report name=\"t2t\">\n");
        for (pkg, classes) in &packages {
            let pkg_path = pkg.replace('.', "/");
            let _ = writeln!(xml, "  <package name=\"{}\">", escape(&pkg_path));
            let mut files: BTreeMap<String, BTreeMap<u32, bool>> = BTreeMap::new();
            for c in classes {
                let hits = run.hits.get(&c.path);
                let covered = c.coverable.iter().filter(|l| hits.is_some_and(|h| h.contains(l))).count();
                let file = c.path.rsplit('/').next().unwrap_or(&c.path).to_string();
                let simple = match &c.package {
                    Some(p) => c.fqn[p.len() + 1..].replace('.', "$"),
                    None => c.fqn.replace('.', "$"),
                };
                let name = if pkg_path.is_empty() { simple } else { format!("{pkg_path}/{simple}") };
                let _ = writeln!(
                    xml,
                    "    <class name=\"{}\" sourcefilename=\"{}\">\n      <counter type=\"LINE\" missed=\"{}\" covered=\"{covered}\"/>\n    </class>",
                    escape(&name),
                    escape(&file),
                    c.coverable.len() - covered
                );
                let lines = files.entry(file).or_default();
                for l in &c.coverable {
                    let hit = hits.is_some_and(|h| h.contains(l));
                    *lines.entry(*l).or_insert(false) |= hit;
                }
            }
            for (file, lines) in files {
                let _ = writeln!(xml, "    <sourcefile name=\"{}\">", escape(&file));
                for (nr, hit) in &lines {
                    let (mi, ci) = if *hit { (0, 1) } else { (1, 0) };
                    let _ = writeln!(xml, "      <line nr=\"{nr}\" mi=\"{mi}\" ci=\"{ci}\" mb=\"0\" cb=\"0\"/>");
                }
                let covered = lines.values().filter(|h| **h).count();
                let _ = writeln!(
                    xml,
                    "      <counter type=\"LINE\" missed=\"{}\" covered=\"{covered}\"/>\n    </sourcefile>",
                    lines.len() - covered
                );
            }
            xml.push_str("  </package>\n");
        }
        xml.push_str("</report>\n");
        xml
    }
}

impl CompiledProgram for SimProgram {
    fn run_tests(&self, test_class: &str, opts: &RunOptions) -> Result<RunOutput, ToolchainError> {
        let limits = Limits {
            max_steps: self.max_steps,
            timeout: opts.timeout.max(Duration::from_millis(1)),
            ..Limits::default()
        };
        match self.program.run_class(test_class, &limits) {
            Ok(run) => {
                let coverage_xml = opts.coverage.then(|| self.jacoco_xml(&run));
                Ok(RunOutput::Completed {
                    results: run.results.iter().map(to_shim).collect(),
                    coverage_xml,
                })
            }
            Err(RunError::TimedOut) => Ok(RunOutput::TimedOut),
            Err(RunError::ClassNotFound(_)) => Ok(RunOutput::LauncherFault {
                detail: "ClassNotFound".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CALC: &str = "package demo;\n\npublic class Calc {\n    public int twice(int x) {\n        return x * 2;\n    }\n\n    public int unused() {\n        return 0;\n    }\n}\n";
    const TEST: &str = "package demo;\n\nimport org.junit.Test;\nimport static org.junit.Assert.*;\n\npublic class CalcTest {\n    @Test\n    public void doubles() {\n        assertEquals(4, new Calc().twice(2));\n    }\n}\n";

    #[test]
    fn compiles_runs_and_reports_coverage() {
        let tc = SimToolchain::default();
        let out = tc
            .compile(&[JavaSource::new("demo/Calc.java", CALC), JavaSource::new("demo/CalcTest.java", TEST)])
            .unwrap();
        let CompileOutcome::Compiled(p) = out else { panic!("{out:?}") };
        let run = p.run_tests("demo.CalcTest", &RunOptions { coverage: true, ..Default::default() }).unwrap();
        assert!(run.all_passed());
        let RunOutput::Completed { coverage_xml: Some(xml), .. } = run else { panic!() };
        let doc = roxmltree::Document::parse(&xml).unwrap();
        let calc = doc.descendants().find(|n| n.attribute("name") == Some("demo/Calc")).unwrap();
        let counter = calc.children().find(|n| n.has_tag_name("counter")).unwrap();
        // Implicit constructor, `return x * 2`, `return 0`.
        assert_eq!(counter.attribute("covered"), Some("2"));
        assert_eq!(counter.attribute("missed"), Some("1"));
        assert_eq!(
            p.run_tests("demo.Missing", &RunOptions::default()).unwrap(),
            RunOutput::LauncherFault { detail: "ClassNotFound".into() }
        );
    }

    #[test]
    fn diagnostics_read_like_javac() {
        let out = SimToolchain::default()
            .compile(&[JavaSource::new("demo/Bad.java", "package demo;\npublic class Bad {\n    int f() { return missing; }\n}\n")])
            .unwrap();
        let CompileOutcome::Failed { diagnostics } = out else { panic!() };
        assert!(diagnostics.starts_with("demo/Bad.java:3: error: cannot find symbol"), "{diagnostics}");
        assert!(diagnostics.trim_end().ends_with("1 error"));
    }
}
