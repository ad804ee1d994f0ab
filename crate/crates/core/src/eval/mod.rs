//! Scoring generated tests on syntax correctness, requirement alignment,
//! line coverage and mutation score, plus the failure taxonomy.

mod coverage;
mod harness;
mod shell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coverage::{coverage_ratio, measure_coverage};
pub use harness::{
    check_alignment, check_syntax, evaluate_project, write_outputs, Alignment, EvalItem, EvalOptions, EvalOutput,
    GroundTruth,
};
pub use shell::{shell_class_name, wrap_in_shell, TestShell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorCategory {
    AssertionError,
    ValueError,
    SyntaxError,
    Other,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 4] = [
        ErrorCategory::AssertionError,
        ErrorCategory::ValueError,
        ErrorCategory::SyntaxError,
        ErrorCategory::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::AssertionError => "AssertionError",
            ErrorCategory::ValueError => "ValueError",
            ErrorCategory::SyntaxError => "SyntaxError",
            ErrorCategory::Other => "Other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub test_id: String,
    pub syntax_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aligned: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covered_lines: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverable_lines: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_category: Option<ErrorCategory>,
    /// Compiler diagnostics or the first failure headline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectMetrics {
    pub project_id: String,
    pub n_tests: usize,
    pub syntax_correctness: f64,
    pub requirement_alignment: f64,
    pub code_coverage: f64,
    #[serde(default)]
    pub mutation_score: Option<f64>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no records to aggregate")]
    EmptyBatch,
    #[error("records belong to more than one project")]
    MixedProjects,
    #[error("malformed coverage report: {0}")]
    MalformedReport(String),
    #[error("class {0} not in coverage report")]
    ClassNotInReport(String),
    #[error("ground truth does not compile:\n{0}")]
    GroundTruthBroken(String),
    #[error("no focal class named {0} in the project")]
    UnknownFocalClass(String),
    #[error(transparent)]
    Toolchain(#[from] crate::toolchain::ToolchainError),
    #[error(transparent)]
    Corpus(#[from] crate::miner::CorpusError),
    #[error(transparent)]
    Mutation(#[from] crate::mutation::MutationError),
}

// Jupiter has no ComparisonFailure; its value mismatches read
// `expected: <x> but was: <y>` on an opentest4j AssertionFailedError.
fn jupiter_value_diff(text: &str) -> bool {
    text.contains("org.opentest4j.AssertionFailedError")
        && text.find("expected: <").is_some_and(|i| text[i..].contains("> but was: <"))
}

/// Sorts a non-passing test into the failure taxonomy.
pub fn classify_error(failure_text: &str, compile_ok: bool) -> ErrorCategory {
    if !compile_ok {
        return ErrorCategory::SyntaxError;
    }
    if failure_text.contains("ComparisonFailure") || jupiter_value_diff(failure_text) {
        ErrorCategory::ValueError
    } else if failure_text.contains("AssertionFailedError") || failure_text.contains("AssertionError") {
        ErrorCategory::AssertionError
    } else {
        ErrorCategory::Other
    }
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 * 100.0 / den as f64
    }
}

/// Folds per-test records into the four project metrics. `mutation_score`
/// is a fraction in [0, 1] when mutation analysis ran.
pub fn aggregate_metrics(
    project_id: &str,
    records: &[EvaluationRecord],
    mutation_score: Option<f64>,
) -> Result<ProjectMetrics, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let syntax = records.iter().filter(|r| r.syntax_ok).count();
    let aligned: Vec<&EvaluationRecord> = records.iter().filter(|r| r.aligned == Some(true)).collect();
    let covered: u64 = aligned.iter().filter_map(|r| r.covered_lines).sum();
    let coverable: u64 = aligned.iter().filter_map(|r| r.coverable_lines).sum();
    Ok(ProjectMetrics {
        project_id: project_id.to_string(),
        n_tests: records.len(),
        syntax_correctness: percent(syntax, records.len()),
        requirement_alignment: percent(aligned.len(), records.len()),
        code_coverage: if coverable == 0 { 0.0 } else { covered as f64 * 100.0 / coverable as f64 },
        mutation_score: mutation_score.map(|s| s * 100.0),
    })
}

/// `category,count,percent` rows for the four categories and `Passed`.
pub fn category_histogram_csv(records: &[EvaluationRecord]) -> String {
    let n = records.len();
    let mut out = String::from("category,count,percent\n");
    for c in ErrorCategory::ALL {
        let k = records.iter().filter(|r| r.error_category == Some(c)).count();
        out.push_str(&format!("{},{k},{:.1}\n", c.name(), percent(k, n)));
    }
    let passed = records.iter().filter(|r| r.error_category.is_none()).count();
    out.push_str(&format!("Passed,{passed},{:.1}\n", percent(passed, n)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(syntax: bool, aligned: Option<bool>, cov: Option<(u64, u64)>) -> EvaluationRecord {
        EvaluationRecord {
            test_id: "t".into(),
            syntax_ok: syntax,
            aligned,
            covered_lines: cov.map(|c| c.0),
            coverable_lines: cov.map(|c| c.1),
            error_category: None,
            detail: None,
        }
    }

    #[test]
    fn taxonomy() {
        use ErrorCategory::*;
        let cases = [
            ("junit.framework.AssertionFailedError: Escape character should match the default escape character", true, AssertionError),
            ("junit.framework.ComparisonFailure: Line separator should match the default line separator", true, ValueError),
            ("java.lang.NullPointerException\n\tat Foo.bar(Foo.java:3)", true, Other),
            ("java: <identifier> expected", false, SyntaxError),
            ("org.opentest4j.AssertionFailedError: expected: <1> but was: <2>", true, ValueError),
            ("org.opentest4j.AssertionFailedError: expected: <true> but was: <false>", true, ValueError),
            ("org.opentest4j.AssertionFailedError: boom", true, AssertionError),
            ("java.lang.AssertionError", true, AssertionError),
            ("java.lang.AssertionError: expected:<11> but was:<10>", true, AssertionError),
            ("org.junit.ComparisonFailure: expected:<[a]> but was:<[b]>", true, ValueError),
            ("java.lang.IllegalStateException: expected:<1> but was:<2>", true, Other),
        ];
        for (text, ok, want) in cases {
            assert_eq!(classify_error(text, ok), want, "{text}");
        }
    }

    #[test]
    fn worked_aggregate() {
        let records = [
            rec(true, Some(true), Some((6, 10))),
            rec(true, Some(true), Some((4, 10))),
            rec(true, Some(false), None),
            rec(false, None, None),
        ];
        let m = aggregate_metrics("p", &records, None).unwrap();
        assert!((m.syntax_correctness - 75.0).abs() < 1e-9);
        assert!((m.requirement_alignment - 50.0).abs() < 1e-9);
        assert!((m.code_coverage - 50.0).abs() < 1e-9);
        assert_eq!(m.mutation_score, None);
        let none = aggregate_metrics("p", &[rec(false, None, None)], None).unwrap();
        assert_eq!((none.syntax_correctness, none.requirement_alignment, none.code_coverage), (0.0, 0.0, 0.0));
        let full = aggregate_metrics("p", &[rec(true, Some(true), Some((5, 5)))], Some(1.0)).unwrap();
        assert_eq!(full.mutation_score, Some(100.0));
        assert!(matches!(aggregate_metrics("p", &[], None), Err(EvalError::EmptyBatch)));
    }

    #[test]
    fn histogram_rows() {
        let mut a = rec(false, None, None);
        a.error_category = Some(ErrorCategory::SyntaxError);
        let b = rec(true, Some(true), Some((1, 1)));
        let csv = category_histogram_csv(&[a, b]);
        assert_eq!(
            csv,
            "category,count,percent\nAssertionError,0,0.0\nValueError,0,0.0\nSyntaxError,1,50.0\nOther,0,0.0\nPassed,1,50.0\n"
        );
    }
}
