use std::fmt::Write as _;

use super::matrix::{AblationGrid, Cell};
use super::{OrchestratorError, Variant};
use crate::eval::ProjectMetrics;
use crate::prompt::PromptKind;

/// (baseline, compared) pairs that get relative-improvement lines.
pub const DELTA_PAIRS: [(Variant, Variant); 3] = [
    (Variant::new(false, PromptKind::Basic), Variant::new(true, PromptKind::Basic)),
    (Variant::new(false, PromptKind::Basic), Variant::new(false, PromptKind::Improved)),
    (Variant::new(false, PromptKind::Basic), Variant::new(true, PromptKind::Improved)),
];

const METRICS: [&str; 4] = [
    "Syntax Correctness",
    "Requirement Alignment",
    "Code Coverage",
    "Mutation Score",
];

fn values(m: &ProjectMetrics) -> [Option<f64>; 4] {
    [
        Some(m.syntax_correctness),
        Some(m.requirement_alignment),
        Some(m.code_coverage),
        m.mutation_score,
    ]
}

/// (new − old) / old × 100; undefined when `old` is 0.
pub fn percent_change(old: f64, new: f64) -> Option<f64> {
    (old != 0.0).then(|| (new - old) / old * 100.0)
}

fn one_decimal(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn signed(x: f64, decimals: usize) -> String {
    // `round` can leave -0.0 behind.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{}{x:.decimals$}", if x > 0.0 { "+" } else { "" })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    /// Markdown tables, delta prose and footnotes.
    pub text: String,
    /// `project,variant,status,n_tests,<four metrics>,cause`.
    pub table_csv: String,
    /// `project,baseline,variant,metric,old,new,change_percent`.
    pub deltas_csv: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders the grid. Output depends only on the grid, so equal grids give
/// byte-identical reports.
pub fn render_report(grid: &AblationGrid) -> Result<Report, OrchestratorError> {
    if grid.is_empty() {
        return Err(OrchestratorError::EmptyGrid);
    }
    let mut text = String::from("# Ablation results\n");
    let mut table_csv = String::from(
        "project,variant,status,n_tests,syntax_correctness,requirement_alignment,code_coverage,mutation_score,cause\n",
    );
    let mut deltas_csv = String::from("project,baseline,variant,metric,old,new,change_percent\n");
    let mut footnotes: Vec<String> = Vec::new();

    for project in grid.projects() {
        let _ = write!(text, "\n## {project}\n\n| Variant | n |");
        for m in METRICS {
            let _ = write!(text, " {m} |");
        }
        text.push_str("\n|---|---:|---:|---:|---:|---:|\n");
        for variant in Variant::ALL {
            let Some(cell) = grid.get(variant, &project) else { continue };
            match cell {
                Cell::Completed { metrics } => {
                    let _ = write!(text, "| {variant} | {} |", metrics.n_tests);
                    let mut row = format!("{},{variant},completed,{}", csv_field(&project), metrics.n_tests);
                    for v in values(metrics) {
                        match v {
                            Some(x) => {
                                let _ = write!(text, " {x:.2} |");
                                let _ = write!(row, ",{x:.4}");
                            }
                            None => {
                                text.push_str(" n/a |");
                                row.push(',');
                            }
                        }
                    }
                    table_csv.push_str(&row);
                    table_csv.push_str(",\n");
                }
                Cell::Failed { cause } => {
                    footnotes.push(format!("{variant} on {project} failed: {}", cause.lines().next().unwrap_or("")));
                    let mark = format!("—[{}]", footnotes.len());
                    let _ = write!(text, "| {variant} | {mark} |");
                    for _ in METRICS {
                        let _ = write!(text, " {mark} |");
                    }
                    let _ = writeln!(table_csv, "{},{variant},failed,,,,,,{}", csv_field(&project), csv_field(cause));
                }
            }
            text.push('\n');
        }

        let mut prose = Vec::new();
        let mut delta_rows = Vec::new();
        for (old_v, new_v) in DELTA_PAIRS {
            let (Some(old), Some(new)) = (
                grid.get(old_v, &project).and_then(Cell::metrics),
                grid.get(new_v, &project).and_then(Cell::metrics),
            ) else {
                continue;
            };
            let mut row = format!("| {new_v} vs {old_v} |");
            for (name, (o, n)) in METRICS.iter().zip(values(old).into_iter().zip(values(new))) {
                let (Some(o), Some(n)) = (o, n) else {
                    row.push_str(" n/a |");
                    continue;
                };
                match percent_change(o, n) {
                    Some(pct) => {
                        let rounded = one_decimal(pct);
                        let _ = write!(row, " {}% |", signed(rounded, 1));
                        prose.push(format!(
                            "{new_v} vs {old_v}, {}: {}% ({o:.2} -> {n:.2})",
                            name.to_lowercase(),
                            signed(rounded.round(), 0)
                        ));
                        let _ = writeln!(
                            deltas_csv,
                            "{},{old_v},{new_v},{name},{o:.4},{n:.4},{rounded:.1}",
                            csv_field(&project)
                        );
                    }
                    None => {
                        row.push_str(" n/a |");
                        let _ = writeln!(deltas_csv, "{},{old_v},{new_v},{name},{o:.4},{n:.4},", csv_field(&project));
                    }
                }
            }
            delta_rows.push(row);
        }
        if !delta_rows.is_empty() {
            text.push_str("\nRelative change:\n\n| Comparison |");
            for m in METRICS {
                let _ = write!(text, " {m} |");
            }
            text.push_str("\n|---|---:|---:|---:|---:|\n");
            for r in delta_rows {
                text.push_str(&r);
                text.push('\n');
            }
            text.push('\n');
            for p in prose {
                let _ = writeln!(text, "- {p}");
            }
        }
    }
    if !footnotes.is_empty() {
        text.push_str("\nNotes:\n\n");
        for (i, f) in footnotes.iter().enumerate() {
            let _ = writeln!(text, "[{}] {f}", i + 1);
        }
    }
    Ok(Report {
        text,
        table_csv,
        deltas_csv,
    })
}
