//! Source-level mutation analysis: operators, mutant enumeration, kill
//! analysis and scoring.

mod enumerate;
mod kill;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use enumerate::enumerate_mutants;
pub use kill::{run_kill_analysis, KillConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operator {
    AOR,
    LOR,
    SOR,
    COR,
    ROR,
    ORU,
    LVR,
    STD,
}

impl Operator {
    pub const ALL: [Operator; 8] = [
        Operator::AOR,
        Operator::LOR,
        Operator::SOR,
        Operator::COR,
        Operator::ROR,
        Operator::ORU,
        Operator::LVR,
        Operator::STD,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Operator::AOR => "AOR",
            Operator::LOR => "LOR",
            Operator::SOR => "SOR",
            Operator::COR => "COR",
            Operator::ROR => "ROR",
            Operator::ORU => "ORU",
            Operator::LVR => "LVR",
            Operator::STD => "STD",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Operator::AOR => "arithmetic operator replacement",
            Operator::LOR => "logical (bitwise) operator replacement",
            Operator::SOR => "shift operator replacement",
            Operator::COR => "conditional operator replacement",
            Operator::ROR => "relational operator replacement",
            Operator::ORU => "unary operator removal",
            Operator::LVR => "literal value replacement",
            Operator::STD => "statement deletion",
        }
    }

    /// Parses a comma-separated list such as `AOR,ROR`; `all` selects every operator.
    pub fn parse_list(s: &str) -> Result<Vec<Operator>, MutationError> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Operator::ALL.to_vec());
        }
        let mut ops: Vec<Operator> = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.parse())
            .collect::<Result<_, _>>()?;
        ops.sort();
        ops.dedup();
        Ok(ops)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Operator {
    type Err = MutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Operator::ALL
            .into_iter()
            .find(|o| o.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| MutationError::UnknownOperator(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: String,
    pub operator: Operator,
    pub file: String,
    /// Byte range of `original` in the unmutated source.
    pub span: (usize, usize),
    pub original: String,
    /// Empty for statement deletion.
    pub replacement: String,
    pub mutated_source: String,
}

impl Mutant {
    /// Undoes the single edit, giving back the original source.
    pub fn revert(&self) -> String {
        let (start, _) = self.span;
        let end = start + self.replacement.len();
        format!(
            "{}{}{}",
            &self.mutated_source[..start],
            self.original,
            &self.mutated_source[end..]
        )
    }
}

/// Keeps at most `max` mutants per compilation unit, first in source order.
pub fn cap_per_class(mutants: Vec<Mutant>, max: Option<usize>) -> Vec<Mutant> {
    let Some(max) = max else { return mutants };
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    mutants
        .into_iter()
        .filter(|m| {
            let n = seen.entry(m.file.clone()).or_default();
            *n += 1;
            *n <= max
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Killed,
    Survived,
    TimedOut,
    CompileError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillMatrix {
    /// Mutant ids in enumeration order.
    pub mutants: Vec<String>,
    pub outcomes: BTreeMap<String, Outcome>,
}

impl KillMatrix {
    pub fn insert(&mut self, id: impl Into<String>, outcome: Outcome) {
        let id = id.into();
        if self.outcomes.insert(id.clone(), outcome).is_none() {
            self.mutants.push(id);
        }
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.outcomes.values().filter(|o| **o == outcome).count()
    }
}

#[derive(Debug, Error)]
pub enum MutationError {
    #[error("unknown mutation operator: {0}")]
    UnknownOperator(String),
    #[error("{file}: source does not parse")]
    ParseFailure { file: String },
    #[error("kill matrix is empty")]
    EmptyMatrix,
    #[error("every mutant failed to compile")]
    AllStillborn,
    #[error("original program does not compile:\n{0}")]
    OriginalCompileFailure(String),
    #[error("test {test} fails on the original program")]
    OriginalRedFailure { test: String },
    #[error(transparent)]
    Toolchain(#[from] crate::toolchain::ToolchainError),
}

/// (Killed + TimedOut) / (total − CompileError).
pub fn compute_mutation_score(matrix: &KillMatrix) -> Result<f64, MutationError> {
    let total = matrix.mutants.len();
    if total == 0 {
        return Err(MutationError::EmptyMatrix);
    }
    let live = total - matrix.count(Outcome::CompileError);
    if live == 0 {
        return Err(MutationError::AllStillborn);
    }
    let killed = matrix.count(Outcome::Killed) + matrix.count(Outcome::TimedOut);
    Ok(killed as f64 / live as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub operator: Operator,
    pub file: String,
    pub span: (usize, usize),
    pub original: String,
    pub replacement: String,
    pub outcome: Outcome,
}

/// One report row per mutant that has an outcome, in enumeration order.
pub fn report_rows(mutants: &[Mutant], matrix: &KillMatrix) -> Vec<ReportRow> {
    mutants
        .iter()
        .filter_map(|m| {
            matrix.outcomes.get(&m.id).map(|o| ReportRow {
                id: m.id.clone(),
                operator: m.operator,
                file: m.file.clone(),
                span: m.span,
                original: m.original.clone(),
                replacement: m.replacement.clone(),
                outcome: *o,
            })
        })
        .collect()
}
