//! Run configuration, the fine-tune × prompt ablation matrix, and report
//! rendering.

mod config;
mod matrix;
mod pipeline;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BackendConfig, MatrixConfig, RunConfig, ToolchainConfig};
pub use matrix::{run_matrix, AblationGrid, Cell, CellCheckpoint, MatrixSummary};
pub use pipeline::{
    generate_all, postprocess_all, prompts_for, to_eval_items, GeneratedRecord, ProcessedRecord, PromptRecord,
};
pub use report::{percent_change, render_report, Report, DELTA_PAIRS};

use crate::prompt::PromptKind;

/// One of the four ablation arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Variant {
    pub fine_tuned: bool,
    pub prompt: PromptKind,
}

impl Variant {
    /// Table order.
    pub const ALL: [Variant; 4] = [
        Variant::new(true, PromptKind::Improved),
        Variant::new(true, PromptKind::Basic),
        Variant::new(false, PromptKind::Improved),
        Variant::new(false, PromptKind::Basic),
    ];

    pub const fn new(fine_tuned: bool, prompt: PromptKind) -> Self {
        Variant { fine_tuned, prompt }
    }

    pub fn label(self) -> &'static str {
        match (self.fine_tuned, self.prompt) {
            (true, PromptKind::Improved) => "FT+I.P",
            (true, PromptKind::Basic) => "FT+B.P",
            (false, PromptKind::Improved) => "NoFT+I.P",
            (false, PromptKind::Basic) => "NoFT+B.P",
        }
    }

    /// File-system friendly form, e.g. `ft-ip`.
    pub fn slug(self) -> &'static str {
        match (self.fine_tuned, self.prompt) {
            (true, PromptKind::Improved) => "ft-ip",
            (true, PromptKind::Basic) => "ft-bp",
            (false, PromptKind::Improved) => "noft-ip",
            (false, PromptKind::Basic) => "noft-bp",
        }
    }

    fn rank(self) -> usize {
        Variant::ALL.iter().position(|v| *v == self).unwrap_or(0)
    }
}

impl Ord for Variant {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl PartialOrd for Variant {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = OrchestratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Variant::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s) || v.slug().eq_ignore_ascii_case(s))
            .ok_or_else(|| OrchestratorError::UnknownVariant(s.to_string()))
    }
}

impl TryFrom<String> for Variant {
    type Error = OrchestratorError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.label().to_string()
    }
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("unknown variant {0:?} (expected FT+I.P, FT+B.P, NoFT+I.P or NoFT+B.P)")]
    UnknownVariant(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error(transparent)]
    Corpus(#[from] crate::miner::CorpusError),
    #[error(transparent)]
    Prompt(#[from] crate::prompt::PromptError),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Toolchain(#[from] crate::toolchain::ToolchainError),
    #[error("grid is empty")]
    EmptyGrid,
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> OrchestratorError + '_ {
    move |source| OrchestratorError::Io {
        path: path.display().to_string(),
        source,
    }
}
