//! Compiling Java sources and running JUnit test classes.
//!
//! [`JdkToolchain`] shells out to `javac`, the JSON-emitting JUnit launcher
//! jar and (optionally) JaCoCo. [`SimToolchain`] runs the same interface on
//! the bundled Java-subset interpreter and needs no JVM.

mod jdk;
mod shim;
mod sim;

use std::time::Duration;

use thiserror::Error;

pub use jdk::JdkToolchain;
pub use shim::{parse_shim_output, ShimResult, ShimStatus};
pub use sim::SimToolchain;

/// A compilation unit, keyed by its path relative to the source root
/// (`demo/Calc.java`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JavaSource {
    pub path: String,
    pub content: String,
}

impl JavaSource {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        JavaSource {
            path: path.into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub timeout: Duration,
    pub coverage: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            timeout: Duration::from_secs(30),
            coverage: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutput {
    Completed {
        results: Vec<ShimResult>,
        /// JaCoCo XML report, when coverage was requested and available.
        coverage_xml: Option<String>,
    },
    TimedOut,
    LauncherFault {
        detail: String,
    },
}

impl RunOutput {
    pub fn all_passed(&self) -> bool {
        matches!(self, RunOutput::Completed { results, .. }
            if results.iter().all(|r| r.status == ShimStatus::Passed))
    }
}

pub enum CompileOutcome {
    Compiled(Box<dyn CompiledProgram>),
    Failed { diagnostics: String },
}

impl std::fmt::Debug for CompileOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompileOutcome::Compiled(_) => f.write_str("Compiled(..)"),
            CompileOutcome::Failed { diagnostics } => {
                f.debug_struct("Failed").field("diagnostics", diagnostics).finish()
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ToolchainError {
    #[error("toolchain missing: {0}")]
    Missing(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected launcher output: {0}")]
    Protocol(String),
}

pub trait JavaToolchain: Send + Sync {
    fn compile(&self, sources: &[JavaSource]) -> Result<CompileOutcome, ToolchainError>;
}

pub trait CompiledProgram: Send + Sync {
    fn run_tests(&self, test_class: &str, opts: &RunOptions) -> Result<RunOutput, ToolchainError>;
}
