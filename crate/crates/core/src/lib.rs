//! Text-to-testcase toolchain.
//!
//! Mines `<description, testcase, method>` triplets from Java projects,
//! renders prompts and fine-tuning records, talks to generation backends,
//! repairs generated JUnit tests, and scores them on syntax correctness,
//! requirement alignment, line coverage and mutation score.

pub mod java;
pub mod jsonl;
pub mod miner;
pub mod prompt;
pub mod gateway;
pub mod postprocess;
pub mod toolchain;
pub mod eval;
pub mod mutation;
pub mod orchestrator;
pub mod stats;

/// Token cost ledger priced in `f64`.
pub type CostLedgerF64 = gateway::CostLedger<f64>;
/// Wilcoxon signed-rank outcome over `f64` samples.
pub type WilcoxonF64 = stats::WilcoxonResult<f64>;
/// Wilcoxon signed-rank outcome over `f32` samples.
pub type WilcoxonF32 = stats::WilcoxonResult<f32>;
