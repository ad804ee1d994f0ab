//! `t2t`: mine, prompt, generate, repair, mutate, evaluate and report.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "t2t", version, about = "Generate and score JUnit tests from natural-language descriptions")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parsing, generation and test execution.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Basic,
    Improved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToolchainKind {
    /// Bundled Java-subset interpreter.
    Sim,
    /// javac, the JSON launcher jar and optionally JaCoCo.
    Jdk,
}

#[derive(Debug, Clone, Args)]
pub struct ToolchainArgs {
    /// Defaults to the config file's toolchain, else `sim`.
    #[arg(long, value_enum)]
    pub toolchain: Option<ToolchainKind>,
    /// Launcher jar for `--toolchain jdk`.
    #[arg(long)]
    pub shim_jar: Option<PathBuf>,
    /// Extra classpath entries (JUnit, project dependencies).
    #[arg(long, value_delimiter = ':')]
    pub classpath: Vec<PathBuf>,
    #[arg(long)]
    pub jacoco_agent: Option<PathBuf>,
    #[arg(long)]
    pub jacoco_cli: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine description/testcase/method triplets and split them.
    Mine {
        #[arg(required = true)]
        roots: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// train,validation,test ratios.
        #[arg(long, default_value = "0.6,0.2,0.2")]
        split: String,
        /// Projects whose focal methods must not leak into training.
        #[arg(long, num_args = 1..)]
        eval_projects: Vec<PathBuf>,
    },
    /// Render Basic or Improved prompts for a corpus.
    Prompt {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON file with `description` and `testcase` for the Improved prompt.
        #[arg(long)]
        demo: Option<PathBuf>,
    },
    /// Write the prompt/completion fine-tuning dataset.
    ExportFinetune {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Price per 1000 training tokens.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value_t = 20)]
        epochs: u32,
    },
    /// Send prompts to a generation backend.
    Generate {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Model id; defaults to the config's base model.
        #[arg(long)]
        model: Option<String>,
        /// Replay store (JSONL) to answer from.
        #[arg(long, conflicts_with = "api_base")]
        replay: Option<PathBuf>,
        #[arg(long)]
        api_base: Option<String>,
        /// Picks the per-variant store when the config names a replay directory.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Repair raw generations.
    Postprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mutation analysis of a source tree against a test tree.
    Mutate {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        tests: PathBuf,
        #[arg(long, default_value = "all")]
        ops: String,
        /// Seconds per test class per mutant.
        #[arg(long, default_value_t = 10)]
        timeout: u64,
        /// Keep at most this many mutants per class.
        #[arg(long)]
        max_mutants: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        toolchain: ToolchainArgs,
    },
    /// Score processed tests against a ground-truth project.
    Evaluate {
        #[arg(long)]
        tests: PathBuf,
        #[arg(long)]
        project: PathBuf,
        /// Corpus used to look up focal classes missing from the records.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        with_mutation: bool,
        #[arg(long, default_value = "all")]
        ops: String,
        #[arg(long)]
        max_mutants: Option<usize>,
        /// Seconds per test execution.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        toolchain: ToolchainArgs,
    },
    /// Run the fine-tune x prompt ablation matrix.
    Matrix {
        #[arg(long)]
        parallel_cells: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an ablation grid as tables.
    Report {
        #[arg(long)]
        grid: PathBuf,
        /// Markdown output; `.csv` siblings are written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Statistical tests.
    Stats {
        #[command(subcommand)]
        test: StatsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Paired two-sided Wilcoxon signed-rank test.
    Wilcoxon {
        /// Comma-separated sample.
        #[arg(long, requires = "b", conflicts_with = "csv", allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long, requires = "a", allow_hyphen_values = true)]
        b: Option<String>,
        /// Two-column CSV of pairs (header optional).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Outcome of a command that did not hit a fatal error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    Partial,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
