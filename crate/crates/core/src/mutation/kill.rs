use std::time::Duration;

use rayon::prelude::*;

use super::{KillMatrix, Mutant, MutationError, Outcome};
use crate::toolchain::{CompileOutcome, JavaSource, JavaToolchain, RunOptions, RunOutput};

#[derive(Debug, Clone)]
pub struct KillConfig {
    /// Per test class, per mutant.
    pub timeout: Duration,
    pub workers: usize,
}

impl Default for KillConfig {
    fn default() -> Self {
        KillConfig {
            timeout: Duration::from_secs(10),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

fn with_mutant(sources: &[JavaSource], m: &Mutant) -> Vec<JavaSource> {
    sources
        .iter()
        .map(|s| {
            if s.path == m.file {
                JavaSource::new(s.path.clone(), m.mutated_source.clone())
            } else {
                s.clone()
            }
        })
        .collect()
}

fn judge(
    toolchain: &dyn JavaToolchain,
    sources: &[JavaSource],
    test_classes: &[String],
    opts: &RunOptions,
) -> Result<Outcome, MutationError> {
    let program = match toolchain.compile(sources)? {
        CompileOutcome::Compiled(p) => p,
        CompileOutcome::Failed { .. } => return Ok(Outcome::CompileError),
    };
    for class in test_classes {
        match program.run_tests(class, opts)? {
            RunOutput::TimedOut => return Ok(Outcome::TimedOut),
            RunOutput::LauncherFault { .. } => return Ok(Outcome::CompileError),
            out if !out.all_passed() => return Ok(Outcome::Killed),
            _ => {}
        }
    }
    Ok(Outcome::Survived)
}

/// Runs every test class against every mutant. `sources` holds the project
/// (focal) sources the mutants were derived from; `tests` the test sources.
pub fn run_kill_analysis(
    mutants: &[Mutant],
    sources: &[JavaSource],
    tests: &[JavaSource],
    test_classes: &[String],
    toolchain: &dyn JavaToolchain,
    cfg: &KillConfig,
) -> Result<KillMatrix, MutationError> {
    let opts = RunOptions {
        timeout: cfg.timeout,
        coverage: false,
    };
    let all: Vec<JavaSource> = sources.iter().chain(tests).cloned().collect();
    let program = match toolchain.compile(&all)? {
        CompileOutcome::Compiled(p) => p,
        CompileOutcome::Failed { diagnostics } => return Err(MutationError::OriginalCompileFailure(diagnostics)),
    };
    for class in test_classes {
        match program.run_tests(class, &opts)? {
            RunOutput::Completed { results, .. } => {
                if let Some(bad) = results.iter().find(|r| r.failure_class.is_some()) {
                    return Err(MutationError::OriginalRedFailure {
                        test: format!("{class}.{}", bad.test_method),
                    });
                }
            }
            _ => return Err(MutationError::OriginalRedFailure { test: class.clone() }),
        }
    }
    drop(program);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .expect("thread pool");
    let outcomes: Vec<Result<Outcome, MutationError>> = pool.install(|| {
        mutants
            .par_iter()
            .map(|m| judge(toolchain, &with_mutant(&all, m), test_classes, &opts))
            .collect()
    });
    let mut matrix = KillMatrix::default();
    for (m, o) in mutants.iter().zip(outcomes) {
        matrix.insert(m.id.clone(), o?);
    }
    Ok(matrix)
}
