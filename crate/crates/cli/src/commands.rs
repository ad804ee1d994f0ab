use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use t2t_core::eval::{evaluate_project, write_outputs, EvalOptions, GroundTruth};
use t2t_core::gateway::{approx_tokens, estimate_cost, Gateway, GenerationBackend, RemoteBackend, ReplayBackend, FINETUNE_RATE_PER_1K};
use t2t_core::miner::{
    build_triplets, filter_leakage, identify_test_classes, index_project, java_files, parse_source, split_corpus,
    MineOptions, MineReport, StructuralIndex, Triplet,
};
use t2t_core::mutation::{
    cap_per_class, compute_mutation_score, enumerate_mutants, report_rows, run_kill_analysis, KillConfig, Operator, Outcome,
};
use t2t_core::orchestrator::{
    generate_all, postprocess_all, prompts_for, render_report, run_matrix, to_eval_items, AblationGrid,
    GeneratedRecord, MatrixConfig, ProcessedRecord, PromptRecord, ToolchainConfig, Variant,
};
use t2t_core::prompt::{finetune_jsonl, validate_finetune_jsonl, Demonstration, PromptKind};
use t2t_core::stats::wilcoxon_signed_rank;
use t2t_core::toolchain::{JavaSource, JavaToolchain};
use t2t_core::jsonl;

use crate::{Cli, Command, Mode, StatsCommand, Status, ToolchainArgs, ToolchainKind};

struct Globals {
    config: Option<MatrixConfig>,
    seed: u64,
    workers: usize,
}

impl Globals {
    fn new(cli: &Cli) -> Result<Self> {
        let config = match &cli.config {
            Some(p) => Some(MatrixConfig::load(p).with_context(|| format!("loading {}", p.display()))?),
            None => None,
        };
        let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(42);
        let workers = cli
            .workers
            .or(config.as_ref().map(|c| c.workers))
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            bail!("--workers must be at least 1");
        }
        Ok(Globals { config, seed, workers })
    }

    fn toolchain(&self, args: &ToolchainArgs) -> Result<Box<dyn JavaToolchain>> {
        let from_config = self.config.as_ref().map(|c| c.toolchain.clone());
        let cfg = match args.toolchain {
            Some(ToolchainKind::Sim) => ToolchainConfig::Sim { max_steps: None },
            Some(ToolchainKind::Jdk) => ToolchainConfig::Jdk {
                shim_jar: args
                    .shim_jar
                    .clone()
                    .ok_or_else(|| anyhow!("--toolchain jdk needs --shim-jar"))?,
                classpath: args.classpath.clone(),
                jacoco_agent: args.jacoco_agent.clone(),
                jacoco_cli: args.jacoco_cli.clone(),
            },
            None => match from_config {
                Some(ToolchainConfig::Jdk {
                    shim_jar,
                    classpath,
                    jacoco_agent,
                    jacoco_cli,
                }) => ToolchainConfig::Jdk {
                    shim_jar: args.shim_jar.clone().unwrap_or(shim_jar),
                    classpath: if args.classpath.is_empty() { classpath } else { args.classpath.clone() },
                    jacoco_agent: args.jacoco_agent.clone().or(jacoco_agent),
                    jacoco_cli: args.jacoco_cli.clone().or(jacoco_cli),
                },
                Some(sim) => sim,
                None => ToolchainConfig::Sim { max_steps: None },
            },
        };
        if matches!(cfg, ToolchainConfig::Sim { .. }) && args.jacoco_agent.is_some() {
            log::warn!("--jacoco-agent is ignored by the sim toolchain, which measures coverage itself");
        }
        Ok(cfg.build_checked()?)
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json"));
}

fn sibling(out: &Path, part: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{part}.jsonl"))
}

fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad --split {s:?}"))?;
    <[f64; 3]>::try_from(parts).map_err(|_| anyhow!("--split needs three ratios, got {s:?}"))
}

fn parse_sample(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("not a number: {p:?}")))
        .collect()
}

fn read_pairs(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols.as_slice() {
            [x, y] => x.parse::<f64>().and_then(|x| y.parse::<f64>().map(|y| (x, y))),
            _ => bail!("{}:{}: expected two columns", path.display(), i + 1),
        };
        match parsed {
            Ok((x, y)) => {
                a.push(x);
                b.push(y);
            }
            Err(_) if i == 0 => continue,
            Err(e) => bail!("{}:{}: {e}", path.display(), i + 1),
        }
    }
    Ok((a, b))
}

fn load_sources(root: &Path) -> Result<Vec<JavaSource>> {
    java_files(root)?
        .into_iter()
        .map(|(rel, abs)| {
            std::fs::read_to_string(&abs)
                .map(|content| JavaSource::new(rel, content))
                .with_context(|| format!("reading {}", abs.display()))
        })
        .collect()
}

pub fn run(cli: &Cli) -> Result<Status> {
    let g = Globals::new(cli)?;
    match &cli.command {
        Command::Mine {
            roots,
            out,
            split,
            eval_projects,
        } => mine(&g, roots, out, split, eval_projects),
        Command::Prompt { mode, corpus, out, demo } => prompt(&g, *mode, corpus, out, demo.as_deref()),
        Command::ExportFinetune {
            corpus,
            out,
            rate,
            epochs,
        } => export_finetune(corpus, out, rate.unwrap_or(FINETUNE_RATE_PER_1K), *epochs),
        Command::Generate {
            prompts,
            out,
            model,
            replay,
            api_base,
            variant,
        } => generate(&g, prompts, out, model.as_deref(), replay.as_deref(), api_base.as_deref(), variant.as_deref()),
        Command::Postprocess { input, out } => postprocess(input, out),
        Command::Mutate {
            source,
            tests,
            ops,
            timeout,
            max_mutants,
            out,
            toolchain,
        } => mutate(&g, source, tests, ops, *timeout, *max_mutants, out, toolchain),
        Command::Evaluate {
            tests,
            project,
            corpus,
            with_mutation,
            ops,
            max_mutants,
            timeout,
            out,
            toolchain,
        } => {
            let mutation = with_mutation.then_some((ops.as_str(), *max_mutants));
            evaluate(&g, tests, project, corpus.as_deref(), mutation, *timeout, out, toolchain)
        }
        Command::Matrix { parallel_cells, out } => matrix(cli, &g, *parallel_cells, out.as_deref()),
        Command::Report { grid, out } => report(grid, out.as_deref()),
        Command::Stats {
            test: StatsCommand::Wilcoxon { a, b, csv },
        } => wilcoxon(a.as_deref(), b.as_deref(), csv.as_deref()),
    }
}

fn mine(g: &Globals, roots: &[PathBuf], out: &Path, split: &str, eval_projects: &[PathBuf]) -> Result<Status> {
    let ratios = parse_ratios(split)?;
    let opts = MineOptions {
        workers: Some(g.workers),
        ..MineOptions::default()
    };
    let mut all: Vec<Triplet> = Vec::new();
    let mut reports = serde_json::Map::new();
    for root in roots {
        let outcome = build_triplets(root, &opts)?;
        reports.insert(outcome.index.project_id.clone(), serde_json::to_value(&outcome.report)?);
        all.extend(outcome.triplets);
    }
    let parts = split_corpus(all.clone(), ratios, g.seed)?;
    let mut train = parts.train;
    let mut leaked = 0;
    if !eval_projects.is_empty() {
        let indexes: Vec<StructuralIndex> = eval_projects
            .iter()
            .map(|r| index_project(r, Some(g.workers), &mut MineReport::default()))
            .collect::<Result<_, _>>()?;
        (train, leaked) = filter_leakage(train, &indexes);
    }
    jsonl::write(out, &all)?;
    jsonl::write(&sibling(out, "train"), &train)?;
    jsonl::write(&sibling(out, "validation"), &parts.validation)?;
    jsonl::write(&sibling(out, "test"), &parts.test)?;
    print_json(&json!({
        "triplets": all.len(),
        "train": train.len(),
        "validation": parts.validation.len(),
        "test": parts.test.len(),
        "leakage_dropped": leaked,
        "seed": g.seed,
        "projects": reports,
    }));
    Ok(Status::Done)
}

fn prompt(g: &Globals, mode: Mode, corpus: &Path, out: &Path, demo: Option<&Path>) -> Result<Status> {
    let triplets: Vec<Triplet> = jsonl::read(corpus)?;
    let demonstration: Demonstration = match demo {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => g
            .config
            .as_ref()
            .and_then(|c| c.demonstration.clone())
            .unwrap_or_default(),
    };
    let kind = match mode {
        Mode::Basic => PromptKind::Basic,
        Mode::Improved => PromptKind::Improved,
    };
    let (prompts, rejected) = prompts_for(kind, &triplets, &demonstration);
    for (id, e) in &rejected {
        log::warn!("{id}: {e}");
    }
    jsonl::write(out, &prompts)?;
    print_json(&json!({ "prompts": prompts.len(), "rejected": rejected.len() }));
    Ok(if rejected.is_empty() { Status::Done } else { Status::Partial })
}

fn export_finetune(corpus: &Path, out: &Path, rate: f64, epochs: u32) -> Result<Status> {
    let triplets: Vec<Triplet> = jsonl::read(corpus)?;
    let text = finetune_jsonl(&triplets);
    let records = validate_finetune_jsonl(&text)?;
    std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    let tokens = approx_tokens(&text);
    let training_tokens = tokens * u64::from(epochs);
    print_json(&json!({
        "records": records,
        "dataset_tokens": tokens,
        "epochs": epochs,
        "rate_per_1k": rate,
        "estimated_cost": estimate_cost(training_tokens, rate),
    }));
    Ok(Status::Done)
}

fn generate(
    g: &Globals,
    prompts_path: &Path,
    out: &Path,
    model: Option<&str>,
    replay: Option<&Path>,
    api_base: Option<&str>,
    variant: Option<&str>,
) -> Result<Status> {
    let prompts: Vec<PromptRecord> = jsonl::read(prompts_path)?;
    let variant: Option<Variant> = variant.map(str::parse).transpose()?;
    let backend: Box<dyn GenerationBackend> = match (replay, api_base, &g.config) {
        (Some(p), _, _) => Box::new(ReplayBackend::load(p)?),
        (None, Some(url), _) => Box::new(RemoteBackend::from_env(url)?),
        (None, None, Some(cfg)) => {
            let v = variant.ok_or_else(|| anyhow!("--variant is needed to pick the configured backend"))?;
            cfg.backend.open(v)?
        }
        (None, None, None) => bail!("no backend: pass --replay, --api-base or --config"),
    };
    let model = match (model, &g.config) {
        (Some(m), _) => m.to_string(),
        (None, Some(cfg)) => {
            let run = cfg
                .run_configs()
                .into_iter()
                .find(|r| Some(r.variant) == variant)
                .map(|r| r.model_id);
            run.unwrap_or_else(|| cfg.base_model.clone())
        }
        (None, None) => "gpt-3.5-turbo".to_string(),
    };
    let gateway = Gateway::new(backend).with_max_in_flight(g.workers);
    let results = generate_all(&gateway, &model, &prompts, g.workers);
    let mut ok = Vec::new();
    let mut failed = 0;
    for (r, p) in results.into_iter().zip(&prompts) {
        match r {
            Ok(rec) => ok.push(rec),
            Err(e) => {
                log::warn!("{}: {e}", p.id);
                failed += 1;
            }
        }
    }
    jsonl::write(out, &ok)?;
    let ledger = gateway.ledger();
    print_json(&json!({
        "generated": ok.len(),
        "failed": failed,
        "model": model,
        "tokens": ledger.total_tokens(),
        "estimated_cost": ledger.total_cost(),
    }));
    Ok(if failed == 0 { Status::Done } else { Status::Partial })
}

fn postprocess(input: &Path, out: &Path) -> Result<Status> {
    let generated: Vec<GeneratedRecord> = jsonl::read(input)?;
    let processed: Vec<ProcessedRecord> = postprocess_all(&generated);
    let failed = processed.iter().filter(|p| p.error.is_some()).count();
    for p in processed.iter().filter(|p| p.error.is_some()) {
        log::warn!("{}: {}", p.id, p.error.as_deref().unwrap_or_default());
    }
    jsonl::write(out, &processed)?;
    let repaired = processed.iter().filter(|p| !p.repairs.is_empty()).count();
    print_json(&json!({ "records": processed.len(), "repaired": repaired, "unrepairable": failed }));
    Ok(if failed == 0 { Status::Done } else { Status::Partial })
}

#[allow(clippy::too_many_arguments)]
fn mutate(
    g: &Globals,
    source: &Path,
    tests: &Path,
    ops: &str,
    timeout: u64,
    max_mutants: Option<usize>,
    out: &Path,
    tc: &ToolchainArgs,
) -> Result<Status> {
    let ops = Operator::parse_list(ops)?;
    let sources = load_sources(source)?;
    let test_sources = load_sources(tests)?;
    let index = StructuralIndex::from_fragments(
        "tests",
        test_sources.iter().map(|s| parse_source(&s.path, &s.content)).collect(),
    );
    let mut classes: Vec<String> = identify_test_classes(&index)
        .into_iter()
        .map(|c| index.class(c).fqn.clone())
        .collect();
    classes.sort();
    if classes.is_empty() {
        bail!("no test classes under {}", tests.display());
    }
    let mut mutants = Vec::new();
    for s in &sources {
        mutants.extend(enumerate_mutants(&s.path, &s.content, &ops)?);
    }
    let mutants = cap_per_class(mutants, max_mutants);
    let toolchain = g.toolchain(tc)?;
    let cfg = KillConfig {
        timeout: Duration::from_secs(timeout),
        workers: g.workers,
    };
    let matrix = run_kill_analysis(&mutants, &sources, &test_sources, &classes, toolchain.as_ref(), &cfg)?;
    jsonl::write(out, &report_rows(&mutants, &matrix))?;
    let score = compute_mutation_score(&matrix);
    if let Err(e) = &score {
        log::warn!("{e}");
    }
    print_json(&json!({
        "mutants": matrix.mutants.len(),
        "killed": matrix.count(Outcome::Killed),
        "timed_out": matrix.count(Outcome::TimedOut),
        "survived": matrix.count(Outcome::Survived),
        "compile_error": matrix.count(Outcome::CompileError),
        "mutation_score": score.as_ref().ok().map(|s| s * 100.0),
    }));
    Ok(if score.is_ok() { Status::Done } else { Status::Partial })
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    g: &Globals,
    tests: &Path,
    project: &Path,
    corpus: Option<&Path>,
    mutation: Option<(&str, Option<usize>)>,
    timeout: u64,
    out: &Path,
    tc: &ToolchainArgs,
) -> Result<Status> {
    let processed: Vec<ProcessedRecord> = jsonl::read(tests)?;
    let corpus: Vec<Triplet> = match corpus {
        Some(p) => jsonl::read(p)?,
        None => Vec::new(),
    };
    let gt = GroundTruth::load(project)?;
    let items = to_eval_items(&processed, &corpus);
    let toolchain = g.toolchain(tc)?;
    let opts = EvalOptions {
        timeout: Duration::from_secs(timeout),
        workers: g.workers,
        mutation: mutation.map(|(ops, _)| Operator::parse_list(ops)).transpose()?,
        max_mutants: mutation.and_then(|(_, cap)| cap),
        ..EvalOptions::default()
    };
    let result = evaluate_project(toolchain.as_ref(), &gt, &items, &opts)?;
    write_outputs(out, &result).with_context(|| format!("writing {}", out.display()))?;
    print_json(&serde_json::to_value(&result.metrics)?);
    Ok(Status::Done)
}

fn matrix(cli: &Cli, g: &Globals, parallel_cells: Option<usize>, out: Option<&Path>) -> Result<Status> {
    let mut cfg = g
        .config
        .clone()
        .ok_or_else(|| anyhow!("matrix needs --config <run.toml>"))?;
    cfg.seed = g.seed;
    if cli.workers.is_some() {
        cfg.workers = g.workers;
    }
    if let Some(n) = parallel_cells {
        cfg.parallel_cells = n;
    }
    if let Some(o) = out {
        cfg.out = o.to_path_buf();
    }
    let summary = run_matrix(&cfg)?;
    let report = render_report(&summary.grid)?;
    std::fs::write(cfg.out.join("report.md"), &report.text)?;
    std::fs::write(cfg.out.join("report.csv"), &report.table_csv)?;
    std::fs::write(cfg.out.join("deltas.csv"), &report.deltas_csv)?;
    let failed = summary.grid.failed_cells();
    print_json(&json!({
        "cells": summary.computed + summary.reused,
        "computed": summary.computed,
        "reused": summary.reused,
        "failed": failed,
        "out": cfg.out.display().to_string(),
    }));
    Ok(if failed == 0 { Status::Done } else { Status::Partial })
}

fn report(grid: &Path, out: Option<&Path>) -> Result<Status> {
    let grid = AblationGrid::load(grid)?;
    let report = render_report(&grid)?;
    match out {
        Some(path) => {
            std::fs::write(path, &report.text).with_context(|| format!("writing {}", path.display()))?;
            std::fs::write(path.with_extension("csv"), &report.table_csv)?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            std::fs::write(path.with_file_name(format!("{stem}.deltas.csv")), &report.deltas_csv)?;
        }
        None => print!("{}", report.text),
    }
    Ok(Status::Done)
}

fn wilcoxon(a: Option<&str>, b: Option<&str>, csv: Option<&Path>) -> Result<Status> {
    let (a, b) = match (a, b, csv) {
        (Some(a), Some(b), None) => (parse_sample(a)?, parse_sample(b)?),
        (None, None, Some(p)) => read_pairs(p)?,
        _ => bail!("pass either --a and --b, or --csv"),
    };
    let r = wilcoxon_signed_rank(&a, &b)?;
    print_json(&serde_json::to_value(r)?);
    Ok(Status::Done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_and_sample_parsing() {
        assert_eq!(parse_ratios("0.6, 0.2,0.2").unwrap(), [0.6, 0.2, 0.2]);
        assert!(parse_ratios("0.5,0.5").is_err());
        assert!(parse_ratios("a,b,c").is_err());
        assert_eq!(parse_sample("1, -2.5,3").unwrap(), vec![1.0, -2.5, 3.0]);
        assert!(parse_sample("1,x").is_err());
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("out/corpus.jsonl"), "train"), PathBuf::from("out/corpus.train.jsonl"));
    }

    #[test]
    fn pair_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pairs.csv");
        std::fs::write(&p, "a,b\n1,2\n3, 4\n\n").unwrap();
        assert_eq!(read_pairs(&p).unwrap(), (vec![1.0, 3.0], vec![2.0, 4.0]));
        std::fs::write(&p, "1,2\nx,4\n").unwrap();
        assert!(read_pairs(&p).is_err());
    }
}
