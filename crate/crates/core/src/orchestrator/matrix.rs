use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{MatrixConfig, RunConfig};
use super::pipeline::{generate_all, postprocess_all, prompts_for, to_eval_items};
use super::{io_err, OrchestratorError, Variant};
use crate::eval::{evaluate_project, write_outputs, EvalOptions, GroundTruth, ProjectMetrics};
use crate::gateway::Gateway;
use crate::miner::{build_triplets, MineOptions, Triplet};
use crate::toolchain::JavaToolchain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Cell {
    Completed { metrics: ProjectMetrics },
    Failed { cause: String },
}

impl Cell {
    pub fn metrics(&self) -> Option<&ProjectMetrics> {
        match self {
            Cell::Completed { metrics } => Some(metrics),
            Cell::Failed { .. } => None,
        }
    }
}

/// What is stored on disk per finished cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCheckpoint {
    pub variant: Variant,
    pub project_id: String,
    pub fingerprint: String,
    pub cell: Cell,
}

/// Variant → project → cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub cells: BTreeMap<Variant, BTreeMap<String, Cell>>,
}

impl AblationGrid {
    pub fn insert(&mut self, variant: Variant, project_id: impl Into<String>, cell: Cell) {
        self.cells.entry(variant).or_default().insert(project_id.into(), cell);
    }

    pub fn get(&self, variant: Variant, project_id: &str) -> Option<&Cell> {
        self.cells.get(&variant)?.get(project_id)
    }

    /// Project ids in sorted order.
    pub fn projects(&self) -> Vec<String> {
        let mut p: Vec<String> = self.cells.values().flat_map(|m| m.keys().cloned()).collect();
        p.sort();
        p.dedup();
        p
    }

    pub fn is_empty(&self) -> bool {
        self.cells.values().all(|m| m.is_empty())
    }

    pub fn failed_cells(&self) -> usize {
        self.cells
            .values()
            .flat_map(|m| m.values())
            .filter(|c| matches!(c, Cell::Failed { .. }))
            .count()
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| OrchestratorError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSummary {
    pub grid: AblationGrid,
    pub computed: usize,
    pub reused: usize,
}

struct Project {
    id: String,
    inputs: Result<(GroundTruth, Vec<Triplet>), String>,
}

fn load_project(root: &Path, corpus: Option<&[Triplet]>, workers: usize) -> Project {
    let fallback_id = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "project".to_string());
    let gt = match GroundTruth::load(root) {
        Ok(gt) => gt,
        Err(e) => {
            return Project {
                id: fallback_id,
                inputs: Err(e.to_string()),
            }
        }
    };
    let id = gt.project_id.clone();
    let triplets = match corpus {
        Some(all) => Ok(all.iter().filter(|t| t.project_id == id).cloned().collect()),
        None => {
            let opts = MineOptions {
                workers: Some(workers),
                ..MineOptions::default()
            };
            build_triplets(root, &opts).map(|o| o.triplets).map_err(|e| e.to_string())
        }
    };
    Project {
        id,
        inputs: triplets.map(|t| (gt, t)),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), OrchestratorError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_checkpoint(path: &Path) -> Option<CellCheckpoint> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

struct CellJob<'a> {
    run: &'a RunConfig,
    gateway: &'a Result<Gateway, String>,
    project: &'a Project,
    dir: PathBuf,
    checkpoint: PathBuf,
}

fn compute_cell(job: &CellJob, toolchain: &dyn JavaToolchain) -> Result<ProjectMetrics, String> {
    let gateway = job.gateway.as_ref().map_err(Clone::clone)?;
    let (gt, triplets) = job.project.inputs.as_ref().map_err(Clone::clone)?;
    let (prompts, rejected) = prompts_for(job.run.variant.prompt, triplets, &job.run.demonstration);
    for (id, e) in &rejected {
        log::warn!("{}: no prompt for {id}: {e}", job.run.variant);
    }
    if prompts.is_empty() {
        return Err("no prompts to send (no triplets mined)".to_string());
    }
    let generated = generate_all(gateway, &job.run.model_id, &prompts, job.run.workers)
        .into_iter()
        .zip(&prompts)
        .map(|(g, p)| g.map_err(|e| format!("{}: {e}", p.id)))
        .collect::<Result<Vec<_>, _>>()?;
    let processed = postprocess_all(&generated);
    let items = to_eval_items(&processed, triplets);
    let opts = EvalOptions {
        timeout: Duration::from_secs(job.run.test_timeout_secs),
        workers: job.run.workers,
        mutation: job.run.mutation_operators.clone(),
        mutation_timeout: Duration::from_secs(job.run.mutation_timeout_secs),
        max_mutants: job.run.max_mutants,
    };
    let out = evaluate_project(toolchain, gt, &items, &opts).map_err(|e| e.to_string())?;

    let save = || -> Result<(), OrchestratorError> {
        std::fs::create_dir_all(&job.dir).map_err(io_err(&job.dir))?;
        crate::jsonl::write(&job.dir.join("prompts.jsonl"), &prompts)?;
        crate::jsonl::write(&job.dir.join("generated.jsonl"), &generated)?;
        crate::jsonl::write(&job.dir.join("processed.jsonl"), &processed)?;
        write_outputs(&job.dir, &out).map_err(io_err(&job.dir))
    };
    save().map_err(|e| e.to_string())?;
    Ok(out.metrics)
}

/// Runs every (variant, project) cell. Cells with a matching checkpoint
/// are reused; a failing cell is recorded and the rest still run.
pub fn run_matrix(cfg: &MatrixConfig) -> Result<MatrixSummary, OrchestratorError> {
    cfg.validate()?;
    let corpus: Option<Vec<Triplet>> = match &cfg.corpus {
        Some(p) => Some(crate::jsonl::read(p)?),
        None => None,
    };
    let projects: Vec<Project> = cfg
        .projects
        .iter()
        .map(|root| load_project(root, corpus.as_deref(), cfg.workers))
        .collect();
    if projects.is_empty() {
        return Err(OrchestratorError::Config("no evaluation projects".to_string()));
    }
    let runs = cfg.run_configs();
    let gateways: Vec<Result<Gateway, String>> = runs
        .iter()
        .map(|r| {
            cfg.backend
                .open(r.variant)
                .map(|b| Gateway::new(b).with_max_in_flight(cfg.workers))
                .map_err(|e| e.to_string())
        })
        .collect();
    let toolchain = cfg.toolchain.build_checked()?;
    let cells_dir = cfg.out.join("cells");

    let jobs: Vec<CellJob> = runs
        .iter()
        .zip(&gateways)
        .flat_map(|(run, gateway)| {
            let cells_dir = &cells_dir;
            projects.iter().map(move |project| CellJob {
                run,
                gateway,
                project,
                dir: cells_dir.join(run.variant.slug()).join(&project.id),
                checkpoint: cells_dir.join(run.variant.slug()).join(format!("{}.json", project.id)),
            })
        })
        .collect();

    let do_job = |job: &CellJob| -> Result<(CellCheckpoint, bool), OrchestratorError> {
        let ckpt_path = &job.checkpoint;
        let fingerprint = job.run.fingerprint(&job.project.id);
        if let Some(ck) = read_checkpoint(ckpt_path) {
            if ck.fingerprint == fingerprint && matches!(ck.cell, Cell::Completed { .. }) {
                log::info!("{} / {}: reusing checkpoint", job.run.variant, job.project.id);
                return Ok((ck, false));
            }
        }
        log::info!("{} / {}: running", job.run.variant, job.project.id);
        let cell = match compute_cell(job, toolchain.as_ref()) {
            Ok(metrics) => Cell::Completed { metrics },
            Err(cause) => {
                log::warn!("{} / {} failed: {cause}", job.run.variant, job.project.id);
                Cell::Failed { cause }
            }
        };
        let ck = CellCheckpoint {
            variant: job.run.variant,
            project_id: job.project.id.clone(),
            fingerprint,
            cell,
        };
        let text = serde_json::to_string_pretty(&ck).expect("checkpoint serializes") + "\n";
        write_atomic(ckpt_path, &text)?;
        Ok((ck, true))
    };
    let results: Vec<Result<(CellCheckpoint, bool), OrchestratorError>> = if cfg.parallel_cells > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallel_cells)
            .build()
            .map_err(|e| OrchestratorError::Config(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(do_job).collect())
    } else {
        jobs.iter().map(do_job).collect()
    };

    let mut summary = MatrixSummary {
        grid: AblationGrid::default(),
        computed: 0,
        reused: 0,
    };
    for r in results {
        let (ck, computed) = r?;
        if computed {
            summary.computed += 1;
        } else {
            summary.reused += 1;
        }
        summary.grid.insert(ck.variant, ck.project_id, ck.cell);
    }
    let grid_json = serde_json::to_string_pretty(&summary.grid).expect("grid serializes") + "\n";
    write_atomic(&cfg.out.join("grid.json"), &grid_json)?;
    Ok(summary)
}
