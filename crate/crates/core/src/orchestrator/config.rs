use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{io_err, OrchestratorError, Variant};
use crate::gateway::{GenerationBackend, GatewayError, RemoteBackend, ReplayBackend, API_KEY_ENV};
use crate::mutation::Operator;
use crate::prompt::Demonstration;
use crate::toolchain::{JavaToolchain, JdkToolchain, SimToolchain, ToolchainError};

fn default_base_model() -> String {
    "gpt-3.5-turbo".to_string()
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

fn default_seed() -> u64 {
    42
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn one() -> usize {
    1
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

fn thirty() -> u64 {
    30
}

fn ten() -> u64 {
    10
}

fn all_ops() -> String {
    "all".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    /// Pre-recorded generations, one store per variant: `<dir>/<slug>.jsonl`.
    Replay { dir: PathBuf },
    Remote {
        api_base: String,
        #[serde(default = "default_request_timeout")]
        timeout_secs: u64,
    },
}

fn default_request_timeout() -> u64 {
    120
}

impl BackendConfig {
    pub fn open(&self, variant: Variant) -> Result<Box<dyn GenerationBackend>, GatewayError> {
        match self {
            BackendConfig::Replay { dir } => {
                let path = dir.join(format!("{}.jsonl", variant.slug()));
                Ok(Box::new(ReplayBackend::load(&path)?))
            }
            BackendConfig::Remote { api_base, timeout_secs } => Ok(Box::new(RemoteBackend::new(
                api_base.clone(),
                std::env::var(API_KEY_ENV).ok(),
                Duration::from_secs(*timeout_secs),
            )?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ToolchainConfig {
    /// The bundled interpreter; no JVM needed.
    Sim {
        #[serde(default)]
        max_steps: Option<u64>,
    },
    Jdk {
        shim_jar: PathBuf,
        #[serde(default)]
        classpath: Vec<PathBuf>,
        #[serde(default)]
        jacoco_agent: Option<PathBuf>,
        #[serde(default)]
        jacoco_cli: Option<PathBuf>,
    },
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        ToolchainConfig::Sim { max_steps: None }
    }
}

impl ToolchainConfig {
    /// Like [`ToolchainConfig::build`], but first makes sure `javac` runs.
    pub fn build_checked(&self) -> Result<Box<dyn JavaToolchain>, ToolchainError> {
        if let ToolchainConfig::Jdk { shim_jar, .. } = self {
            JdkToolchain::new(shim_jar).check_available()?;
        }
        Ok(self.build())
    }

    pub fn build(&self) -> Box<dyn JavaToolchain> {
        match self {
            ToolchainConfig::Sim { max_steps } => {
                let mut tc = SimToolchain::default();
                if let Some(n) = max_steps {
                    tc.max_steps = *n;
                }
                Box::new(tc)
            }
            ToolchainConfig::Jdk {
                shim_jar,
                classpath,
                jacoco_agent,
                jacoco_cli,
            } => {
                let mut tc = JdkToolchain::new(shim_jar);
                tc.classpath = classpath.clone();
                tc.jacoco_agent = jacoco_agent.clone();
                tc.jacoco_cli = jacoco_cli.clone();
                Box::new(tc)
            }
        }
    }
}

/// The whole ablation run, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    #[serde(default = "default_base_model")]
    pub base_model: String,
    /// Model id used by the fine-tuned variants.
    #[serde(default)]
    pub finetuned_model: Option<String>,
    /// Evaluation project roots.
    #[serde(default)]
    pub projects: Vec<PathBuf>,
    /// Triplets to evaluate on; when absent each project is mined.
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "one")]
    pub parallel_cells: usize,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "thirty")]
    pub test_timeout_secs: u64,
    #[serde(default)]
    pub mutation: bool,
    #[serde(default = "all_ops")]
    pub mutation_operators: String,
    #[serde(default = "ten")]
    pub mutation_timeout_secs: u64,
    /// Per-class mutant cap; unlimited when absent.
    #[serde(default)]
    pub max_mutants: Option<usize>,
    pub backend: BackendConfig,
    #[serde(default)]
    pub toolchain: ToolchainConfig,
    #[serde(default)]
    pub demonstration: Option<Demonstration>,
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl MatrixConfig {
    pub fn from_toml(text: &str) -> Result<Self, OrchestratorError> {
        let cfg: MatrixConfig = toml::from_str(text).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase_paths(base);
        Ok(cfg)
    }

    pub fn rebase_paths(&mut self, base: &Path) {
        for p in &mut self.projects {
            rebase(base, p);
        }
        if let Some(c) = &mut self.corpus {
            rebase(base, c);
        }
        rebase(base, &mut self.out);
        if let BackendConfig::Replay { dir } = &mut self.backend {
            rebase(base, dir);
        }
        if let ToolchainConfig::Jdk {
            shim_jar,
            classpath,
            jacoco_agent,
            jacoco_cli,
        } = &mut self.toolchain
        {
            rebase(base, shim_jar);
            classpath.iter_mut().for_each(|p| rebase(base, p));
            jacoco_agent.iter_mut().for_each(|p| rebase(base, p));
            jacoco_cli.iter_mut().for_each(|p| rebase(base, p));
        }
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |m: &str| Err(OrchestratorError::Config(m.to_string()));
        if self.variants.is_empty() {
            return bad("no variants selected");
        }
        let mut seen = self.variants.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.variants.len() {
            return bad("a variant is listed twice");
        }
        if self.workers == 0 || self.parallel_cells == 0 {
            return bad("workers and parallel_cells must be at least 1");
        }
        if self.test_timeout_secs == 0 || self.mutation_timeout_secs == 0 {
            return bad("timeouts must be positive");
        }
        if self.mutation {
            Operator::parse_list(&self.mutation_operators).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// The per-variant run configurations, in table order.
    pub fn run_configs(&self) -> Vec<RunConfig> {
        let mut variants = self.variants.clone();
        variants.sort();
        variants
            .into_iter()
            .map(|variant| RunConfig {
                variant,
                model_id: if variant.fine_tuned {
                    self.finetuned_model
                        .clone()
                        .unwrap_or_else(|| format!("ft:{}", self.base_model))
                } else {
                    self.base_model.clone()
                },
                projects: self.projects.clone(),
                corpus: self.corpus.clone(),
                seed: self.seed,
                workers: self.workers,
                test_timeout_secs: self.test_timeout_secs,
                mutation_operators: self
                    .mutation
                    .then(|| Operator::parse_list(&self.mutation_operators).unwrap_or_default()),
                mutation_timeout_secs: self.mutation_timeout_secs,
                max_mutants: self.max_mutants,
                demonstration: self.demonstration.clone().unwrap_or_default(),
            })
            .collect()
    }
}

/// Everything one ablation arm needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub variant: Variant,
    pub model_id: String,
    pub projects: Vec<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub seed: u64,
    pub workers: usize,
    pub test_timeout_secs: u64,
    pub mutation_operators: Option<Vec<Operator>>,
    pub mutation_timeout_secs: u64,
    pub max_mutants: Option<usize>,
    pub demonstration: Demonstration,
}

impl RunConfig {
    /// Identifies the inputs of one cell; a checkpoint with another
    /// fingerprint is stale.
    pub fn fingerprint(&self, project_id: &str) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        h.update([0]);
        h.update(project_id.as_bytes());
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML: &str = r#"
base_model = "gpt-3.5-turbo"
finetuned_model = "ft:gpt-3.5-turbo:t2t"
projects = ["projects/csv"]
out = "out"
workers = 2
variants = ["NoFT+B.P", "FT+I.P"]

[backend]
kind = "replay"
dir = "replay"
"#;

    #[test]
    fn parses_and_expands() {
        let mut cfg = MatrixConfig::from_toml(TOML).unwrap();
        cfg.rebase_paths(Path::new("/cfg"));
        assert_eq!(cfg.projects, vec![PathBuf::from("/cfg/projects/csv")]);
        assert_eq!(cfg.backend, BackendConfig::Replay { dir: "/cfg/replay".into() });
        assert_eq!(cfg.toolchain, ToolchainConfig::Sim { max_steps: None });
        let runs = cfg.run_configs();
        assert_eq!(runs.iter().map(|r| r.variant.label()).collect::<Vec<_>>(), ["FT+I.P", "NoFT+B.P"]);
        assert_eq!(runs[0].model_id, "ft:gpt-3.5-turbo:t2t");
        assert_eq!(runs[1].model_id, "gpt-3.5-turbo");
        assert_ne!(runs[0].fingerprint("csv"), runs[1].fingerprint("csv"));
        assert_ne!(runs[0].fingerprint("csv"), runs[0].fingerprint("json"));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(MatrixConfig::from_toml("").is_err());
        assert!(MatrixConfig::from_toml(&format!("{TOML}\nbogus = 1")).is_err());
        let dup = TOML.replace("\"FT+I.P\"", "\"NoFT+B.P\"");
        assert!(MatrixConfig::from_toml(&dup).is_err());
        let bad_op = format!("mutation = true\nmutation_operators = \"XYZ\"\n{TOML}");
        assert!(MatrixConfig::from_toml(&bad_op).is_err());
    }
}
