//! Per-stage record types and the stage functions the matrix and the CLI
//! verbs share.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::EvalItem;
use crate::gateway::{Gateway, GatewayError, GenerationRequest};
use crate::miner::{strip_test_affix, Triplet};
use crate::postprocess::{postprocess_text, Repair};
use crate::prompt::{render_for_triplet, Demonstration, PromptBundle, PromptError, PromptKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub project_id: String,
    pub focal_class: String,
    pub focal_method: String,
    pub prompt: PromptBundle,
}

/// Raw model output for one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub id: String,
    /// Focal method name the test is named after.
    pub method_name: String,
    pub text: String,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedRecord {
    pub id: String,
    pub repaired: String,
    pub repairs: Vec<Repair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_class: Option<String>,
    /// Set when the output could not be repaired; `repaired` is then the raw text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Renders one prompt per triplet. Triplets whose prompt cannot be built
/// are returned separately with the reason.
pub fn prompts_for(
    kind: PromptKind,
    triplets: &[Triplet],
    demonstration: &Demonstration,
) -> (Vec<PromptRecord>, Vec<(String, PromptError)>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for t in triplets {
        match render_for_triplet(kind, t, demonstration) {
            Ok(prompt) => ok.push(PromptRecord {
                id: t.id.clone(),
                project_id: t.project_id.clone(),
                focal_class: t.focal_class.clone(),
                focal_method: t.focal_method.clone(),
                prompt,
            }),
            Err(e) => failed.push((t.id.clone(), e)),
        }
    }
    (ok, failed)
}

/// Sends every prompt through the gateway, `workers` at a time. Results
/// keep the input order.
pub fn generate_all(
    gateway: &Gateway,
    model_id: &str,
    prompts: &[PromptRecord],
    workers: usize,
) -> Vec<Result<GeneratedRecord, GatewayError>> {
    let run = || {
        prompts
            .par_iter()
            .map(|p| {
                let request = GenerationRequest::new(model_id, p.prompt.clone());
                gateway.generate_testcase(&request).map(|g| GeneratedRecord {
                    id: p.id.clone(),
                    method_name: p.focal_method.clone(),
                    text: g.text,
                    truncated: g.truncated,
                    focal_class: Some(p.focal_class.clone()),
                    model_id: Some(model_id.to_string()),
                })
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

pub fn postprocess_all(generated: &[GeneratedRecord]) -> Vec<ProcessedRecord> {
    generated
        .iter()
        .map(|g| match postprocess_text(&g.text, &g.method_name) {
            Ok(p) => ProcessedRecord {
                id: g.id.clone(),
                repaired: p.repaired,
                repairs: p.repairs,
                focal_class: g.focal_class.clone(),
                error: None,
            },
            Err(e) => ProcessedRecord {
                id: g.id.clone(),
                repaired: g.text.clone(),
                repairs: Vec::new(),
                focal_class: g.focal_class.clone(),
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Focal class named by a triplet id `project:pkg.FooTest#method`.
fn focal_from_id(id: &str) -> Option<String> {
    let class_part = id.split_once(':').map_or(id, |(_, rest)| rest);
    let fqn = class_part.split('#').next()?;
    let simple = fqn.rsplit('.').next()?;
    strip_test_affix(simple).map(str::to_string)
}

/// Evaluation inputs; the focal class comes from the record, then from
/// `corpus`, then from the test class name in the id.
pub fn to_eval_items(processed: &[ProcessedRecord], corpus: &[Triplet]) -> Vec<EvalItem> {
    processed
        .iter()
        .map(|p| {
            let focal = p
                .focal_class
                .clone()
                .or_else(|| corpus.iter().find(|t| t.id == p.id).map(|t| t.focal_class.clone()))
                .or_else(|| focal_from_id(&p.id))
                .unwrap_or_default();
            EvalItem {
                id: p.id.clone(),
                focal_class: focal,
                test_source: p.repaired.clone(),
            }
        })
        .collect()
}
