//! Fine-tuning records and job configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::miner::Triplet;

/// One training example: the description as prompt, the test as completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FineTuneRecord {
    pub prompt: String,
    pub completion: String,
}

/// One record per triplet, in input order.
pub fn export_finetune_dataset(triplets: &[Triplet]) -> impl Iterator<Item = FineTuneRecord> + '_ {
    triplets.iter().map(|t| FineTuneRecord {
        prompt: t.text.clone(),
        completion: t.testcase.clone(),
    })
}

/// Serializes records as JSON lines.
pub fn finetune_jsonl(triplets: &[Triplet]) -> String {
    let records: Vec<_> = export_finetune_dataset(triplets).collect();
    crate::jsonl::to_string(&records)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("dataset has no records")]
    Empty,
}

/// Checks that every non-blank line is an object with exactly the string keys
/// `prompt` and `completion`, both non-empty.
pub fn validate_finetune_jsonl(text: &str) -> Result<usize, SchemaError> {
    let mut count = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |reason: String| SchemaError::Invalid { line: i + 1, reason };
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| invalid(format!("not JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| invalid("not a JSON object".into()))?;
        for key in ["prompt", "completion"] {
            match obj.get(key) {
                Some(serde_json::Value::String(s)) if !s.is_empty() => {}
                Some(serde_json::Value::String(_)) => return Err(invalid(format!("`{key}` is empty"))),
                Some(_) => return Err(invalid(format!("`{key}` is not a string"))),
                None => return Err(invalid(format!("missing `{key}`"))),
            }
        }
        if let Some(extra) = obj.keys().find(|k| *k != "prompt" && *k != "completion") {
            return Err(invalid(format!("unexpected key `{extra}`")));
        }
        count += 1;
    }
    if count == 0 {
        return Err(SchemaError::Empty);
    }
    Ok(count)
}

/// Hyper-parameters submitted with a fine-tuning job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneJobConfig {
    pub base_model: String,
    pub learning_rate: f64,
    pub warmup_steps: u32,
    pub weight_decay: f64,
    pub batch_size: u32,
    pub gradient_accumulation_steps: u32,
    pub scheduler: String,
    pub epochs: u32,
}

impl Default for FineTuneJobConfig {
    fn default() -> Self {
        FineTuneJobConfig {
            base_model: "gpt-3.5-turbo".to_string(),
            learning_rate: 2e-5,
            warmup_steps: 1000,
            weight_decay: 0.01,
            batch_size: 2,
            gradient_accumulation_steps: 4,
            scheduler: "inverse_sqrt".to_string(),
            epochs: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("job config field `{0}` must be positive")]
pub struct InvalidJobConfig(pub &'static str);

impl FineTuneJobConfig {
    pub fn validate(&self) -> Result<(), InvalidJobConfig> {
        let checks: [(&'static str, bool); 6] = [
            ("learning_rate", self.learning_rate > 0.0 && self.learning_rate.is_finite()),
            ("warmup_steps", self.warmup_steps > 0),
            ("weight_decay", self.weight_decay > 0.0 && self.weight_decay.is_finite()),
            ("batch_size", self.batch_size > 0),
            ("gradient_accumulation_steps", self.gradient_accumulation_steps > 0),
            ("epochs", self.epochs > 0),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(InvalidJobConfig(name)),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
