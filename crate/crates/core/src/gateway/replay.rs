//! Offline backend answering from pre-recorded generations keyed by the
//! SHA-256 of the rendered prompt.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    approx_tokens, BackendKind, FineTuneJob, GatewayError, GenerationBackend, GenerationRequest,
    JobStatus, RawGeneration, Usage,
};
use crate::prompt::FineTuneJobConfig;

/// Lowercase hex SHA-256 of the prompt text.
pub fn prompt_sha256(rendered: &str) -> String {
    hex::encode(Sha256::digest(rendered.as_bytes()))
}

/// One line of a replay store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub prompt_sha256: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
    #[serde(default = "default_stop")]
    pub stop_reason: String,
}

fn default_stop() -> String {
    "stop".to_string()
}

impl ReplayEntry {
    pub fn new(prompt: &str, text: impl Into<String>, stop_reason: impl Into<String>) -> Self {
        let text = text.into();
        ReplayEntry {
            prompt_sha256: prompt_sha256(prompt),
            prompt_tokens: Some(approx_tokens(prompt)),
            completion_tokens: Some(approx_tokens(&text)),
            text,
            stop_reason: stop_reason.into(),
        }
    }
}

pub const REPLAY_MODEL_ID: &str = "replay-model-1";

#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    entries: HashMap<String, ReplayEntry>,
}

impl ReplayBackend {
    /// Builds the lookup table. The first entry for a hash wins.
    pub fn from_entries(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        let mut map = HashMap::new();
        for e in entries {
            if map.contains_key(&e.prompt_sha256) {
                log::warn!("duplicate replay entry for {}", e.prompt_sha256);
                continue;
            }
            map.insert(e.prompt_sha256.clone(), e);
        }
        ReplayBackend { entries: map }
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let entries: Vec<ReplayEntry> =
            crate::jsonl::read(path).map_err(|e| GatewayError::Store(e.to_string()))?;
        Ok(Self::from_entries(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl GenerationBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn generate(&self, request: &GenerationRequest) -> Result<RawGeneration, GatewayError> {
        let key = prompt_sha256(&request.prompt.rendered);
        let entry = self
            .entries
            .get(&key)
            .ok_or(GatewayError::ReplayMiss { prompt_sha256: key })?;
        Ok(RawGeneration {
            text: entry.text.clone(),
            truncated: entry.stop_reason == "length",
            usage: Usage {
                prompt_tokens: entry
                    .prompt_tokens
                    .unwrap_or_else(|| approx_tokens(&request.prompt.rendered)),
                completion_tokens: entry
                    .completion_tokens
                    .unwrap_or_else(|| approx_tokens(&entry.text)),
            },
            backend: BackendKind::Replay,
        })
    }

    fn submit_finetune(&self, _dataset: &str, _config: &FineTuneJobConfig) -> Result<FineTuneJob, GatewayError> {
        Ok(FineTuneJob {
            id: "replay-job-1".to_string(),
            status: JobStatus::Succeeded {
                model_id: REPLAY_MODEL_ID.to_string(),
            },
        })
    }

    fn poll_finetune(&self, _job_id: &str) -> Result<JobStatus, GatewayError> {
        Ok(JobStatus::Succeeded {
            model_id: REPLAY_MODEL_ID.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::GenerationRequest;
    use crate::prompt::render_basic_prompt;

    fn request(desc: &str) -> GenerationRequest {
        GenerationRequest::new("m", render_basic_prompt(desc).unwrap())
    }

    #[test]
    fn hash_is_lowercase_hex_sha256() {
        assert_eq!(
            prompt_sha256("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn lookup_returns_fixture_text_and_usage() {
        let req = request("Returns the escape character.");
        let backend = ReplayBackend::from_entries([ReplayEntry {
            prompt_sha256: prompt_sha256(&req.prompt.rendered),
            text: "  @Test public void testGetEscape() {}\n".into(),
            prompt_tokens: Some(12),
            completion_tokens: Some(7),
            stop_reason: "stop".into(),
        }]);
        let g = backend.generate(&req).unwrap();
        assert_eq!(g.text, "  @Test public void testGetEscape() {}\n");
        assert_eq!(g.usage, Usage { prompt_tokens: 12, completion_tokens: 7 });
        assert!(!g.truncated);
        assert_eq!(g.backend, BackendKind::Replay);
        assert_eq!(backend.generate(&req).unwrap(), g);
    }

    #[test]
    fn unknown_prompt_is_a_miss() {
        let backend = ReplayBackend::default();
        assert!(matches!(
            backend.generate(&request("x")),
            Err(GatewayError::ReplayMiss { .. })
        ));
    }

    #[test]
    fn length_stop_marks_truncation() {
        let req = request("Returns something long.");
        let line = format!(
            "{{\"prompt_sha256\":\"{}\",\"text\":\"@Test public void testX() {{ foo(\",\"stop_reason\":\"length\"}}",
            prompt_sha256(&req.prompt.rendered)
        );
        let entries: Vec<ReplayEntry> = crate::jsonl::parse_str(&line, "mem").unwrap();
        let g = ReplayBackend::from_entries(entries).generate(&req).unwrap();
        assert!(g.truncated);
        // counts fall back to whitespace tokens
        assert_eq!(g.usage.completion_tokens, 6);
    }

    #[test]
    fn finetune_succeeds_immediately() {
        let job = ReplayBackend::default()
            .submit_finetune("", &FineTuneJobConfig::default())
            .unwrap();
        assert_eq!(job.status, JobStatus::Succeeded { model_id: REPLAY_MODEL_ID.into() });
    }
}
