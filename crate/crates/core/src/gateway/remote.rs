//! HTTP backend for chat-completion style providers.

use std::time::Duration;

use reqwest::blocking::{multipart, Client, Response};
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{
    BackendKind, FineTuneJob, GatewayError, GenerationBackend, GenerationRequest, JobStatus,
    RawGeneration, Usage,
};
use crate::prompt::FineTuneJobConfig;

pub const API_KEY_ENV: &str = "T2T_API_KEY";

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    api_base: String,
    api_key: Option<String>,
    client: Client,
}

impl RemoteBackend {
    pub fn new(api_base: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Result<Self, GatewayError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        Ok(RemoteBackend {
            api_base: api_base.into().trim_end_matches('/').to_string(),
            api_key,
            client,
        })
    }

    /// Reads the API key from `T2T_API_KEY`.
    pub fn from_env(api_base: impl Into<String>) -> Result<Self, GatewayError> {
        Self::new(api_base, std::env::var(API_KEY_ENV).ok(), Duration::from_secs(120))
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.api_base, path)
    }

    fn authorized(&self, req: reqwest::blocking::RequestBuilder) -> reqwest::blocking::RequestBuilder {
        match &self.api_key {
            Some(key) => req.bearer_auth(key),
            None => req,
        }
    }
}

fn network(e: reqwest::Error) -> GatewayError {
    GatewayError::BackendUnavailable(e.to_string())
}

/// Pulls `error.message` out of a provider error body, falling back to the
/// raw body.
fn provider_message(body: &str) -> String {
    serde_json::from_str::<Value>(body)
        .ok()
        .and_then(|v| v["error"]["message"].as_str().map(str::to_string))
        .unwrap_or_else(|| body.trim().to_string())
}

/// Maps HTTP failures onto gateway errors; returns the JSON body on success.
fn read_json(resp: Response) -> Result<Value, GatewayError> {
    let status = resp.status();
    let body = resp.text().map_err(network)?;
    if status.is_success() {
        return serde_json::from_str(&body)
            .map_err(|e| GatewayError::BackendUnavailable(format!("malformed response: {e}")));
    }
    let message = provider_message(&body);
    Err(match status {
        StatusCode::TOO_MANY_REQUESTS => GatewayError::QuotaExceeded(message),
        StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => {
            GatewayError::BackendUnavailable(format!("authentication failed: {message}"))
        }
        s if s.is_server_error() => GatewayError::BackendUnavailable(format!("{s}: {message}")),
        s => GatewayError::Rejected {
            status: s.as_u16(),
            message,
        },
    })
}

fn job_status(v: &Value) -> JobStatus {
    match v["status"].as_str().unwrap_or("") {
        "succeeded" => JobStatus::Succeeded {
            model_id: v["fine_tuned_model"].as_str().unwrap_or_default().to_string(),
        },
        "failed" | "cancelled" => JobStatus::Failed {
            reason: v["error"]["message"]
                .as_str()
                .unwrap_or("job failed")
                .to_string(),
        },
        "running" => JobStatus::Running,
        _ => JobStatus::Queued,
    }
}

impl GenerationBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn generate(&self, request: &GenerationRequest) -> Result<RawGeneration, GatewayError> {
        let body = json!({
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt.rendered}],
            "max_tokens": request.max_output_tokens,
            "temperature": request.decoding.temperature,
            "top_p": request.decoding.top_p,
        });
        let resp = self
            .authorized(self.client.post(self.url("chat/completions")))
            .json(&body)
            .send()
            .map_err(network)?;
        let v = read_json(resp)?;
        let choice = &v["choices"][0];
        let text = choice["message"]["content"]
            .as_str()
            .or_else(|| choice["text"].as_str())
            .ok_or_else(|| GatewayError::BackendUnavailable("response has no choices".into()))?
            .to_string();
        Ok(RawGeneration {
            text,
            truncated: choice["finish_reason"].as_str() == Some("length"),
            usage: Usage {
                prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
                completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
            },
            backend: BackendKind::Remote,
        })
    }

    fn submit_finetune(&self, dataset: &str, config: &FineTuneJobConfig) -> Result<FineTuneJob, GatewayError> {
        let form = multipart::Form::new().text("purpose", "fine-tune").part(
            "file",
            multipart::Part::bytes(dataset.as_bytes().to_vec()).file_name("train.jsonl"),
        );
        let upload = self
            .authorized(self.client.post(self.url("files")))
            .multipart(form)
            .send()
            .map_err(network)?;
        let file = match read_json(upload) {
            Ok(v) => v,
            Err(GatewayError::Rejected { message, .. }) => return Ok(FineTuneJob::rejected(message)),
            Err(e) => return Err(e),
        };
        let file_id = file["id"].as_str().unwrap_or_default();
        let body = json!({
            "training_file": file_id,
            "model": config.base_model,
            "hyperparameters": {
                "n_epochs": config.epochs,
                "batch_size": config.batch_size,
                "learning_rate": config.learning_rate,
                "warmup_steps": config.warmup_steps,
                "weight_decay": config.weight_decay,
                "gradient_accumulation_steps": config.gradient_accumulation_steps,
                "lr_scheduler_type": config.scheduler,
            },
        });
        let resp = self
            .authorized(self.client.post(self.url("fine_tuning/jobs")))
            .json(&body)
            .send()
            .map_err(network)?;
        match read_json(resp) {
            Ok(v) => Ok(FineTuneJob {
                id: v["id"].as_str().unwrap_or_default().to_string(),
                status: job_status(&v),
            }),
            Err(GatewayError::Rejected { message, .. }) => Ok(FineTuneJob::rejected(message)),
            Err(e) => Err(e),
        }
    }

    fn poll_finetune(&self, job_id: &str) -> Result<JobStatus, GatewayError> {
        let resp = self
            .authorized(self.client.get(self.url(&format!("fine_tuning/jobs/{job_id}"))))
            .send()
            .map_err(network)?;
        Ok(job_status(&read_json(resp)?))
    }
}
