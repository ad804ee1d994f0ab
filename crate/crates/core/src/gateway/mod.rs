//! Generation backends behind one interface, with retries, a concurrency cap
//! and token cost accounting.

mod cost;
mod remote;
mod replay;

use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{estimate_cost, CostEntry, CostLedger, FINETUNE_RATE_PER_1K};
pub use remote::{RemoteBackend, API_KEY_ENV};
pub use replay::{prompt_sha256, ReplayBackend, ReplayEntry, REPLAY_MODEL_ID};

use crate::prompt::{validate_finetune_jsonl, FineTuneJobConfig, PromptBundle, SchemaError};

/// Approximate token count: whitespace-separated words.
pub fn approx_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub top_p: f64,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            top_p: 1.0,
        }
    }
}

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub model_id: String,
    pub prompt: PromptBundle,
    pub max_output_tokens: u32,
    pub decoding: Decoding,
}

impl GenerationRequest {
    pub fn new(model_id: impl Into<String>, prompt: PromptBundle) -> Self {
        GenerationRequest {
            model_id: model_id.into(),
            prompt,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            decoding: Decoding::default(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidRequest(m.to_string()));
        if self.max_output_tokens < 1 {
            return bad("max_output_tokens must be at least 1");
        }
        let t = self.decoding.temperature;
        if !(0.0..=2.0).contains(&t) {
            return bad("temperature must lie in [0, 2]");
        }
        let p = self.decoding.top_p;
        if !(p > 0.0 && p <= 1.0) {
            return bad("top_p must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    Remote,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGeneration {
    pub text: String,
    pub truncated: bool,
    pub usage: Usage,
    pub backend: BackendKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobStatus {
    Queued,
    Running,
    Succeeded { model_id: String },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineTuneJob {
    pub id: String,
    pub status: JobStatus,
}

impl FineTuneJob {
    pub(crate) fn rejected(reason: String) -> Self {
        FineTuneJob {
            id: String::new(),
            status: JobStatus::Failed { reason },
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("no replay entry for prompt {prompt_sha256}")]
    ReplayMiss { prompt_sha256: String },
    #[error("request rejected ({status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("fine-tune dataset invalid: {0}")]
    SchemaInvalid(#[from] SchemaError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("replay store: {0}")]
    Store(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            GatewayError::BackendUnavailable(_) | GatewayError::QuotaExceeded(_)
        )
    }
}

pub trait GenerationBackend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn generate(&self, request: &GenerationRequest) -> Result<RawGeneration, GatewayError>;
    /// `dataset` is the JSONL text, already validated.
    fn submit_finetune(&self, dataset: &str, config: &FineTuneJobConfig) -> Result<FineTuneJob, GatewayError>;
    fn poll_finetune(&self, job_id: &str) -> Result<JobStatus, GatewayError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Backoff before attempt `n + 1` given `n` failures so far (n ≥ 1).
    pub fn backoff(&self, failures: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(failures.saturating_sub(1))
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Permits);

impl Permits {
    fn new(n: usize) -> Self {
        Permits {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

/// Thread-safe front end over a backend.
pub struct Gateway {
    backend: Box<dyn GenerationBackend>,
    retry: RetryPolicy,
    sleeper: Sleeper,
    permits: Permits,
    ledger: Mutex<CostLedger<f64>>,
}

impl Gateway {
    pub fn new(backend: Box<dyn GenerationBackend>) -> Self {
        Gateway {
            backend,
            retry: RetryPolicy::default(),
            sleeper: Box::new(std::thread::sleep),
            permits: Permits::new(DEFAULT_MAX_IN_FLIGHT),
            ledger: Mutex::new(CostLedger::default()),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Replaces `thread::sleep` between retries.
    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.permits = Permits::new(n);
        self
    }

    pub fn with_rate(mut self, rate_per_1k: f64) -> Self {
        self.ledger = Mutex::new(CostLedger::new(rate_per_1k));
        self
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend.kind()
    }

    pub fn ledger(&self) -> CostLedger<f64> {
        self.ledger.lock().unwrap().clone()
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T, GatewayError>) -> Result<T, GatewayError> {
        let mut failures = 0;
        loop {
            match call() {
                Err(e) if e.is_retryable() && failures + 1 < self.retry.max_attempts => {
                    failures += 1;
                    let wait = self.retry.backoff(failures);
                    log::warn!("{e}; retrying in {wait:?}");
                    (self.sleeper)(wait);
                }
                other => return other,
            }
        }
    }

    /// Returns the backend text verbatim and records its token usage.
    pub fn generate_testcase(&self, request: &GenerationRequest) -> Result<RawGeneration, GatewayError> {
        request.validate()?;
        let generation = {
            let _permit = self.permits.acquire();
            self.with_retries(|| self.backend.generate(request))?
        };
        self.ledger
            .lock()
            .unwrap()
            .record(format!("generate:{}", request.model_id), generation.usage.total());
        Ok(generation)
    }

    /// Validates the dataset, submits it, and records the training token
    /// estimate (dataset tokens × epochs).
    pub fn submit_finetune_job(&self, dataset_path: &Path, config: &FineTuneJobConfig) -> Result<FineTuneJob, GatewayError> {
        let dataset = std::fs::read_to_string(dataset_path)
            .map_err(|e| GatewayError::Store(format!("{}: {e}", dataset_path.display())))?;
        validate_finetune_jsonl(&dataset)?;
        config
            .validate()
            .map_err(|e| GatewayError::InvalidRequest(e.to_string()))?;
        let job = {
            let _permit = self.permits.acquire();
            self.with_retries(|| self.backend.submit_finetune(&dataset, config))?
        };
        if !matches!(job.status, JobStatus::Failed { .. }) {
            let tokens = approx_tokens(&dataset) * u64::from(config.epochs);
            self.ledger.lock().unwrap().record("finetune", tokens);
        }
        Ok(job)
    }

    pub fn poll_finetune(&self, job_id: &str) -> Result<JobStatus, GatewayError> {
        self.with_retries(|| self.backend.poll_finetune(job_id))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    use super::*;
    use crate::prompt::render_basic_prompt;

    struct Flaky {
        failures: AtomicUsize,
        calls: Arc<AtomicUsize>,
        error: fn() -> GatewayError,
    }

    impl GenerationBackend for Flaky {
        fn kind(&self) -> BackendKind {
            BackendKind::Remote
        }

        fn generate(&self, _r: &GenerationRequest) -> Result<RawGeneration, GatewayError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.failures.load(Ordering::SeqCst) > 0 {
                self.failures.fetch_sub(1, Ordering::SeqCst);
                return Err((self.error)());
            }
            Ok(RawGeneration {
                text: "ok".into(),
                truncated: false,
                usage: Usage { prompt_tokens: 600, completion_tokens: 400 },
                backend: BackendKind::Remote,
            })
        }

        fn submit_finetune(&self, _d: &str, _c: &FineTuneJobConfig) -> Result<FineTuneJob, GatewayError> {
            unreachable!()
        }

        fn poll_finetune(&self, _j: &str) -> Result<JobStatus, GatewayError> {
            unreachable!()
        }
    }

    fn flaky(failures: usize, error: fn() -> GatewayError) -> (Gateway, Arc<AtomicUsize>, Arc<Mutex<Vec<Duration>>>) {
        let calls = Arc::new(AtomicUsize::new(0));
        let slept = Arc::new(Mutex::new(Vec::new()));
        let s = slept.clone();
        let gw = Gateway::new(Box::new(Flaky {
            failures: AtomicUsize::new(failures),
            calls: calls.clone(),
            error,
        }))
        .with_sleeper(move |d| s.lock().unwrap().push(d));
        (gw, calls, slept)
    }

    fn request() -> GenerationRequest {
        GenerationRequest::new("m", render_basic_prompt("Does a thing.").unwrap())
    }

    #[test]
    fn retries_transient_errors_with_backoff() {
        let (gw, calls, slept) = flaky(2, || GatewayError::QuotaExceeded("x".into()));
        let g = gw.generate_testcase(&request()).unwrap();
        assert_eq!(g.text, "ok");
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        assert_eq!(*slept.lock().unwrap(), vec![Duration::from_secs(1), Duration::from_secs(2)]);
        let ledger = gw.ledger();
        assert_eq!(ledger.total_tokens(), 1000);
        assert!((ledger.total_cost() - 0.008).abs() < 1e-12);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let (gw, calls, _) = flaky(5, || GatewayError::BackendUnavailable("down".into()));
        assert!(matches!(gw.generate_testcase(&request()), Err(GatewayError::BackendUnavailable(_))));
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        assert!(gw.ledger().entries().is_empty());
    }

    #[test]
    fn non_retryable_errors_fail_fast() {
        let (gw, calls, _) = flaky(1, || GatewayError::Rejected { status: 400, message: "no".into() });
        assert!(gw.generate_testcase(&request()).is_err());
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn request_bounds_are_checked() {
        let mut r = request();
        assert!(r.validate().is_ok());
        r.decoding.top_p = 0.0;
        assert!(r.validate().is_err());
        r.decoding = Decoding { temperature: 2.5, top_p: 1.0 };
        assert!(r.validate().is_err());
        r.decoding = Decoding::default();
        r.max_output_tokens = 0;
        assert!(matches!(
            Gateway::new(Box::new(ReplayBackend::default())).generate_testcase(&r),
            Err(GatewayError::InvalidRequest(_))
        ));
    }

    #[test]
    fn finetune_submission_validates_first() {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::new(Box::new(ReplayBackend::default()));
        let good = dir.path().join("good.jsonl");
        std::fs::write(
            &good,
            "{\"prompt\":\"a b\",\"completion\":\"c\"}\n{\"prompt\":\"d\",\"completion\":\"e\"}\n{\"prompt\":\"f\",\"completion\":\"g\"}\n",
        )
        .unwrap();
        let job = gw.submit_finetune_job(&good, &FineTuneJobConfig::default()).unwrap();
        assert_eq!(job.status, JobStatus::Succeeded { model_id: REPLAY_MODEL_ID.into() });
        // whitespace tokens of the raw JSONL: 2 + 1 + 1
        assert_eq!(gw.ledger().total_tokens(), 4 * 20);

        let bad = dir.path().join("bad.jsonl");
        std::fs::write(&bad, "{\"prompt\":\"a\",\"completion\":\"c\"}\n{\"prompt\":\"d\"}\n").unwrap();
        let err = gw.submit_finetune_job(&bad, &FineTuneJobConfig::default()).unwrap_err();
        assert!(matches!(err, GatewayError::SchemaInvalid(SchemaError::Invalid { line: 2, .. })));
    }

    #[test]
    fn in_flight_requests_are_bounded() {
        struct Slow {
            current: AtomicUsize,
            peak: AtomicUsize,
        }
        impl GenerationBackend for Slow {
            fn kind(&self) -> BackendKind {
                BackendKind::Remote
            }
            fn generate(&self, _r: &GenerationRequest) -> Result<RawGeneration, GatewayError> {
                let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(20));
                self.current.fetch_sub(1, Ordering::SeqCst);
                Ok(RawGeneration {
                    text: String::new(),
                    truncated: false,
                    usage: Usage::default(),
                    backend: BackendKind::Remote,
                })
            }
            fn submit_finetune(&self, _d: &str, _c: &FineTuneJobConfig) -> Result<FineTuneJob, GatewayError> {
                unreachable!()
            }
            fn poll_finetune(&self, _j: &str) -> Result<JobStatus, GatewayError> {
                unreachable!()
            }
        }
        let backend = Arc::new(Slow { current: AtomicUsize::new(0), peak: AtomicUsize::new(0) });
        struct Shared(Arc<Slow>);
        impl GenerationBackend for Shared {
            fn kind(&self) -> BackendKind {
                self.0.kind()
            }
            fn generate(&self, r: &GenerationRequest) -> Result<RawGeneration, GatewayError> {
                self.0.generate(r)
            }
            fn submit_finetune(&self, d: &str, c: &FineTuneJobConfig) -> Result<FineTuneJob, GatewayError> {
                self.0.submit_finetune(d, c)
            }
            fn poll_finetune(&self, j: &str) -> Result<JobStatus, GatewayError> {
                self.0.poll_finetune(j)
            }
        }
        let gw = Gateway::new(Box::new(Shared(backend.clone()))).with_max_in_flight(2);
        let req = request();
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| gw.generate_testcase(&req).unwrap());
            }
        });
        assert!(backend.peak.load(Ordering::SeqCst) <= 2);
        assert_eq!(gw.ledger().entries().len(), 8);
    }
}
