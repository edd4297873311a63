//! Language-model gateway: every completion in the pipeline goes through
//! [`Gateway::complete`], which consults a content-addressed cache, keeps
//! a per-stage usage ledger, bounds concurrent backend calls and retries
//! transient backend failures.

mod cache;
mod ledger;
mod mock;
mod remote;
mod retry;

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::Tokenizer;

pub use cache::{CacheEntry, CacheKey, ResponseCache};
pub use ledger::{StageUsage, UsageLedger};
pub use mock::{strip_position_markers, MockCompleter};
pub use remote::{RemoteCompleter, RemoteSettings};
pub use retry::RetryPolicy;

/// Context window of the reference backend, in tokens.
pub const DEFAULT_CONTEXT_WINDOW: usize = 128_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub prompt: String,
    pub max_output_tokens: usize,
    pub temperature: f64,
    /// Pipeline stage, used for accounting only.
    pub request_tag: String,
}

impl CompletionRequest {
    /// Deterministic request (temperature 0).
    pub fn new(
        model_id: impl Into<String>,
        prompt: impl Into<String>,
        max_output_tokens: usize,
        request_tag: impl Into<String>,
    ) -> Result<Self, GatewayError> {
        let request = Self {
            model_id: model_id.into(),
            prompt: prompt.into(),
            max_output_tokens,
            temperature: 0.0,
            request_tag: request_tag.into(),
        };
        request.validate()?;
        Ok(request)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.prompt.is_empty() {
            return Err(GatewayError::InvalidRequest("prompt is empty".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_output_tokens must be at least 1".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} is not a non-negative number",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BackendError {
    /// Worth retrying: rate limits, timeouts, server errors.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend rejected the request: {0}")]
    Permanent(String),
    #[error("backend cannot parse prompt: {0}")]
    UnparseablePrompt(String),
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("prompt has {tokens} tokens, context window is {window}")]
    PromptTooLong { tokens: usize, window: usize },
    #[error("token budget exceeded: {used} used + {requested} requested > {budget}")]
    BudgetExceeded { used: u64, requested: u64, budget: u64 },
    #[error("backend unavailable after {attempts} attempts: {last}")]
    BackendUnavailable { attempts: u32, last: String },
    #[error(transparent)]
    Backend(BackendError),
    #[error("cache write failed: {0}")]
    Cache(#[from] std::io::Error),
}

/// A completion backend.
pub trait Completer: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct GatewayConfig {
    pub context_window: usize,
    /// Upper bound on input + output tokens spent on backend calls.
    pub token_budget: Option<u64>,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            context_window: DEFAULT_CONTEXT_WINDOW,
            token_budget: None,
            max_in_flight: 8,
            retry: RetryPolicy::default(),
        }
    }
}

struct Slots {
    free: Mutex<usize>,
    freed: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.freed.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.freed.notify_one();
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct Gateway {
    backend: Arc<dyn Completer>,
    cache: ResponseCache,
    tokenizer: Arc<dyn Tokenizer>,
    config: GatewayConfig,
    ledger: Mutex<UsageLedger>,
    slots: Slots,
    sleeper: Sleeper,
}

impl Gateway {
    pub fn new(
        backend: Arc<dyn Completer>,
        cache: ResponseCache,
        tokenizer: Arc<dyn Tokenizer>,
        config: GatewayConfig,
    ) -> Self {
        let slots = Slots {
            free: Mutex::new(config.max_in_flight.max(1)),
            freed: Condvar::new(),
        };
        Self {
            backend,
            cache,
            tokenizer,
            config,
            ledger: Mutex::new(UsageLedger::default()),
            slots,
            sleeper: Arc::new(std::thread::sleep),
        }
    }

    /// Replace the function used to wait between retries.
    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Arc::new(sleeper);
        self
    }

    pub fn tokenizer(&self) -> &dyn Tokenizer {
        self.tokenizer.as_ref()
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    /// Consistent snapshot of the usage counters.
    pub fn export_ledger(&self) -> UsageLedger {
        self.ledger.lock().expect("ledger lock").clone()
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let result = self.complete_inner(request);
        if result.is_err() {
            self.ledger.lock().expect("ledger lock").record_failure(&request.request_tag);
        }
        result
    }

    fn complete_inner(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        request.validate()?;
        if let Some(text) = self.cache.get(request) {
            self.ledger.lock().expect("ledger lock").record_hit(&request.request_tag);
            return Ok(text);
        }
        let input_tokens = self.tokenizer.count(&request.prompt);
        if input_tokens > self.config.context_window {
            return Err(GatewayError::PromptTooLong {
                tokens: input_tokens,
                window: self.config.context_window,
            });
        }
        if let Some(budget) = self.config.token_budget {
            let used = self.export_ledger().total().total_tokens();
            let requested = (input_tokens + request.max_output_tokens) as u64;
            if used + requested > budget {
                return Err(GatewayError::BudgetExceeded { used, requested, budget });
            }
        }
        let text = self.call_with_retries(request)?;
        self.cache.put(request, &text)?;
        let output_tokens = self.tokenizer.count(&text);
        self.ledger.lock().expect("ledger lock").record_call(
            &request.request_tag,
            input_tokens as u64,
            output_tokens as u64,
        );
        Ok(text)
    }

    fn call_with_retries(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let attempts = self.config.retry.max_attempts.max(1);
        let mut rng = rand::thread_rng();
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                (self.sleeper)(self.config.retry.delay_for(attempt - 1, &mut rng));
            }
            let outcome = {
                let _slot = self.slots.acquire();
                self.backend.complete(request)
            };
            match outcome {
                Ok(text) => return Ok(text),
                Err(BackendError::Transient(msg)) => {
                    log::debug!("attempt {} of {attempts} failed: {msg}", attempt + 1);
                    last = msg;
                }
                Err(other) => return Err(GatewayError::Backend(other)),
            }
        }
        Err(GatewayError::BackendUnavailable { attempts, last })
    }
}
