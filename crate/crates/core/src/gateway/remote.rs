use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{BackendError, CompletionRequest, Completer};

/// Chat-completion endpoint speaking the common JSON wire format:
/// `{"model", "messages": [{"role": "user", "content"}], "max_tokens", "temperature"}`
/// answered by `{"choices": [{"message": {"content"}}]}`.
pub struct RemoteCompleter {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

/// Settings read from `LLM_ENDPOINT`, `LLM_API_KEY` and `LLM_MODEL`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteSettings {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: Option<String>,
}

impl RemoteSettings {
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var("LLM_ENDPOINT").ok().filter(|s| !s.is_empty())?;
        Some(Self {
            endpoint,
            api_key: std::env::var("LLM_API_KEY").ok().filter(|s| !s.is_empty()),
            model: std::env::var("LLM_MODEL").ok().filter(|s| !s.is_empty()),
        })
    }
}

impl RemoteCompleter {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    pub fn from_settings(settings: &RemoteSettings) -> Self {
        Self::new(settings.endpoint.clone(), settings.api_key.clone(), Duration::from_secs(120))
    }
}

fn classify_status(code: u16, body: String) -> BackendError {
    let message = format!("HTTP {code}: {}", body.chars().take(200).collect::<String>());
    if code == 408 || code == 429 || code >= 500 {
        BackendError::Transient(message)
    } else {
        BackendError::Permanent(message)
    }
}

impl Completer for RemoteCompleter {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let body = json!({
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
        });
        let mut call = self.agent.post(&self.endpoint).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        let response = match call.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                return Err(classify_status(code, r.into_string().unwrap_or_default()))
            }
            Err(ureq::Error::Transport(t)) => return Err(BackendError::Transient(t.to_string())),
        };
        let parsed: ChatResponse = response
            .into_json()
            .map_err(|e| BackendError::Transient(format!("malformed response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Permanent("response has no completion text".into()))
    }
}
