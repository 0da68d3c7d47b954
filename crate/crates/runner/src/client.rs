use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{EndpointConfig, RunnerError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<Usage>,
    pub latency: Duration,
    pub attempts: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

enum Failure {
    Retry(String),
    Fatal(RunnerError),
}

/// HTTP client for one endpoint.
#[derive(Clone)]
pub struct Client {
    http: reqwest::Client,
    cfg: EndpointConfig,
    key: Option<String>,
}

impl Client {
    /// Reads the API key from the environment variable named in `cfg`.
    pub fn new(cfg: EndpointConfig) -> Result<Self, RunnerError> {
        let key = match &cfg.api_key_ref {
            Some(var) => Some(std::env::var(var).map_err(|_| RunnerError::MissingKey(var.clone()))?),
            None => None,
        };
        let http = reqwest::Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| RunnerError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(Client { http, cfg, key })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    async fn attempt(&self, prompt: &str) -> Result<(String, Option<Usage>), Failure> {
        let body = json!({
            "model": self.cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        });
        let mut request = self.http.post(self.url()).json(&body);
        if let Some(key) = &self.key {
            request = request.bearer_auth(key);
        }
        let response = request.send().await.map_err(|e| Failure::Retry(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().await.unwrap_or_default();
            return Err(if status.is_server_error() || status.as_u16() == 429 {
                Failure::Retry(format!("status {status}: {text}"))
            } else {
                Failure::Fatal(RunnerError::Status { status: status.as_u16(), body: text })
            });
        }
        let bytes = response.bytes().await.map_err(|e| Failure::Retry(e.to_string()))?;
        let parsed: ChatResponse =
            serde_json::from_slice(&bytes).map_err(|e| Failure::Fatal(RunnerError::Malformed(e.to_string())))?;
        let text = parsed.choices.into_iter().next().and_then(|c| c.message.content).unwrap_or_default();
        if text.trim().is_empty() {
            return Err(Failure::Fatal(RunnerError::EmptyCompletion));
        }
        let usage = parsed
            .usage
            .map(|u| Usage { prompt_tokens: u.prompt_tokens, completion_tokens: u.completion_tokens });
        Ok((text, usage))
    }

    /// Sends `prompt` as the single user message and returns the first
    /// choice. Transport errors, 429 and 5xx answers are retried with
    /// exponential backoff, `1 + retries` attempts in all.
    pub async fn complete(&self, prompt: &str) -> Result<Completion, RunnerError> {
        let started = Instant::now();
        let attempts = 1 + self.cfg.retries;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                log::warn!("retrying after failure: {last}");
                tokio::time::sleep(self.cfg.backoff(attempt)).await;
            }
            match self.attempt(prompt).await {
                Ok((text, usage)) => {
                    return Ok(Completion { text, usage, latency: started.elapsed(), attempts: attempt + 1 })
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(message)) => last = message,
            }
        }
        Err(RunnerError::Transport { attempts, message: last })
    }
}
