use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Where and how to query a model. `api_key_ref` names the environment
/// variable holding the key; the key itself is never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EndpointConfig {
    /// Base URL up to and excluding `/chat/completions`, e.g. `https://host/v1`.
    pub base_url: String,
    pub model_name: String,
    #[serde(default)]
    pub api_key_ref: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_parallel")]
    pub max_parallel: usize,
    /// Extra attempts after the first one fails.
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Delay before the first retry; doubled for each further one.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_max_tokens() -> u32 {
    4096
}

fn default_timeout() -> f64 {
    120.0
}

fn default_parallel() -> usize {
    4
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    1000
}

impl EndpointConfig {
    /// A config with every optional field at its default.
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_ref: None,
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            timeout_secs: default_timeout(),
            max_parallel: default_parallel(),
            retries: default_retries(),
            backoff_ms: default_backoff(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    /// Wait before attempt `attempt` (1 is the first retry).
    pub fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.backoff_ms.saturating_mul(1 << (attempt - 1).min(16)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg: EndpointConfig =
            serde_json::from_str(r#"{"baseUrl": "http://localhost:1/v1", "modelName": "m", "apiKeyRef": "KEY"}"#).unwrap();
        assert_eq!(cfg.temperature, 0.0);
        assert_eq!(cfg.max_parallel, 4);
        assert_eq!(cfg.api_key_ref.as_deref(), Some("KEY"));
        assert_eq!(cfg.backoff(1), Duration::from_secs(1));
        assert_eq!(cfg.backoff(3), Duration::from_secs(4));
        assert!(serde_json::from_str::<EndpointConfig>(r#"{"baseUrl": "x", "modelName": "m", "apiKey": "s"}"#).is_err());
    }
}
