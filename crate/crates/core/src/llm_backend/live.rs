//! OpenAI-compatible chat-completions client.
//!
//! Request: `POST {endpoint}/chat/completions` with
//! `{"model", "messages": [{"role", "content"}], "temperature"}` and a bearer token.
//! Response: `choices[0].message.content`, optional `usage.prompt_tokens` and
//! `usage.completion_tokens` (local estimates are used when usage is absent).

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, CostMeter};
use crate::prompt_kit::Message;

pub const DEFAULT_API_KEY_ENV: &str = "HEP_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default)]
    pub temperature: f64,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.into()
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

impl LiveConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: default_key_env(),
            timeout_s: default_timeout(),
            retries: default_retries(),
            temperature: 0.0,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    api_key: String,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| BackendError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        if config.timeout_s.is_nan() || config.timeout_s <= 0.0 {
            return Err(BackendError::Config("timeout_s must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_s))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self { config, client, api_key })
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }

    fn attempt(&self, messages: &[Message]) -> Result<(String, Option<WireUsage>), Attempt> {
        let body = WireRequest { model: &self.config.model, messages, temperature: self.config.temperature };
        let resp = self.client.post(self.url()).bearer_auth(&self.api_key).json(&body).send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(BackendError::Timeout)
            } else {
                Attempt::Retry(BackendError::BackendUnavailable(e.without_url().to_string()))
            }
        })?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Attempt::Retry(BackendError::BackendUnavailable(format!("HTTP {status}"))));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(BackendError::BackendUnavailable(format!("HTTP {status}"))));
        }
        let wire: WireResponse = resp.json().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(BackendError::Timeout)
            } else {
                Attempt::Fatal(BackendError::BackendUnavailable(format!("malformed response: {e}")))
            }
        })?;
        let content = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Attempt::Fatal(BackendError::BackendUnavailable("response has no choices".into())))?;
        Ok((content, wire.usage))
    }
}

enum Attempt {
    Retry(BackendError),
    Fatal(BackendError),
}

impl ChatBackend for LiveBackend {
    fn chat(&mut self, messages: &[Message]) -> Result<(String, CostMeter), BackendError> {
        let start = Instant::now();
        let mut last = BackendError::BackendUnavailable("no attempt made".into());
        for attempt in 0..=self.config.retries {
            match self.attempt(messages) {
                Ok((text, usage)) => {
                    let wall = start.elapsed().as_secs_f64();
                    let estimate = CostMeter::estimate(messages, &text, wall);
                    let meter = CostMeter::new(
                        usage.as_ref().and_then(|u| u.prompt_tokens).unwrap_or(estimate.prompt_tokens),
                        usage.as_ref().and_then(|u| u.completion_tokens).unwrap_or(estimate.output_tokens),
                        wall,
                    );
                    return Ok((text, meter));
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    log::warn!("chat attempt {} failed: {e}", attempt + 1);
                    last = e;
                }
            }
        }
        Err(last)
    }
}
