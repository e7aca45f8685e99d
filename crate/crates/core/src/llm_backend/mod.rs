//! Chat backends: live OpenAI-compatible client, scripted policies, and
//! transcript record/replay. Every call returns a cost meter.

mod live;
pub mod observation;
pub mod policies;
mod transcript;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::macro_sim::GameDataConfig;
use crate::prompt_kit::{Message, Role};

pub use live::{LiveBackend, LiveConfig, DEFAULT_API_KEY_ENV};
pub use policies::Policy;
pub use transcript::{load_transcript, record, RecordingBackend, ReplayBackend, TranscriptEntry};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostMeter {
    pub prompt_tokens: u64,
    pub output_tokens: u64,
    pub total_tokens: u64,
    pub wall_time_s: f64,
}

impl CostMeter {
    pub fn new(prompt_tokens: u64, output_tokens: u64, wall_time_s: f64) -> Self {
        Self { prompt_tokens, output_tokens, total_tokens: prompt_tokens + output_tokens, wall_time_s }
    }

    /// Local estimate for a request/response pair.
    pub fn estimate(messages: &[Message], response: &str, wall_time_s: f64) -> Self {
        let prompt = messages.iter().map(|m| estimate_tokens(&m.content)).sum();
        Self::new(prompt, estimate_tokens(response), wall_time_s)
    }

    pub fn add(&mut self, other: &CostMeter) {
        self.prompt_tokens += other.prompt_tokens;
        self.output_tokens += other.output_tokens;
        self.total_tokens += other.total_tokens;
        self.wall_time_s += other.wall_time_s;
    }
}

/// Rough token count, `ceil(bytes / 4)`. An estimate, not any provider's tokenizer.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.len() as u64).div_ceil(4)
}

/// Hex SHA-256 of the JSON-serialised message list.
pub fn request_digest(messages: &[Message]) -> String {
    let json = serde_json::to_vec(messages).expect("messages serialise");
    hex::encode(Sha256::digest(json))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("request timed out")]
    Timeout,
    #[error("transcript not found: {0}")]
    TranscriptMissing(String),
    #[error("transcript exhausted")]
    TranscriptExhausted,
    #[error("transcript I/O: {0}")]
    Io(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

pub trait ChatBackend: Send {
    fn chat(&mut self, messages: &[Message]) -> Result<(String, CostMeter), BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Live(LiveConfig),
    Scripted { policy: Policy },
    Replay { path: PathBuf },
}

impl BackendConfig {
    pub fn scripted(policy: Policy) -> Self {
        BackendConfig::Scripted { policy }
    }

    pub fn open(&self, cfg: &GameDataConfig) -> Result<Box<dyn ChatBackend>, BackendError> {
        Ok(match self {
            BackendConfig::Live(c) => Box::new(LiveBackend::new(c.clone())?),
            BackendConfig::Scripted { policy } => Box::new(ScriptedBackend { policy: *policy, cfg: cfg.clone() }),
            BackendConfig::Replay { path } => Box::new(ReplayBackend::open(path)?),
        })
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BackendConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendConfig::Live(c) => write!(f, "live:{}", c.model),
            BackendConfig::Scripted { policy } => write!(f, "scripted:{policy}"),
            BackendConfig::Replay { path } => write!(f, "replay:{}", path.display()),
        }
    }
}

impl FromStr for BackendConfig {
    type Err = BackendError;

    /// `scripted:<policy>` or `replay:<path>`. Live backends need more settings
    /// and are built from [`LiveConfig`] directly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "scripted" => arg.parse::<Policy>().map(BackendConfig::scripted).map_err(BackendError::Config),
            "replay" if !arg.is_empty() => Ok(BackendConfig::Replay { path: arg.into() }),
            "live" => Err(BackendError::Config("live backends require --live and endpoint settings".into())),
            _ => Err(BackendError::Config(format!("unknown backend {s:?} (scripted:<policy> or replay:<path>)"))),
        }
    }
}

/// A policy answering the latest user message. Stateless between calls.
pub struct ScriptedBackend {
    policy: Policy,
    cfg: GameDataConfig,
}

impl ScriptedBackend {
    pub fn new(policy: Policy, cfg: GameDataConfig) -> Self {
        Self { policy, cfg }
    }
}

impl ChatBackend for ScriptedBackend {
    fn chat(&mut self, messages: &[Message]) -> Result<(String, CostMeter), BackendError> {
        let observation = messages.iter().rev().find(|m| m.role == Role::User).map_or("", |m| m.content.as_str());
        let response = self.policy.respond(observation, &self.cfg);
        let meter = CostMeter::estimate(messages, &response, 0.0);
        Ok((response, meter))
    }
}

/// Always fails; used to exercise the runtime's fallback path.
pub struct FailingBackend;

impl ChatBackend for FailingBackend {
    fn chat(&mut self, _: &[Message]) -> Result<(String, CostMeter), BackendError> {
        Err(BackendError::BackendUnavailable("failing backend".into()))
    }
}
