//! Prompt assets, tactic cards, and assembly of the four-message HEP exchange.

mod assets;
mod tactics;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use assets::{load_assets, PromptAssets, ASSET_FILES};
pub use tactics::{parse_tactics, render_etp_block, render_tactic, TacticBase, TacticCard};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("missing prompt asset {0}")]
    AssetMissing(String),
    #[error("malformed prompt asset: {0}")]
    AssetParse(String),
    #[error("observation text is empty")]
    EmptyObservation,
    #[error("at least one of the tactic block and the decision prompt must be enabled")]
    UnsupportedAblation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationConfig {
    pub include_etp: bool,
    pub include_hdp: bool,
}

impl AblationConfig {
    pub const FULL: Self = Self { include_etp: true, include_hdp: true };
    pub const NO_ETP: Self = Self { include_etp: false, include_hdp: true };
    pub const NO_HDP: Self = Self { include_etp: true, include_hdp: false };

    pub fn validate(self) -> Result<Self, PromptError> {
        if self.include_etp || self.include_hdp {
            Ok(self)
        } else {
            Err(PromptError::UnsupportedAblation)
        }
    }

    pub fn label(self) -> &'static str {
        match (self.include_etp, self.include_hdp) {
            (true, true) => "full",
            (false, true) => "no-etp",
            (true, false) => "no-hdp",
            (false, false) => "none",
        }
    }
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self::FULL
    }
}

impl fmt::Display for AblationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AblationConfig {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "full" => Ok(Self::FULL),
            "no-etp" => Ok(Self::NO_ETP),
            "no-hdp" => Ok(Self::NO_HDP),
            "none" => Err(PromptError::UnsupportedAblation),
            other => Err(PromptError::AssetParse(format!("unknown ablation {other:?} (full|no-etp|no-hdp)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

pub type MessageList = Vec<Message>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Role,
    Tactics,
    Decision,
    ActionLibrary,
}

/// The system prompt plus the byte range each segment occupies in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemPrompt {
    pub text: String,
    pub segments: Vec<(Segment, Range<usize>)>,
}

impl SystemPrompt {
    pub fn segment(&self, which: Segment) -> Option<&str> {
        self.segments.iter().find(|(s, _)| *s == which).map(|(_, r)| &self.text[r.clone()])
    }
}

pub fn assemble_segments(assets: &PromptAssets, ablation: AblationConfig) -> SystemPrompt {
    let etp = render_etp_block(&assets.tactics);
    let mut parts: Vec<(Segment, &str)> = vec![(Segment::Role, &assets.role_prompt)];
    if ablation.include_etp {
        parts.push((Segment::Tactics, &etp));
    }
    let decision = if ablation.include_hdp { &assets.hdp_text } else { &assets.hdp_ablated };
    parts.push((Segment::Decision, decision));
    parts.push((Segment::ActionLibrary, &assets.action_library_text));

    let mut text = String::new();
    let mut segments = Vec::new();
    for (i, (seg, body)) in parts.into_iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        let start = text.len();
        text.push_str(body);
        segments.push((seg, start..text.len()));
    }
    SystemPrompt { text, segments }
}

/// role ⊕ tactics ⊕ decision ⊕ action library, joined by single newlines.
pub fn assemble_system_prompt(assets: &PromptAssets, ablation: AblationConfig) -> String {
    assemble_segments(assets, ablation).text
}

pub fn example_output_for(assets: &PromptAssets, ablation: AblationConfig) -> &str {
    match (ablation.include_etp, ablation.include_hdp) {
        (false, _) => &assets.example_output_ablated_etp,
        (true, false) => &assets.example_output_ablated_hdp,
        (true, true) => &assets.example_output,
    }
}

/// `[system, user (example input), assistant (example output), user (observation)]`.
pub fn build_messages(
    obs_text: &str,
    assets: &PromptAssets,
    ablation: AblationConfig,
) -> Result<MessageList, PromptError> {
    if obs_text.is_empty() {
        return Err(PromptError::EmptyObservation);
    }
    let ablation = ablation.validate()?;
    Ok(vec![
        Message { role: Role::System, content: assemble_system_prompt(assets, ablation) },
        Message { role: Role::User, content: assets.example_input.clone() },
        Message { role: Role::Assistant, content: example_output_for(assets, ablation).to_string() },
        Message { role: Role::User, content: obs_text.to_string() },
    ])
}
