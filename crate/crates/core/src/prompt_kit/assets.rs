use std::path::Path;

use super::tactics::{parse_tactics, TacticBase};
use super::PromptError;
use crate::action_grammar::{extract_actions, extract_field, Field};

/// `(asset name, file name)` in load order.
pub const ASSET_FILES: [(&str, &str); 9] = [
    ("role_prompt", "role_prompt.txt"),
    ("hdp", "hdp.txt"),
    ("hdp_ablated", "hdp_ablated.txt"),
    ("action_library", "action_library.txt"),
    ("example_input", "example_input.txt"),
    ("example_output", "example_output.txt"),
    ("example_output_ablated_etp", "example_output_ablated_etp.txt"),
    ("example_output_ablated_hdp", "example_output_ablated_hdp.txt"),
    ("tactics", "tactics.toml"),
];

const BUNDLED: [&str; 9] = [
    include_str!("../../assets/prompts/role_prompt.txt"),
    include_str!("../../assets/prompts/hdp.txt"),
    include_str!("../../assets/prompts/hdp_ablated.txt"),
    include_str!("../../assets/prompts/action_library.txt"),
    include_str!("../../assets/prompts/example_input.txt"),
    include_str!("../../assets/prompts/example_output.txt"),
    include_str!("../../assets/prompts/example_output_ablated_etp.txt"),
    include_str!("../../assets/prompts/example_output_ablated_hdp.txt"),
    include_str!("../../assets/prompts/tactics.toml"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptAssets {
    pub role_prompt: String,
    pub hdp_text: String,
    /// Decision text without the priority layer; keeps the Nexus and gas timing advice.
    pub hdp_ablated: String,
    pub action_library_text: String,
    pub example_input: String,
    pub example_output: String,
    pub example_output_ablated_etp: String,
    pub example_output_ablated_hdp: String,
    pub tactics: TacticBase,
}

impl PromptAssets {
    pub fn bundled() -> Self {
        Self::from_texts(BUNDLED.map(str::to_string)).expect("bundled prompt assets are valid")
    }

    fn from_texts(texts: [String; 9]) -> Result<Self, PromptError> {
        for ((name, _), text) in ASSET_FILES.iter().zip(&texts) {
            if text.trim().is_empty() {
                return Err(PromptError::AssetParse(format!("{name} is empty")));
            }
        }
        let [role_prompt, hdp_text, hdp_ablated, action_library_text, example_input, example_output, example_output_ablated_etp, example_output_ablated_hdp, tactics] =
            texts;
        let assets = Self {
            tactics: parse_tactics(&tactics)?,
            role_prompt,
            hdp_text,
            hdp_ablated,
            action_library_text,
            example_input,
            example_output,
            example_output_ablated_etp,
            example_output_ablated_hdp,
        };
        assets.validate()?;
        Ok(assets)
    }

    /// Example outputs must demonstrate the format the parser expects.
    pub fn validate(&self) -> Result<(), PromptError> {
        let check = |name: &str, text: &str, tactic: bool| {
            if extract_actions(text).is_empty() {
                return Err(PromptError::AssetParse(format!("{name} contains no legal action")));
            }
            if tactic && extract_field(text, Field::CurrentTactic).is_none() {
                return Err(PromptError::AssetParse(format!("{name} has no Current Tactic line")));
            }
            Ok(())
        };
        check("example_output", &self.example_output, true)?;
        check("example_output_ablated_etp", &self.example_output_ablated_etp, false)?;
        check("example_output_ablated_hdp", &self.example_output_ablated_hdp, true)
    }
}

/// Loads every asset from `dir`; the first missing file is reported by asset name.
pub fn load_assets(dir: &Path) -> Result<PromptAssets, PromptError> {
    let mut texts: [String; 9] = Default::default();
    for ((name, file), slot) in ASSET_FILES.iter().zip(texts.iter_mut()) {
        *slot = std::fs::read_to_string(dir.join(file)).map_err(|_| PromptError::AssetMissing((*name).to_string()))?;
    }
    PromptAssets::from_texts(texts)
}
