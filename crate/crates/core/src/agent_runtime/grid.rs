//! Run-configuration files: TOML with one `[[cell]]` table per configuration.
//!
//! ```toml
//! [[cell]]
//! difficulty = "VeryHard"        # name or number 4..=7
//! seeds = [1, 2, 3]              # or `seed = 7`
//! ablation = "full"              # full | no-etp | no-hdp
//! backend = "scripted:hep_oracle"
//! n = 20                         # optional, ticks between queries
//! enforce_hierarchy = "on"       # optional, on | off | report-only
//! max_ticks = 1500               # optional
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BatchCell, RuntimeConfig, RuntimeError, DEFAULT_N};
use crate::hierarchy_guard::EnforceMode;
use crate::llm_backend::BackendConfig;
use crate::macro_sim::DifficultyLevel;
use crate::prompt_kit::AblationConfig;

pub const BUNDLED_ABLATION_GRID: &str = include_str!("../../assets/grids/ablation.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCell {
    #[serde(deserialize_with = "name_or_number")]
    pub difficulty: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_ablation")]
    pub ablation: String,
    pub backend: String,
    #[serde(default = "default_n")]
    pub n: u32,
    #[serde(default = "default_enforce")]
    pub enforce_hierarchy: String,
    #[serde(default)]
    pub max_ticks: Option<u64>,
}

fn name_or_number<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Value {
        Name(String),
        Number(u64),
    }
    Ok(match Value::deserialize(d)? {
        Value::Name(s) => s,
        Value::Number(n) => n.to_string(),
    })
}

fn default_ablation() -> String {
    "full".into()
}

fn default_n() -> u32 {
    DEFAULT_N
}

fn default_enforce() -> String {
    "on".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    #[serde(default)]
    pub cell: Vec<GridCell>,
}

impl GridFile {
    pub fn parse(text: &str) -> Result<Self, RuntimeError> {
        toml::from_str(text).map_err(|e| RuntimeError::Config(format!("grid: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RuntimeError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| RuntimeError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn bundled_ablation() -> Self {
        Self::parse(BUNDLED_ABLATION_GRID).expect("bundled grid is valid")
    }

    /// One batch cell per (table, seed).
    pub fn expand(&self) -> Result<Vec<BatchCell>, RuntimeError> {
        let cfg_err = |m: String| RuntimeError::Config(m);
        let mut cells = Vec::new();
        for (i, c) in self.cell.iter().enumerate() {
            let difficulty: DifficultyLevel =
                c.difficulty.parse().map_err(|e| cfg_err(format!("cell {}: {e}", i + 1)))?;
            let ablation: AblationConfig = c.ablation.parse().map_err(|e| cfg_err(format!("cell {}: {e}", i + 1)))?;
            let enforce: EnforceMode =
                c.enforce_hierarchy.parse().map_err(|e| cfg_err(format!("cell {}: {e}", i + 1)))?;
            let backend: BackendConfig = c.backend.parse().map_err(|e| cfg_err(format!("cell {}: {e}", i + 1)))?;
            let mut seeds = c.seeds.clone();
            seeds.extend(c.seed);
            if seeds.is_empty() {
                return Err(cfg_err(format!("cell {}: no seed or seeds", i + 1)));
            }
            for seed in seeds {
                let mut config = RuntimeConfig::new(difficulty, seed);
                config.n = c.n;
                config.ablation = ablation;
                config.enforce = enforce;
                if let Some(m) = c.max_ticks {
                    config.max_ticks = m;
                }
                config.validate()?;
                cells.push(BatchCell { config, backend: backend.clone() });
            }
        }
        Ok(cells)
    }
}
