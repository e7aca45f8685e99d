//! Difficulty tiers and their timed opponent scripts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::UnitKind;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum DifficultyLevel {
    Hard = 4,
    Harder = 5,
    VeryHard = 6,
    Elite = 7,
}

impl DifficultyLevel {
    pub const ALL: [DifficultyLevel; 4] =
        [DifficultyLevel::Hard, DifficultyLevel::Harder, DifficultyLevel::VeryHard, DifficultyLevel::Elite];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            DifficultyLevel::Hard => "Hard",
            DifficultyLevel::Harder => "Harder",
            DifficultyLevel::VeryHard => "VeryHard",
            DifficultyLevel::Elite => "Elite",
        }
    }
}

impl TryFrom<u8> for DifficultyLevel {
    type Error = SimError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::ALL
            .into_iter()
            .find(|l| l.number() == value)
            .ok_or_else(|| SimError::Config(format!("no difficulty level {value}")))
    }
}

impl From<DifficultyLevel> for u8 {
    fn from(value: DifficultyLevel) -> Self {
        value.number()
    }
}

impl fmt::Display for DifficultyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DifficultyLevel {
    type Err = SimError;

    /// Accepts a tier name (`veryhard`, `very-hard`, `VeryHard`) or its number.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect::<String>().to_ascii_lowercase();
        if let Ok(n) = key.parse::<u8>() {
            return Self::try_from(n);
        }
        Self::ALL
            .into_iter()
            .find(|l| l.name().to_ascii_lowercase() == key)
            .ok_or_else(|| SimError::Config(format!("unknown difficulty {s:?}")))
    }
}

/// One timed entry of an opponent script. Exactly one action field is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub at: u64,
    /// Raise the worker target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drones: Option<u32>,
    /// Queue this many extra hatcheries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hatchery: Option<u32>,
    /// Replace the army production cycle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub produce: Option<Vec<UnitKind>>,
    /// Set the ground weapon and carapace level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upgrade: Option<u32>,
    /// Send this percentage of the home army.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_pct: Option<u32>,
    /// Repeat an attack at this period until the time cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub every: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptAction {
    Drones(u32),
    Hatchery(u32),
    Produce(Vec<UnitKind>),
    Upgrade(u32),
    Attack { pct: u32, every: Option<u64> },
}

impl ScriptEntry {
    pub fn action(&self) -> Result<ScriptAction, SimError> {
        let set = [
            self.drones.is_some(),
            self.hatchery.is_some(),
            self.produce.is_some(),
            self.upgrade.is_some(),
            self.attack_pct.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if set != 1 {
            return Err(SimError::Config(format!("script entry at {}s must set exactly one action", self.at)));
        }
        if self.every.is_some() && self.attack_pct.is_none() {
            return Err(SimError::Config(format!("script entry at {}s: `every` only applies to attacks", self.at)));
        }
        Ok(if let Some(n) = self.drones {
            ScriptAction::Drones(n)
        } else if let Some(n) = self.hatchery {
            ScriptAction::Hatchery(n)
        } else if let Some(p) = &self.produce {
            ScriptAction::Produce(p.clone())
        } else if let Some(level) = self.upgrade {
            ScriptAction::Upgrade(level)
        } else {
            ScriptAction::Attack { pct: self.attack_pct.unwrap_or(0), every: self.every }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Difficulty {
    pub level: DifficultyLevel,
    /// Enemy income in percent of the base worker rate.
    pub income_pct: u32,
    /// Per-seed income perturbation, uniform in ±this many percent.
    pub income_jitter_pct: u32,
    /// Per-seed, per-wave timing perturbation, uniform in ±this many seconds.
    pub wave_jitter_s: u64,
    /// Seconds for one complete hatchery to spawn one larva.
    pub larva_interval_s: u64,
    pub script: Vec<ScriptEntry>,
}

impl Difficulty {
    pub fn attack_pcts(&self) -> impl Iterator<Item = u32> + '_ {
        self.script.iter().filter_map(|e| e.attack_pct)
    }

    pub fn first_attack_time(&self) -> Option<u64> {
        self.script.iter().filter(|e| e.attack_pct.is_some()).map(|e| e.at).min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifficultySchedules {
    pub levels: Vec<Difficulty>,
}

pub const BUNDLED_SCHEDULES: &str = include_str!("../../assets/difficulty_schedules.toml");

impl DifficultySchedules {
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_SCHEDULES).expect("bundled schedules are valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let s: DifficultySchedules = toml::from_str(text).map_err(|e| SimError::Config(format!("schedules: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn get(&self, level: DifficultyLevel) -> &Difficulty {
        self.levels.iter().find(|d| d.level == level).expect("validated schedules cover every level")
    }

    /// Every tier present once; income and attack strength nondecreasing with level;
    /// no attack at t=0.
    pub fn validate(&self) -> Result<(), SimError> {
        let mut by_level = BTreeMap::new();
        for d in &self.levels {
            if by_level.insert(d.level, d).is_some() {
                return Err(SimError::Config(format!("duplicate level {}", d.level.number())));
            }
            if d.larva_interval_s == 0 {
                return Err(SimError::Config(format!("level {}: larva interval must be positive", d.level.number())));
            }
            for entry in &d.script {
                entry.action()?;
                if entry.attack_pct.is_some() && entry.at <= d.wave_jitter_s {
                    return Err(SimError::Config(format!(
                        "level {}: attack at {}s could fire at t=0",
                        d.level.number(),
                        entry.at
                    )));
                }
                if entry.every == Some(0) {
                    return Err(SimError::Config("attack period must be positive".into()));
                }
            }
        }
        for level in DifficultyLevel::ALL {
            if !by_level.contains_key(&level) {
                return Err(SimError::Config(format!("missing level {}", level.number())));
            }
        }
        let tiers: Vec<&Difficulty> = by_level.values().copied().collect();
        for pair in tiers.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi.income_pct < lo.income_pct {
                return Err(SimError::Config(format!(
                    "income multiplier decreases from level {} to {}",
                    lo.level.number(),
                    hi.level.number()
                )));
            }
            if hi.larva_interval_s > lo.larva_interval_s {
                return Err(SimError::Config(format!(
                    "larva rate decreases from level {} to {}",
                    lo.level.number(),
                    hi.level.number()
                )));
            }
            let lo_waves: Vec<u32> = lo.attack_pcts().collect();
            let hi_waves: Vec<u32> = hi.attack_pcts().collect();
            if hi_waves.len() < lo_waves.len() || lo_waves.iter().zip(&hi_waves).any(|(l, h)| h < l) {
                return Err(SimError::Config(format!(
                    "wave sizes decrease from level {} to {}",
                    lo.level.number(),
                    hi.level.number()
                )));
            }
        }
        Ok(())
    }
}
