//! Deterministic macro-strategy simulator: Protoss player against a scripted Zerg opponent.
//!
//! All arithmetic in the tick loop is integer. One tick is `tick_seconds` game seconds.

pub mod combat;
pub mod data;
pub mod difficulty;
pub mod engine;
pub mod observe;
pub mod state;

pub use combat::{resolve_combat, Army, CombatOutcome, Force, Upgrades};
pub use data::{BuildingKind, GameDataConfig, TechKind, UnitKind};
pub use difficulty::{Difficulty, DifficultyLevel, DifficultySchedules};
pub use engine::{is_terminated, opponent_actions, reset, step, OpponentCommand};
pub use observe::{clock, render_observation, Observation, ObservationSnapshot};
pub use state::{EventKind, GameState, Outcome, SimEvent, SkipReason};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("the game is already over")]
    GameOver,
}

/// A game bundled with the configuration it runs under.
#[derive(Debug, Clone)]
pub struct MacroEnv {
    pub cfg: GameDataConfig,
    pub difficulty: Difficulty,
    pub state: GameState,
}

impl MacroEnv {
    pub fn new(cfg: GameDataConfig, difficulty: Difficulty, seed: u64) -> Result<(Self, Observation), SimError> {
        let (state, obs) = reset(&cfg, &difficulty, seed)?;
        Ok((Self { cfg, difficulty, state }, obs))
    }

    pub fn step(&mut self, actions: &[crate::action_grammar::ActionToken], n_ticks: u32) -> Result<(), SimError> {
        step(&mut self.state, actions, n_ticks, &self.difficulty, &self.cfg)
    }

    pub fn observe(&self) -> Observation {
        render_observation(&self.state, &self.cfg)
    }

    pub fn outcome(&self) -> Option<Outcome> {
        is_terminated(&self.state)
    }
}
