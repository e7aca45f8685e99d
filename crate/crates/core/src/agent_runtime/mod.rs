//! The timed agent/environment loop: query the backend every `n` ticks, step
//! with the default action in between.

mod batch;
mod grid;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action_grammar::{parse_decision, ActionToken, DecisionOutput};
use crate::hierarchy_guard::{enforce_with_mode, EnforceMode, HierarchyReport};
use crate::llm_backend::{ChatBackend, CostMeter};
use crate::macro_sim::{DifficultyLevel, DifficultySchedules, GameDataConfig, GameState, MacroEnv, Outcome, SimError};
use crate::prompt_kit::{build_messages, AblationConfig, PromptAssets, PromptError};
use crate::telemetry::{TacticTracePoint, TelemetrySink, DEFAULT_SNAPSHOT_TIMES};

pub use batch::{run_batch, BatchCell, BatchReport, BatchRow, MatchSummary};
pub use grid::{GridCell, GridFile, BUNDLED_ABLATION_GRID};

pub const DEFAULT_N: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeConfig {
    /// Ticks between backend queries.
    pub n: u32,
    /// Action executed on ticks without a query, and when a query fails.
    pub a0: ActionToken,
    pub max_ticks: u64,
    pub ablation: AblationConfig,
    pub enforce: EnforceMode,
    pub seed: u64,
    pub difficulty: DifficultyLevel,
    pub snapshot_times: Vec<u64>,
}

impl RuntimeConfig {
    pub fn new(difficulty: DifficultyLevel, seed: u64) -> Self {
        Self {
            n: DEFAULT_N,
            a0: ActionToken::EmptyAction,
            max_ticks: 1500,
            ablation: AblationConfig::FULL,
            enforce: EnforceMode::On,
            seed,
            difficulty,
            snapshot_times: DEFAULT_SNAPSHOT_TIMES.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), RuntimeError> {
        if self.n == 0 {
            return Err(RuntimeError::Config("n must be at least 1".into()));
        }
        if self.max_ticks == 0 {
            return Err(RuntimeError::Config("max_ticks must be at least 1".into()));
        }
        self.ablation.validate()?;
        Ok(())
    }
}

/// Static inputs shared by every match: game data and opponent schedules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimAssets {
    pub game_data: GameDataConfig,
    pub schedules: DifficultySchedules,
}

impl SimAssets {
    pub fn bundled() -> Self {
        Self { game_data: GameDataConfig::bundled(), schedules: DifficultySchedules::bundled() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("runtime configuration: {0}")]
    Config(String),
    #[error("empty grid")]
    EmptyGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryLog {
    pub tick: u64,
    pub time_s: u64,
    pub observation_digest: String,
    pub decision: DecisionOutput,
    pub report: HierarchyReport,
    pub meter: CostMeter,
    /// Backend failure that made this tick fall back to the default action.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchTotals {
    pub ticks: u64,
    pub queries: u64,
    pub failed_queries: u64,
    pub cost: CostMeter,
}

impl MatchTotals {
    pub fn mean_per_query(&self) -> CostMeter {
        if self.queries == 0 {
            return CostMeter::default();
        }
        CostMeter::new(
            self.cost.prompt_tokens / self.queries,
            self.cost.output_tokens / self.queries,
            self.cost.wall_time_s / self.queries as f64,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub config: RuntimeConfig,
    pub backend: String,
    pub queries: Vec<QueryLog>,
    pub telemetry: TelemetrySink,
    pub outcome: Option<Outcome>,
    pub totals: MatchTotals,
    pub final_state: GameState,
}

impl MatchRecord {
    /// Hex SHA-256 of the serialised record.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("record serialises");
        hex::encode(Sha256::digest(json))
    }

    pub fn end_time_s(&self) -> u64 {
        self.final_state.time_s
    }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn fallback_decision(a0: ActionToken) -> DecisionOutput {
    DecisionOutput {
        current_tactic: None,
        priority: None,
        raw_actions: vec![a0],
        validated_actions: Vec::new(),
        raw_text: String::new(),
        violations: Vec::new(),
    }
}

/// Runs one match to its outcome or `max_ticks`.
pub fn run_match(
    config: &RuntimeConfig,
    prompts: &PromptAssets,
    sim: &SimAssets,
    backend: &mut dyn ChatBackend,
    backend_label: &str,
) -> Result<MatchRecord, RuntimeError> {
    config.validate()?;
    let difficulty = sim.schedules.get(config.difficulty).clone();
    let (mut env, _) = MacroEnv::new(sim.game_data.clone(), difficulty, config.seed)?;
    let mut sink = TelemetrySink::new(config.snapshot_times.clone());
    sink.sample(&env.state, &env.cfg).expect("first sample");
    let tactics: Vec<&str> = prompts.tactics.names().collect();
    let mut queries = Vec::new();
    let mut totals = MatchTotals::default();

    let mut t: u64 = 0;
    while env.outcome().is_none() && t < config.max_ticks {
        let actions = if t.is_multiple_of(u64::from(config.n)) {
            let obs = env.observe();
            let messages = build_messages(&obs.text, prompts, config.ablation)?;
            let (mut decision, meter, error) = match backend.chat(&messages) {
                Ok((text, meter)) => (parse_decision(&text, tactics.iter().copied()), meter, None),
                Err(e) => {
                    log::warn!("tick {t}: backend error, using default action: {e}");
                    (fallback_decision(config.a0), CostMeter::default(), Some(e.to_string()))
                }
            };
            let (validated, report) = enforce_with_mode(&decision, config.enforce);
            decision.validated_actions = validated.clone();
            totals.queries += 1;
            totals.failed_queries += u64::from(error.is_some());
            totals.cost.add(&meter);
            sink.trace(TacticTracePoint {
                tick: t,
                time_s: env.state.time_s,
                tactic: decision.current_tactic.clone(),
                priority: decision.priority.map(|p| p.name().to_string()),
                compliant: report.compliant,
            });
            queries.push(QueryLog {
                tick: t,
                time_s: env.state.time_s,
                observation_digest: sha256_hex(&obs.text),
                decision,
                report,
                meter,
                error,
            });
            validated
        } else {
            vec![config.a0]
        };
        env.step(&actions, 1)?;
        t += 1;
        sink.sample(&env.state, &env.cfg).expect("time advances every tick");
    }
    totals.ticks = t;

    Ok(MatchRecord {
        config: config.clone(),
        backend: backend_label.to_string(),
        queries,
        telemetry: sink,
        outcome: env.outcome(),
        totals,
        final_state: env.state,
    })
}

/// Number of query ticks in a match of `ticks` ticks starting at 0.
pub fn expected_queries(ticks: u64, n: u32) -> u64 {
    ticks.div_ceil(u64::from(n))
}
