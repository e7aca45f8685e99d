use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_match, MatchRecord, RuntimeConfig, RuntimeError, SimAssets};
use crate::llm_backend::{BackendConfig, CostMeter};
use crate::macro_sim::Outcome;
use crate::prompt_kit::PromptAssets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchCell {
    pub config: RuntimeConfig,
    pub backend: BackendConfig,
}

impl BatchCell {
    /// Grouping key: everything except the seed.
    fn group_key(&self) -> (u8, String, String, u32, String) {
        (
            self.config.difficulty.number(),
            self.config.ablation.label().to_string(),
            self.backend.label(),
            self.config.n,
            self.config.enforce.to_string(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub difficulty: String,
    pub seed: u64,
    pub ablation: String,
    pub backend: String,
    pub n: u32,
    pub enforce: String,
    pub outcome: Option<Outcome>,
    pub error: Option<String>,
    pub end_time_s: u64,
    pub queries: u64,
    pub cost: CostMeter,
    pub digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub difficulty: String,
    pub ablation: String,
    pub backend: String,
    pub n: u32,
    pub enforce: String,
    pub games: u32,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    pub errors: u32,
    pub mean_per_query: CostMeter,
}

impl BatchRow {
    /// `wins/games (pct%)`.
    pub fn win_rate(&self) -> String {
        let pct = (self.wins * 100 + self.games / 2).checked_div(self.games).unwrap_or(0);
        format!("{}/{} ({pct}%)", self.wins, self.games)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub matches: Vec<MatchSummary>,
    pub rows: Vec<BatchRow>,
}

impl BatchReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<9} {:<7} {:<28} {:>3} {:<11} {:>13} {:>4} {:>4} {:>4} {:>8} {:>8} {:>7} {:>8}",
            "level",
            "prompt",
            "backend",
            "n",
            "enforce",
            "wins",
            "loss",
            "draw",
            "err",
            "tok/q",
            "prompt/q",
            "out/q",
            "time/q"
        );
        for r in &self.rows {
            let m = &r.mean_per_query;
            let _ = writeln!(
                out,
                "{:<9} {:<7} {:<28} {:>3} {:<11} {:>13} {:>4} {:>4} {:>4} {:>8} {:>8} {:>7} {:>8.2}",
                r.difficulty,
                r.ablation,
                r.backend,
                r.n,
                r.enforce,
                r.win_rate(),
                r.losses,
                r.draws,
                r.errors,
                m.total_tokens,
                m.prompt_tokens,
                m.output_tokens,
                m.wall_time_s
            );
        }
        out
    }
}

pub struct BatchResult {
    pub report: BatchReport,
    /// One entry per cell, in grid order.
    pub records: Vec<Result<MatchRecord, String>>,
}

fn run_cell(cell: &BatchCell, prompts: &PromptAssets, sim: &SimAssets) -> Result<MatchRecord, String> {
    let mut backend = cell.backend.open(&sim.game_data).map_err(|e| e.to_string())?;
    run_match(&cell.config, prompts, sim, backend.as_mut(), &cell.backend.label()).map_err(|e| e.to_string())
}

/// Runs every cell (in parallel on `jobs` threads, default: all cores) and
/// aggregates per (difficulty, ablation, backend, n, enforce). A failing match
/// counts as a loss with its error recorded.
pub fn run_batch(
    cells: &[BatchCell],
    prompts: &PromptAssets,
    sim: &SimAssets,
    jobs: Option<usize>,
) -> Result<BatchResult, RuntimeError> {
    if cells.is_empty() {
        return Err(RuntimeError::EmptyGrid);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| RuntimeError::Config(e.to_string()))?;
    let records: Vec<Result<MatchRecord, String>> =
        pool.install(|| cells.par_iter().map(|c| run_cell(c, prompts, sim)).collect());

    let mut matches = Vec::with_capacity(cells.len());
    let mut groups: BTreeMap<_, (BatchRow, CostMeter, u64)> = BTreeMap::new();
    for (cell, result) in cells.iter().zip(&records) {
        let (outcome, error, end, queries, cost, digest) = match result {
            Ok(r) => (r.outcome, None, r.end_time_s(), r.totals.queries, r.totals.cost, Some(r.digest())),
            Err(e) => (None, Some(e.clone()), 0, 0, CostMeter::default(), None),
        };
        let summary = MatchSummary {
            difficulty: cell.config.difficulty.name().into(),
            seed: cell.config.seed,
            ablation: cell.config.ablation.label().into(),
            backend: cell.backend.label(),
            n: cell.config.n,
            enforce: cell.config.enforce.to_string(),
            outcome,
            error,
            end_time_s: end,
            queries,
            cost,
            digest,
        };
        let (row, sum, q) = groups.entry(cell.group_key()).or_insert_with(|| {
            (
                BatchRow {
                    difficulty: summary.difficulty.clone(),
                    ablation: summary.ablation.clone(),
                    backend: summary.backend.clone(),
                    n: summary.n,
                    enforce: summary.enforce.clone(),
                    games: 0,
                    wins: 0,
                    losses: 0,
                    draws: 0,
                    errors: 0,
                    mean_per_query: CostMeter::default(),
                },
                CostMeter::default(),
                0,
            )
        });
        row.games += 1;
        if summary.error.is_some() {
            row.errors += 1;
            row.losses += 1;
        } else {
            match summary.outcome {
                Some(Outcome::Win) => row.wins += 1,
                Some(Outcome::Loss) => row.losses += 1,
                Some(Outcome::Draw) | None => row.draws += 1,
            }
        }
        sum.add(&summary.cost);
        *q += summary.queries;
        matches.push(summary);
    }
    let rows = groups
        .into_values()
        .map(|(mut row, sum, q)| {
            if q > 0 {
                row.mean_per_query =
                    CostMeter::new(sum.prompt_tokens / q, sum.output_tokens / q, sum.wall_time_s / q as f64);
            }
            row
        })
        .collect();
    Ok(BatchResult { report: BatchReport { matches, rows }, records })
}
