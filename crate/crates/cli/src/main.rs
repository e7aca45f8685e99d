use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hep_core::action_grammar::library_listing;
use hep_core::agent_runtime::{run_batch, run_match, BatchCell, GridFile, MatchRecord, RuntimeConfig, SimAssets};
use hep_core::hierarchy_guard::EnforceMode;
use hep_core::llm_backend::{BackendConfig, ChatBackend, LiveConfig, RecordingBackend, DEFAULT_API_KEY_ENV};
use hep_core::macro_sim::{DifficultyLevel, DifficultySchedules, GameDataConfig};
use hep_core::prompt_kit::{build_messages, load_assets, AblationConfig, PromptAssets};
use hep_core::telemetry::{compare_report, export_csv, export_jsonl, gnuplot_script, import_csv, Metric};

#[derive(Parser)]
#[command(name = "hep", version, about = "Macro-strategy agent driven by a chat model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Directory with prompt assets (default: bundled)
    #[arg(long, global = true)]
    assets: Option<PathBuf>,
    /// Game data TOML (default: bundled)
    #[arg(long, global = true)]
    game_data: Option<PathBuf>,
    /// Opponent schedules TOML (default: bundled)
    #[arg(long, global = true)]
    schedules: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct LiveArgs {
    /// Query an OpenAI-compatible endpoint instead of the configured backend
    #[arg(long)]
    live: bool,
    #[arg(long, requires = "live")]
    endpoint: Option<String>,
    #[arg(long, requires = "live")]
    model: Option<String>,
    /// Environment variable holding the API key
    #[arg(long, requires = "live", default_value = DEFAULT_API_KEY_ENV)]
    key_env: String,
}

impl LiveArgs {
    fn backend(&self) -> Result<Option<BackendConfig>> {
        if !self.live {
            return Ok(None);
        }
        let endpoint = self.endpoint.clone().ok_or_else(|| anyhow!("--live needs --endpoint"))?;
        let model = self.model.clone().ok_or_else(|| anyhow!("--live needs --model"))?;
        let mut cfg = LiveConfig::new(endpoint, model);
        cfg.api_key_env = self.key_env.clone();
        Ok(Some(BackendConfig::Live(cfg)))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Play one match and write its artifacts
    Play(PlayArgs),
    /// Run every cell of a grid file and print aggregate results
    Batch(BatchArgs),
    /// Run the prompt ablation grid and compare economies
    Ablate(AblateArgs),
    /// Compare two telemetry CSV files at checkpoint times
    Report(ReportArgs),
    /// Print the messages sent for one observation
    InspectPrompt(InspectArgs),
    /// Print the action library
    DumpActions,
}

#[derive(Args)]
struct PlayArgs {
    /// Tier name or number 4-7
    #[arg(long, default_value = "VeryHard")]
    difficulty: DifficultyLevel,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// full, no-etp or no-hdp
    #[arg(long, default_value = "full")]
    ablation: AblationConfig,
    /// scripted:<policy> or replay:<path>
    #[arg(long, default_value = "scripted:hep_oracle")]
    backend: BackendConfig,
    /// Ticks between queries
    #[arg(long, default_value_t = hep_core::agent_runtime::DEFAULT_N)]
    n: u32,
    /// on, off or report-only
    #[arg(long, default_value = "on")]
    enforce: EnforceMode,
    #[arg(long)]
    max_ticks: Option<u64>,
    /// Append every exchange to this transcript (replayable with replay:<path>)
    #[arg(long)]
    record_transcript: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    live: LiveArgs,
}

#[derive(Args)]
struct BatchArgs {
    grid: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    live: LiveArgs,
}

#[derive(Args)]
struct AblateArgs {
    /// Grid file (default: bundled VeryHard grid)
    #[arg(long, alias = "grid-file")]
    grid: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value = "a")]
    label_a: String,
    #[arg(long, default_value = "b")]
    label_b: String,
    /// Checkpoint times in seconds
    #[arg(long, value_delimiter = ',', default_value = "240,300,480,720,960")]
    at: Vec<u64>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long, default_value = "full")]
    ablation: AblationConfig,
    /// Observation text file (default: the bundled example input)
    #[arg(long, alias = "obs-file")]
    observation: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Play(a) => play(&cli.common, a),
        Command::Batch(a) => batch(&cli.common, a),
        Command::Ablate(a) => ablate(&cli.common, a),
        Command::Report(a) => report(a),
        Command::InspectPrompt(a) => inspect(&cli.common, a),
        Command::DumpActions => {
            print!("{}", library_listing());
            Ok(())
        }
    }
}

fn prompts(common: &Common) -> Result<PromptAssets> {
    match &common.assets {
        Some(dir) => Ok(load_assets(dir)?),
        None => Ok(PromptAssets::bundled()),
    }
}

fn sim_assets(common: &Common) -> Result<SimAssets> {
    let game_data = match &common.game_data {
        Some(p) => GameDataConfig::load(p)?,
        None => GameDataConfig::bundled(),
    };
    let schedules = match &common.schedules {
        Some(p) => DifficultySchedules::load(p)?,
        None => DifficultySchedules::bundled(),
    };
    Ok(SimAssets { game_data, schedules })
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn play(common: &Common, a: PlayArgs) -> Result<()> {
    let prompts = prompts(common)?;
    let sim = sim_assets(common)?;
    let mut config = RuntimeConfig::new(a.difficulty, a.seed);
    config.n = a.n;
    config.ablation = a.ablation;
    config.enforce = a.enforce;
    if let Some(m) = a.max_ticks {
        config.max_ticks = m;
    }
    let backend_cfg = match a.live.backend()? {
        Some(b) => b,
        None => a.backend.clone(),
    };
    let label = backend_cfg.label();
    let started = unix_now();
    let inner = backend_cfg.open(&sim.game_data)?;
    let mut backend: Box<dyn ChatBackend> = match &a.record_transcript {
        Some(path) => Box::new(RecordingBackend::new(inner, path)),
        None => inner,
    };
    let record = run_match(&config, &prompts, &sim, backend.as_mut(), &label)?;
    let summary = match_summary(&record);
    print!("{summary}");
    if let Some(dir) = &a.out_dir {
        write_match_dir(dir, &record, &summary, started)?;
    }
    Ok(())
}

fn match_summary(r: &MatchRecord) -> String {
    let outcome = r.outcome.map_or("unfinished".to_string(), |o| format!("{o:?}"));
    let mean = r.totals.mean_per_query();
    let compliant = r.queries.iter().filter(|q| q.report.compliant).count();
    let switch = r
        .telemetry
        .tactic_trace
        .windows(2)
        .find(|w| w[0].tactic != w[1].tactic)
        .map_or("none".to_string(), |w| format!("{}s -> {}", w[1].time_s, w[1].tactic.as_deref().unwrap_or("-")));
    format!(
        "difficulty: {}\nseed: {}\nprompt: {}\nbackend: {}\nn: {}\nenforce: {}\noutcome: {outcome}\nend time: {}s\n\
         queries: {} ({} failed, {compliant} compliant)\n\
         tokens per query: {} total, {} prompt, {} output\nwall time per query: {:.3}s\n\
         first tactic switch: {switch}\ndigest: {}\n",
        r.config.difficulty.name(),
        r.config.seed,
        r.config.ablation.label(),
        r.backend,
        r.config.n,
        r.config.enforce,
        r.end_time_s(),
        r.totals.queries,
        r.totals.failed_queries,
        mean.total_tokens,
        mean.prompt_tokens,
        mean.output_tokens,
        mean.wall_time_s,
        r.digest()
    )
}

fn write_match_dir(dir: &Path, r: &MatchRecord, summary: &str, started: u64) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("summary.txt"), summary)?;
    export_csv(&r.telemetry.series, &dir.join("telemetry.csv"))?;
    export_jsonl(&r.queries, &dir.join("record.jsonl"))?;
    std::fs::write(dir.join("plot.gp"), gnuplot_script("telemetry.csv"))?;
    let meta = serde_json::json!({
        "started_unix_s": started,
        "finished_unix_s": unix_now(),
        "config": r.config,
        "backend": r.backend,
        "digest": r.digest(),
    });
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn override_backend(cells: &mut [BatchCell], live: Option<BackendConfig>) {
    if let Some(b) = live {
        for c in cells {
            c.backend = b.clone();
        }
    }
}

fn batch(common: &Common, a: BatchArgs) -> Result<()> {
    let prompts = prompts(common)?;
    let sim = sim_assets(common)?;
    let mut cells = GridFile::load(&a.grid)?.expand()?;
    override_backend(&mut cells, a.live.backend()?);
    let started = unix_now();
    let result = run_batch(&cells, &prompts, &sim, a.jobs)?;
    for m in &result.report.matches {
        if let Some(e) = &m.error {
            log::warn!("{} seed {} {}: {e}", m.difficulty, m.seed, m.backend);
        }
    }
    let text = result.report.render();
    print!("{text}");
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.txt"), &text)?;
        export_jsonl(&result.report.matches, &dir.join("matches.jsonl"))?;
        let meta =
            serde_json::json!({ "started_unix_s": started, "finished_unix_s": unix_now(), "cells": cells.len() });
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    }
    Ok(())
}

const COMPARE_AT: [u64; 4] = [240, 300, 480, 720];

fn ablate(common: &Common, a: AblateArgs) -> Result<()> {
    let prompts = prompts(common)?;
    let sim = sim_assets(common)?;
    let grid = match &a.grid {
        Some(p) => GridFile::load(p)?,
        None => GridFile::bundled_ablation(),
    };
    let cells = grid.expand()?;
    let result = run_batch(&cells, &prompts, &sim, a.jobs)?;
    let mut text = result.report.render();

    // Economy comparison on the first successful match of each prompt variant.
    let first = |ablation: AblationConfig| {
        cells.iter().zip(&result.records).find_map(|(c, r)| match r {
            Ok(rec) if c.config.ablation == ablation => Some(rec),
            _ => None,
        })
    };
    let metrics = [Metric::MineralsCollectedTotal, Metric::GasCollectedTotal, Metric::ArmySupply];
    match first(AblationConfig::FULL) {
        Some(full) => {
            for variant in [AblationConfig::NO_ETP, AblationConfig::NO_HDP] {
                match first(variant) {
                    Some(other) => {
                        let table = compare_report(
                            (full.config.ablation.label(), &full.telemetry.series),
                            (other.config.ablation.label(), &other.telemetry.series),
                            &COMPARE_AT,
                            &metrics,
                        )?;
                        text.push('\n');
                        text.push_str(&table.render());
                    }
                    None => log::warn!("no completed {} match; comparison skipped", variant.label()),
                }
            }
        }
        None => log::warn!("no completed full-prompt match; comparisons skipped"),
    }
    print!("{text}");
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.txt"), &text)?;
        export_jsonl(&result.report.matches, &dir.join("matches.jsonl"))?;
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let sa = import_csv(&a.a)?;
    let sb = import_csv(&a.b)?;
    let table = compare_report((&a.label_a, &sa), (&a.label_b, &sb), &a.at, &Metric::ALL)?;
    print!("{}", table.render());
    Ok(())
}

fn inspect(common: &Common, a: InspectArgs) -> Result<()> {
    let prompts = prompts(common)?;
    let ablation = a.ablation;
    let obs = match &a.observation {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => prompts.example_input.clone(),
    };
    let messages = build_messages(&obs, &prompts, ablation)?;
    if messages.len() != 4 {
        bail!("expected 4 messages, built {}", messages.len());
    }
    for (i, m) in messages.iter().enumerate() {
        println!("=== [{}] {} ({} bytes) ===", i + 1, m.role.as_str(), m.content.len());
        println!("{}", m.content);
    }
    Ok(())
}
