use hep_core::action_grammar::ActionToken;
use hep_core::agent_runtime::*;
use hep_core::hierarchy_guard::EnforceMode;
use hep_core::llm_backend::{BackendConfig, ChatBackend, FailingBackend, Policy};
use hep_core::macro_sim::{DifficultyLevel, Outcome};
use hep_core::prompt_kit::{AblationConfig, PromptAssets};

/// Frozen regression anchor for `hep_oracle` at VeryHard, seed 7, default settings.
const ANCHOR_DIGEST: &str = "3050349cfbbeae4cc7cfbc7a9644301c2345ee8b11568c26791c16166818f092";
const ANCHOR_END_S: u64 = 801;

fn play(cfg: &RuntimeConfig, backend: &mut dyn ChatBackend) -> MatchRecord {
    run_match(cfg, &PromptAssets::bundled(), &SimAssets::bundled(), backend, "test").unwrap()
}

fn play_labelled(cfg: &RuntimeConfig, policy: Policy) -> MatchRecord {
    let backend = BackendConfig::scripted(policy);
    let sim = SimAssets::bundled();
    let mut b = backend.open(&sim.game_data).unwrap();
    run_match(cfg, &PromptAssets::bundled(), &sim, b.as_mut(), &backend.label()).unwrap()
}

fn scripted(policy: Policy) -> Box<dyn ChatBackend> {
    BackendConfig::scripted(policy).open(&SimAssets::bundled().game_data).unwrap()
}

#[test]
fn query_cadence_is_exact() {
    for n in [1u32, 2, 3, 5, 20] {
        for t in 1..=100u64 {
            let mut cfg = RuntimeConfig::new(DifficultyLevel::Hard, 1);
            cfg.n = n;
            cfg.max_ticks = t;
            let record = play(&cfg, scripted(Policy::NoopOracle).as_mut());
            let expected: Vec<u64> = (0..t).filter(|x| x % u64::from(n) == 0).collect();
            let ticks: Vec<u64> = record.queries.iter().map(|q| q.tick).collect();
            assert_eq!(ticks, expected, "n={n} T={t}");
            assert_eq!(record.totals.queries, expected.len() as u64);
            assert_eq!(record.totals.queries, expected_queries(t, n));
            assert_eq!(record.telemetry.tactic_trace.len(), expected.len());
            assert_eq!(record.totals.ticks, t);
        }
    }
}

#[test]
fn three_tick_interval_example() {
    let mut cfg = RuntimeConfig::new(DifficultyLevel::Hard, 1);
    cfg.n = 3;
    cfg.max_ticks = 9;
    let record = play(&cfg, scripted(Policy::NoopOracle).as_mut());
    let ticks: Vec<u64> = record.queries.iter().map(|q| q.tick).collect();
    assert_eq!(ticks, [0, 3, 6]);
    assert_eq!(record.outcome, None);
}

#[test]
fn failing_backend_matches_noop() {
    for level in DifficultyLevel::ALL {
        for seed in [1u64, 9] {
            let cfg = RuntimeConfig::new(level, seed);
            let failing = play(&cfg, &mut FailingBackend);
            let noop = play(&cfg, scripted(Policy::NoopOracle).as_mut());
            assert_eq!(failing.final_state, noop.final_state, "{level:?}/{seed}");
            assert_eq!(failing.outcome, noop.outcome);
            assert_eq!(failing.telemetry.series, noop.telemetry.series);
            assert_eq!(failing.totals.failed_queries, failing.totals.queries);
            assert!(failing.queries.iter().all(|q| q.error.is_some()));
            assert!(failing.queries.iter().all(|q| q.decision.validated_actions == [ActionToken::EmptyAction]));
            assert!(failing.outcome.is_some());
        }
    }
}

#[test]
fn records_are_complete_and_consistent() {
    let cfg = RuntimeConfig::new(DifficultyLevel::Hard, 4);
    let record = play(&cfg, scripted(Policy::HepOracle).as_mut());
    assert!(record.outcome.is_some());
    assert_eq!(record.queries.len() as u64, expected_queries(record.totals.ticks, cfg.n));
    assert_eq!(record.telemetry.tactic_trace.len(), record.queries.len());
    assert_eq!(record.telemetry.series.len() as u64, record.totals.ticks + 1);
    for (q, tp) in record.queries.iter().zip(&record.telemetry.tactic_trace) {
        assert_eq!(q.tick % u64::from(cfg.n), 0);
        assert_eq!(q.tick, tp.tick);
        assert_eq!(q.decision.current_tactic, tp.tactic);
        assert_eq!(q.report.compliant, tp.compliant);
        assert_eq!(q.meter.total_tokens, q.meter.prompt_tokens + q.meter.output_tokens);
        assert!(!q.decision.raw_actions.is_empty());
        assert!(q.decision.current_tactic.is_some());
        assert!(q.error.is_none());
    }
    let cost: u64 = record.queries.iter().map(|q| q.meter.total_tokens).sum();
    assert_eq!(record.totals.cost.total_tokens, cost);
}

#[test]
fn unfinished_match_has_no_outcome() {
    let mut cfg = RuntimeConfig::new(DifficultyLevel::VeryHard, 7);
    cfg.max_ticks = 100;
    let record = play(&cfg, scripted(Policy::HepOracle).as_mut());
    assert_eq!(record.outcome, None);
    assert_eq!(record.end_time_s(), 100);
}

#[test]
fn anchor_match_is_reproducible() {
    let cfg = RuntimeConfig::new(DifficultyLevel::VeryHard, 7);
    let a = play_labelled(&cfg, Policy::HepOracle);
    let b = play_labelled(&cfg, Policy::HepOracle);
    assert_eq!(a.digest(), b.digest());
    assert_eq!(a.outcome, Some(Outcome::Win));
    assert_eq!(a.end_time_s(), ANCHOR_END_S);
    assert_eq!(a.digest(), ANCHOR_DIGEST);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = RuntimeConfig::new(DifficultyLevel::Hard, 1);
    cfg.n = 0;
    assert!(run_match(&cfg, &PromptAssets::bundled(), &SimAssets::bundled(), &mut FailingBackend, "x").is_err());
    let mut cfg = RuntimeConfig::new(DifficultyLevel::Hard, 1);
    cfg.max_ticks = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = RuntimeConfig::new(DifficultyLevel::Hard, 1);
    cfg.ablation = AblationConfig { include_etp: false, include_hdp: false };
    assert!(cfg.validate().is_err());
}

fn cell(level: DifficultyLevel, seed: u64, policy: Policy) -> BatchCell {
    BatchCell { config: RuntimeConfig::new(level, seed), backend: BackendConfig::scripted(policy) }
}

#[test]
fn batch_rows_and_determinism() {
    let cells: Vec<BatchCell> = (1..=12).map(|s| cell(DifficultyLevel::Hard, s, Policy::HepOracle)).collect();
    let prompts = PromptAssets::bundled();
    let sim = SimAssets::bundled();
    let a = run_batch(&cells, &prompts, &sim, Some(2)).unwrap();
    let b = run_batch(&cells, &prompts, &sim, Some(1)).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.report.rows.len(), 1);
    assert_eq!(a.report.rows[0].win_rate(), "12/12 (100%)");
    assert_eq!(a.report.matches.len(), 12);
    assert_eq!(a.records.len(), 12);
    assert!(a.report.render().contains("12/12 (100%)"));
}

#[test]
fn batch_errors_count_as_losses() {
    let mut bad = cell(DifficultyLevel::Hard, 1, Policy::NoopOracle);
    bad.backend = BackendConfig::Replay { path: "/nonexistent/transcript.jsonl".into() };
    let good = cell(DifficultyLevel::Hard, 1, Policy::NoopOracle);
    let r = run_batch(&[bad, good], &PromptAssets::bundled(), &SimAssets::bundled(), None).unwrap();
    let errors: u32 = r.report.rows.iter().map(|row| row.errors).sum();
    assert_eq!(errors, 1);
    let bad_row = r.report.rows.iter().find(|row| row.errors == 1).unwrap();
    assert_eq!(bad_row.losses, 1);
    assert!(r.report.matches.iter().any(|m| m.error.is_some() && m.digest.is_none()));

    assert!(matches!(
        run_batch(&[], &PromptAssets::bundled(), &SimAssets::bundled(), None),
        Err(RuntimeError::EmptyGrid)
    ));
}

#[test]
fn grid_files_expand_per_seed() {
    let grid = GridFile::parse(
        r#"
[[cell]]
difficulty = "Hard"
seeds = [1, 2]
backend = "scripted:hep_oracle"
n = 10
enforce_hierarchy = "report-only"

[[cell]]
difficulty = 6
seed = 3
ablation = "no-hdp"
backend = "scripted:hep_no_hdp_oracle"
max_ticks = 50
"#,
    )
    .unwrap();
    let cells = grid.expand().unwrap();
    assert_eq!(cells.len(), 3);
    assert_eq!(cells[0].config.seed, 1);
    assert_eq!(cells[1].config.seed, 2);
    assert_eq!(cells[0].config.n, 10);
    assert_eq!(cells[0].config.enforce, EnforceMode::ReportOnly);
    assert_eq!(cells[2].config.difficulty, DifficultyLevel::VeryHard);
    assert_eq!(cells[2].config.ablation, AblationConfig::NO_HDP);
    assert_eq!(cells[2].config.max_ticks, 50);
    assert_eq!(cells[2].backend, BackendConfig::scripted(Policy::HepNoHdpOracle));
}

#[test]
fn malformed_grids_are_rejected() {
    let no_seed = "[[cell]]\ndifficulty = \"Hard\"\nbackend = \"scripted:hep_oracle\"\n";
    assert!(GridFile::parse(no_seed).unwrap().expand().is_err());
    let unknown = "[[cell]]\ndifficulty = \"Hard\"\nseed = 1\nbackend = \"scripted:x\"\n";
    let err = GridFile::parse(unknown).unwrap().expand().unwrap_err();
    assert!(err.to_string().contains("cell 1"), "{err}");
    assert!(GridFile::parse("[[cell]]\ndifficulty = \"Hard\"\nseed = 1\ncolour = 3\n").is_err());
    assert!(GridFile::parse("[[cell]]\ndifficulty = 9\nseed = 1\nbackend = \"scripted:hep_oracle\"\n")
        .and_then(|g| g.expand())
        .is_err());
}

#[test]
fn bundled_ablation_grid_has_three_variants() {
    let cells = GridFile::bundled_ablation().expand().unwrap();
    let mut labels: Vec<&str> = cells.iter().map(|c| c.config.ablation.label()).collect();
    labels.dedup();
    assert_eq!(labels, ["full", "no-etp", "no-hdp"]);
    assert!(cells.iter().all(|c| c.config.difficulty == DifficultyLevel::VeryHard));
}
