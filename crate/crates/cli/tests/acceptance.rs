//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails. Frozen values were produced by running the
//! bundled oracles against the bundled schedules.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hep_core::action_grammar::*;
use hep_core::agent_runtime::{run_match, MatchRecord, RuntimeConfig, SimAssets};
use hep_core::hierarchy_guard::{allowed_under_priority, enforce};
use hep_core::llm_backend::{estimate_tokens, BackendConfig, ChatBackend, LiveConfig, Policy};
use hep_core::macro_sim::*;
use hep_core::prompt_kit::*;
use hep_core::telemetry::{compare_report, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = Result<String, String>;

/// Name, check, runtime budget.
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// Frozen anchors (VeryHard, seed 7).
const MINERALS_300: (u64, u64) = (5337, 4720);
const GAS_480: (u64, u64) = (4188, 1734);
const HEP_CARRIERS_540: (u32, u32) = (2, 3);
const RESEARCH_960: (usize, usize) = (4, 1);
const SWITCH_TICK: u64 = 240;
const ABLATION_SEEDS: usize = 3;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden")
}

fn play(level: DifficultyLevel, seed: u64, policy: Policy, max_ticks: Option<u64>) -> MatchRecord {
    let sim = SimAssets::bundled();
    let mut cfg = RuntimeConfig::new(level, seed);
    if let Some(m) = max_ticks {
        cfg.max_ticks = m;
    }
    let backend = BackendConfig::scripted(policy);
    let mut b = backend.open(&sim.game_data).expect("scripted backend");
    run_match(&cfg, &PromptAssets::bundled(), &sim, b.as_mut(), &backend.label()).expect("match runs")
}

fn prompt_golden() -> Check {
    let assets = PromptAssets::bundled();
    let full = assemble_segments(&assets, AblationConfig::FULL);
    let golden = std::fs::read_to_string(golden_dir().join("system_prompt_full.txt")).map_err(|e| e.to_string())?;
    ensure!(full.text == golden, "full system prompt differs from the golden file");
    ensure!(full.segments.len() == 4, "{} segments", full.segments.len());
    ensure!(
        full.segments.windows(2).all(|w| w[0].1.start < w[1].1.start && w[0].1.end < w[1].1.start),
        "segment offsets not strictly increasing"
    );

    let etp = render_etp_block(&assets.tactics);
    let no_etp = assemble_system_prompt(&assets, AblationConfig::NO_ETP);
    let want = [assets.role_prompt.as_str(), &assets.hdp_text, &assets.action_library_text].join("\n");
    ensure!(no_etp == want, "no-etp variant is not full minus the tactic block");
    ensure!(!no_etp.contains(&etp), "no-etp variant still carries tactics");
    let no_hdp = assemble_system_prompt(&assets, AblationConfig::NO_HDP);
    let want = [assets.role_prompt.as_str(), &etp, &assets.hdp_ablated, &assets.action_library_text].join("\n");
    ensure!(no_hdp == want, "no-hdp variant is not full with the decision block ablated");
    ensure!(!no_hdp.contains(&assets.hdp_text), "no-hdp variant still carries the decision block");
    Ok(format!("{} bytes, 4 segments", full.text.len()))
}

const FILLER: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,:;!?()[]{}\n\t_-";

fn filler(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(0..=24);
    (0..len).map(|_| FILLER[rng.gen_range(0..FILLER.len())] as char).collect()
}

fn random_token(rng: &mut ChaCha8Rng) -> ActionToken {
    ActionToken::ALL[rng.gen_range(0..ActionToken::ALL.len())]
}

/// Every bracket-free `<...>` substring, in order of its opening position.
fn bracket_oracle(text: &str) -> Vec<ActionToken> {
    let idx: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    for &a in idx.iter().filter(|&&i| bytes[i] == b'<') {
        for &b in idx.iter().filter(|&&i| i > a && bytes[i] == b'>') {
            let inner = &text[a + 1..b];
            if inner.contains(['<', '>']) {
                continue;
            }
            if let Some(t) = ActionToken::from_canonical(&canonicalize(inner)) {
                out.push(t);
            }
        }
    }
    out
}

fn messy_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &["<", ">", " ", "\n", "TRAIN", "PROBE", "BUILD", "NEXUS", "probe", "<<", ">>", "é", "x"];
    let mut s = String::new();
    while s.chars().count() < 200 {
        if rng.gen_bool(0.15) {
            s.push_str(random_token(rng).surface());
        } else {
            s.push_str(PIECES[rng.gen_range(0..PIECES.len())]);
        }
        if rng.gen_bool(0.03) {
            break;
        }
    }
    s.chars().take(200).collect()
}

fn parser_fuzz() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf022);
    let legal = legal_actions();
    for case in 0..10_000 {
        let n = rng.gen_range(0..12);
        let mut text = String::new();
        let mut expected = Vec::new();
        for _ in 0..n {
            text.push_str(&filler(&mut rng));
            let t = random_token(&mut rng);
            text.push_str(t.surface());
            expected.push(t);
        }
        text.push_str(&filler(&mut rng));
        let (got, violations) = extract_actions_reported(&text);
        ensure!(got == expected, "embedding {case}: extracted {got:?}, expected {expected:?}");
        ensure!(violations.is_empty(), "embedding {case}: {violations:?}");
    }
    for case in 0..10_000 {
        let text = messy_text(&mut rng);
        let got = extract_actions(&text);
        ensure!(got.iter().all(|t| legal.contains(t)), "illegal token accepted in {text:?}");
        ensure!(got == bracket_oracle(&text), "oracle mismatch on case {case}: {text:?}");
    }
    Ok("10000 embeddings exact, 10000 inputs <= 200 chars match the oracle".into())
}

fn counts(tokens: &[ActionToken]) -> BTreeMap<ActionToken, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(*t).or_insert(0) += 1;
    }
    m
}

fn guard_exhaustive() -> Check {
    let mut cases: Vec<Vec<ActionToken>> = ActionToken::ALL.iter().map(|t| vec![*t]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a2d);
    for _ in 0..1000 {
        let len = rng.gen_range(0..=12);
        cases.push((0..len).map(|_| random_token(&mut rng)).collect());
    }
    let mut checked = 0;
    for priority in [None, Some(ActionToken::BuildNexus), Some(ActionToken::BuildAssimilator)] {
        for raw in &cases {
            let d = DecisionOutput {
                current_tactic: None,
                priority,
                raw_actions: raw.clone(),
                validated_actions: Vec::new(),
                raw_text: String::new(),
                violations: Vec::new(),
            };
            let (validated, report) = enforce(&d);
            let mut merged = counts(&report.kept);
            for (t, _) in &report.suppressed {
                *merged.entry(*t).or_insert(0) += 1;
            }
            ensure!(merged == counts(raw), "conservation: {priority:?} {raw:?}");
            match priority {
                None => ensure!(validated == *raw && report.compliant, "neutrality: {raw:?}"),
                Some(p) => {
                    let kept: Vec<ActionToken> = raw.iter().copied().filter(|t| allowed_under_priority(*t)).collect();
                    let exempt = |t: &ActionToken| {
                        matches!(
                            t,
                            ActionToken::BuildNexus
                                | ActionToken::BuildAssimilator
                                | ActionToken::TrainProbe
                                | ActionToken::BuildPylon
                        )
                    };
                    ensure!(validated.iter().all(exempt), "exemption: {p} {raw:?} -> {validated:?}");
                    let want = if raw.contains(&p) { kept } else { [vec![p], kept].concat() };
                    ensure!(validated == want, "exemption exactness: {p} {raw:?} -> {validated:?}");
                }
            }
            let again = DecisionOutput { raw_actions: validated.clone(), ..d };
            ensure!(enforce(&again).0 == validated, "idempotence: {priority:?} {raw:?}");
            checked += 1;
        }
    }
    Ok(format!("{checked} cases"))
}

fn check_state(s: &GameState) -> Result<(), String> {
    ensure!(s.minerals_collected_total - s.minerals_spent_total == s.minerals_bank, "minerals at {}s", s.time_s);
    ensure!(s.gas_collected_total - s.gas_spent_total == s.gas_bank, "gas at {}s", s.time_s);
    ensure!(s.supply_used <= s.supply_cap, "supply {}/{} at {}s", s.supply_used, s.supply_cap, s.time_s);
    Ok(())
}

fn sim_run(level: DifficultyLevel, seed: u64, random: bool) -> Result<GameState, String> {
    let cfg = GameDataConfig::bundled();
    let difficulty = DifficultySchedules::bundled().get(level).clone();
    let (mut env, _) = MacroEnv::new(cfg, difficulty, seed).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(level.number()) << 32));
    check_state(&env.state)?;
    while env.outcome().is_none() {
        let actions: Vec<ActionToken> = if random {
            (0..rng.gen_range(0..=3)).map(|_| random_token(&mut rng)).collect()
        } else {
            vec![ActionToken::EmptyAction]
        };
        env.step(&actions, 0).map_err(|e| e.to_string())?;
        check_state(&env.state)?;
        env.step(&[], 1).map_err(|e| e.to_string())?;
        check_state(&env.state)?;
    }
    Ok(env.state)
}

fn sim_properties() -> Check {
    let jobs: Vec<(DifficultyLevel, u64, bool)> = DifficultyLevel::ALL
        .iter()
        .flat_map(|&l| (0..100u64).flat_map(move |s| [(l, s, false), (l, s, true)]))
        .collect();
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(level, seed, random)| {
            let r = sim_run(level, seed, random).and_then(|a| {
                let b = sim_run(level, seed, random)?;
                if a == b {
                    Ok(())
                } else {
                    Err("runs differ".into())
                }
            });
            r.err().map(|e| format!("{level:?}/{seed}/random={random}: {e}"))
        })
        .collect();
    ensure!(failures.is_empty(), "{} failures, first: {}", failures.len(), failures[0]);

    for workers in [1u32, 6, 12, 16] {
        for rate in [1u32, 2, 5] {
            let mut cfg = GameDataConfig::bundled();
            cfg.economy.start_probes = workers;
            cfg.economy.mineral_rate_per_worker = rate;
            cfg.buildings.get_mut(&BuildingKind::Nexus).unwrap().supply_granted = 30;
            let difficulty = DifficultySchedules::bundled().get(DifficultyLevel::Hard).clone();
            let (mut state, _) = reset(&cfg, &difficulty, 1).map_err(|e| e.to_string())?;
            let start = state.minerals_bank;
            for t in 1..=100u64 {
                step(&mut state, &[ActionToken::EmptyAction], 1, &difficulty, &cfg).map_err(|e| e.to_string())?;
                let want = start + u64::from(workers * rate * cfg.economy.tick_seconds) * t;
                ensure!(state.minerals_bank == want, "income w={workers} r={rate} t={t}: {}", state.minerals_bank);
            }
        }
    }
    Ok(format!("{} runs twice each, income exact", jobs.len()))
}

fn cadence() -> Check {
    let sim = SimAssets::bundled();
    let prompts = PromptAssets::bundled();
    for n in [1u32, 2, 3, 5, 20] {
        for t in 1..=100u64 {
            let mut cfg = RuntimeConfig::new(DifficultyLevel::Hard, 1);
            cfg.n = n;
            cfg.max_ticks = t;
            let mut b = BackendConfig::scripted(Policy::NoopOracle).open(&sim.game_data).unwrap();
            let r = run_match(&cfg, &prompts, &sim, b.as_mut(), "noop").map_err(|e| e.to_string())?;
            let want = (0..t).filter(|x| x % u64::from(n) == 0).count() as u64;
            ensure!(r.totals.queries == want, "n={n} T={t}: {} queries, expected {want}", r.totals.queries);
        }
    }
    Ok("500 configurations".into())
}

fn orderings() -> Check {
    let level = DifficultyLevel::VeryHard;
    let hep = play(level, 7, Policy::HepOracle, None);
    let base = play(level, 7, Policy::BaselineOracle, None);
    let table = compare_report(
        ("hep", &hep.telemetry.series),
        ("baseline", &base.telemetry.series),
        &[300, 480],
        &[Metric::MineralsCollectedTotal, Metric::GasCollectedTotal],
    )
    .map_err(|e| e.to_string())?;
    let at = |rec: &MatchRecord, t: u64| *rec.telemetry.point_at(t).expect("sampled");
    let minerals = (at(&hep, 300).minerals_collected_total, at(&base, 300).minerals_collected_total);
    let gas = (at(&hep, 480).gas_collected_total, at(&base, 480).gas_collected_total);
    let rm = table.ratio(300, Metric::MineralsCollectedTotal).ok_or("mineral ratio undefined")?;
    let rg = table.ratio(480, Metric::GasCollectedTotal).ok_or("gas ratio undefined")?;
    ensure!(rm > 1.0 && rg > 1.0, "ratios {rm:.3} / {rg:.3}");
    ensure!(minerals == MINERALS_300, "minerals at 300s {minerals:?}, frozen {MINERALS_300:?}");
    ensure!(gas == GAS_480, "gas at 480s {gas:?}, frozen {GAS_480:?}");

    let carriers = |p: Policy| {
        let r = play(level, 7, p, Some(540));
        (
            r.final_state.time_s,
            r.final_state.unit_count(UnitKind::Carrier),
            r.final_state.in_training(UnitKind::Carrier),
        )
    };
    let (th, built, training) = carriers(Policy::HepOracle);
    let (tb, b_built, b_training) = carriers(Policy::BaselineOracle);
    ensure!(th == 540 && tb == 540, "match ended before 540s");
    ensure!(built + training >= 1, "hep has no Carrier at 540s");
    ensure!(b_built + b_training == 0, "baseline has a Carrier at 540s");
    ensure!((built, training) == HEP_CARRIERS_540, "hep carriers {built}+{training}, frozen {HEP_CARRIERS_540:?}");

    let research = |p: Policy| play(level, 7, p, Some(960)).final_state.completed_research();
    let (rh, rb) = (research(Policy::HepOracle), research(Policy::BaselineOracle));
    ensure!(rh >= 2 * rb && rh > 0, "research {rh} vs {rb}");
    ensure!((rh, rb) == RESEARCH_960, "research {rh} vs {rb}, frozen {RESEARCH_960:?}");
    Ok(format!(
        "minerals@300 {rm:.3}, gas@480 {rg:.3}, carriers@540 {built}+{training} vs 0, research@960 {rh} vs {rb}"
    ))
}

fn tactic_trace() -> Check {
    let r = play(DifficultyLevel::VeryHard, 7, Policy::HepOracle, None);
    let trace = &r.telemetry.tactic_trace;
    ensure!(!trace.is_empty(), "empty trace");
    let zs = Some("Zealot & Stalker tactic".to_string());
    let carrier = Some("Carrier tactic".to_string());
    ensure!(trace.iter().filter(|p| p.time_s < 240).all(|p| p.tactic == zs), "non Zealot & Stalker tactic before 240s");
    let switch = trace.iter().find(|p| p.tactic == carrier).ok_or("Carrier never declared")?;
    ensure!(switch.time_s <= 360, "switch at {}s", switch.time_s);
    ensure!(
        trace.iter().filter(|p| p.tick >= switch.tick).all(|p| p.tactic == carrier),
        "Carrier not held after {}s",
        switch.time_s
    );
    ensure!(switch.tick == SWITCH_TICK, "switch tick {}, frozen {SWITCH_TICK}", switch.tick);
    Ok(format!("switch to Carrier at tick {}", switch.tick))
}

fn ablation_harness() -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_hep")).arg("ablate").output().map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "ablate exited {:?}", out.status.code());
    let text = String::from_utf8_lossy(&out.stdout);
    let row = |label: &str| -> Result<(usize, usize), String> {
        let line =
            text.lines().find(|l| l.split_whitespace().nth(1) == Some(label)).ok_or(format!("no {label} row"))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        let wins = cols[5].split('/').next().unwrap().parse::<usize>().map_err(|e| e.to_string())?;
        let losses = cols[7].parse::<usize>().map_err(|e| e.to_string())?;
        Ok((wins, losses))
    };
    let full = row("full")?;
    let etp = row("no-etp")?;
    let hdp = row("no-hdp")?;
    ensure!(full == (ABLATION_SEEDS, 0), "full {full:?}");
    ensure!(etp == (0, ABLATION_SEEDS), "no-etp {etp:?}");
    ensure!(hdp == (0, ABLATION_SEEDS), "no-hdp {hdp:?}");
    let tables = text.lines().filter(|l| l.starts_with("full vs ")).count();
    ensure!(tables == 2, "{tables} comparison tables");
    Ok(format!("full {0}/{0} wins, no-etp 0/{0}, no-hdp 0/{0}", ABLATION_SEEDS))
}

fn cost_ordering() -> Check {
    let assets = PromptAssets::bundled();
    let cost = |a| estimate_tokens(&assemble_system_prompt(&assets, a));
    let (full, etp, hdp) = (cost(AblationConfig::FULL), cost(AblationConfig::NO_ETP), cost(AblationConfig::NO_HDP));
    ensure!(full > etp && full > hdp, "full {full}, no-etp {etp}, no-hdp {hdp}");
    Ok(format!("full {full} > no-etp {etp}, no-hdp {hdp} tokens"))
}

/// Needs HEP_LIVE_ENDPOINT, HEP_LIVE_MODEL and the key in HEP_API_KEY.
fn live_contract() -> Option<Check> {
    let endpoint = std::env::var("HEP_LIVE_ENDPOINT").ok()?;
    Some((|| {
        let model = std::env::var("HEP_LIVE_MODEL").map_err(|_| "HEP_LIVE_MODEL not set")?;
        let backend = BackendConfig::Live(LiveConfig::new(endpoint, model));
        let mut b = backend.open(&GameDataConfig::bundled()).map_err(|e| e.to_string())?;
        let assets = PromptAssets::bundled();
        let messages =
            build_messages(&assets.example_input, &assets, AblationConfig::FULL).map_err(|e| e.to_string())?;
        let (text, meter) = b.chat(&messages).map_err(|e| e.to_string())?;
        ensure!(!text.trim().is_empty(), "empty response");
        let d = parse_decision(&text, assets.tactics.names());
        ensure!(meter.total_tokens == meter.prompt_tokens + meter.output_tokens, "meter identity broken");
        Ok(format!("{} actions parsed, {} tokens", d.raw_actions.len(), meter.total_tokens))
    })())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("prompt-golden", prompt_golden, Some(Duration::from_secs(1))),
        ("parser-fuzz", parser_fuzz, Some(Duration::from_secs(30))),
        ("hierarchy-guard", guard_exhaustive, Some(Duration::from_secs(10))),
        ("sim-properties", sim_properties, Some(Duration::from_secs(120))),
        ("loop-cadence", cadence, Some(Duration::from_secs(5))),
        ("economy-orderings", orderings, Some(Duration::from_secs(60))),
        ("tactic-trace", tactic_trace, None),
        ("ablation-harness", ablation_harness, None),
        ("cost-ordering", cost_ordering, None),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let mut result = run();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(b)) = (&result, budget) {
            if elapsed > b {
                result = Err(format!("took {:.2}s, budget {}s", elapsed.as_secs_f64(), b.as_secs()));
            }
        }
        match result {
            Ok(detail) => println!("PASS {name} ({:.2}s): {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({:.2}s): {why}", elapsed.as_secs_f64());
            }
        }
    }
    match live_contract() {
        None => println!("SKIP live-contract: HEP_LIVE_ENDPOINT not set"),
        Some(Ok(detail)) => println!("PASS live-contract: {detail}"),
        Some(Err(why)) => {
            failed += 1;
            println!("FAIL live-contract: {why}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
