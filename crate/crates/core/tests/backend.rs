use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use hep_core::action_grammar::{parse_decision, ActionToken};
use hep_core::agent_runtime::{run_match, RuntimeConfig, SimAssets};
use hep_core::llm_backend::*;
use hep_core::macro_sim::{DifficultyLevel, MacroEnv};
use hep_core::prompt_kit::{build_messages, AblationConfig, Message, PromptAssets, Role};
use proptest::prelude::*;

fn entry(step: u64, response: &str) -> TranscriptEntry {
    TranscriptEntry {
        step,
        request_digest: format!("d{step}"),
        response: response.into(),
        prompt_tokens: 10 + step,
        output_tokens: 3,
        wall_time_s: 0.25,
    }
}

fn user(text: &str) -> Vec<Message> {
    vec![Message { role: Role::User, content: text.into() }]
}

#[test]
fn transcript_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let entries: Vec<TranscriptEntry> = (0..3).map(|i| entry(i, &format!("response {i}\n<TRAIN PROBE>"))).collect();
    for e in &entries {
        record(&path, e).unwrap();
    }
    assert_eq!(load_transcript(&path).unwrap(), entries);

    let mut replay =
        BackendConfig::Replay { path: path.clone() }.open(&hep_core::macro_sim::GameDataConfig::bundled()).unwrap();
    for e in &entries {
        let (text, meter) = replay.chat(&user("anything")).unwrap();
        assert_eq!(text, e.response);
        assert_eq!(meter, e.meter());
        assert_eq!(meter.total_tokens, meter.prompt_tokens + meter.output_tokens);
    }
    assert_eq!(replay.chat(&user("x")).unwrap_err(), BackendError::TranscriptExhausted);
}

#[test]
fn two_entry_transcript_is_exhausted_on_the_third_call() {
    let mut replay = ReplayBackend::from_entries(vec![entry(0, "a"), entry(1, "b")]);
    assert_eq!(replay.chat(&user("1")).unwrap().0, "a");
    assert_eq!(replay.chat(&user("2")).unwrap().0, "b");
    assert_eq!(replay.chat(&user("3")), Err(BackendError::TranscriptExhausted));
}

#[test]
fn missing_transcript_is_reported() {
    let err = load_transcript(std::path::Path::new("/nonexistent/t.jsonl")).unwrap_err();
    assert!(matches!(err, BackendError::TranscriptMissing(_)));
    assert!(matches!(
        ReplayBackend::open(std::path::Path::new("/nonexistent/t.jsonl")),
        Err(BackendError::TranscriptMissing(_))
    ));
}

#[test]
fn recorded_match_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("match.jsonl");
    let sim = SimAssets::bundled();
    let prompts = PromptAssets::bundled();
    let mut cfg = RuntimeConfig::new(DifficultyLevel::Hard, 3);
    cfg.max_ticks = 400;

    let inner = ScriptedBackend::new(Policy::HepOracle, sim.game_data.clone());
    let mut recorder = RecordingBackend::new(inner, &path);
    let live = run_match(&cfg, &prompts, &sim, &mut recorder, "same").unwrap();
    let transcript = load_transcript(&path).unwrap();
    assert_eq!(transcript.len() as u64, live.totals.queries);
    assert!(transcript.iter().enumerate().all(|(i, e)| e.step == i as u64));

    let mut replay = ReplayBackend::open(&path).unwrap();
    let replayed = run_match(&cfg, &prompts, &sim, &mut replay, "same").unwrap();
    assert_eq!(replayed, live);
    assert_eq!(replayed.digest(), live.digest());
}

#[test]
fn token_estimate_examples() {
    assert_eq!(estimate_tokens(""), 0);
    assert_eq!(estimate_tokens("12345678"), 2);
    assert_eq!(estimate_tokens("a"), 1);
    assert_eq!(estimate_tokens("é"), 1);
}

proptest! {
    #[test]
    fn token_estimate_is_ceiling_of_quarter_bytes(s in ".{0,300}") {
        let bytes = s.len() as u64;
        let mut expected = 0;
        while expected * 4 < bytes {
            expected += 1;
        }
        prop_assert_eq!(estimate_tokens(&s), expected);
    }

    #[test]
    fn token_estimate_concatenation_bound(a in ".{0,100}", b in ".{0,100}") {
        let joined = format!("{a}{b}");
        prop_assert!(estimate_tokens(&joined) <= estimate_tokens(&a) + estimate_tokens(&b) + 1);
        prop_assert!(estimate_tokens(&joined) >= estimate_tokens(&a).max(estimate_tokens(&b)));
    }

    #[test]
    fn meters_satisfy_the_total_identity(p in 0u64..1_000_000, o in 0u64..1_000_000) {
        let m = CostMeter::new(p, o, 0.5);
        prop_assert_eq!(m.total_tokens, p + o);
        let mut sum = m;
        sum.add(&CostMeter::new(o, p, 0.5));
        prop_assert_eq!(sum.total_tokens, sum.prompt_tokens + sum.output_tokens);
    }
}

#[test]
fn request_digest_depends_on_content() {
    assert_eq!(request_digest(&user("a")), request_digest(&user("a")));
    assert_ne!(request_digest(&user("a")), request_digest(&user("b")));
    assert_eq!(request_digest(&user("a")).len(), 64);
}

/// Observations of a real hep_oracle match at each query tick.
fn oracle_observations(level: DifficultyLevel, seed: u64, ticks: u64) -> Vec<String> {
    let sim = SimAssets::bundled();
    let difficulty = sim.schedules.get(level).clone();
    let (mut env, _) = MacroEnv::new(sim.game_data.clone(), difficulty, seed).unwrap();
    let mut out = Vec::new();
    let mut t = 0;
    while env.outcome().is_none() && t < ticks {
        let obs = env.observe().text;
        let response = Policy::HepOracle.respond(&obs, &sim.game_data);
        let decision = parse_decision(&response, PromptAssets::bundled().tactics.names());
        let (validated, _) = hep_core::hierarchy_guard::enforce(&decision);
        out.push(obs);
        env.step(&validated, 20).unwrap();
        t += 20;
    }
    out
}

#[test]
fn scripted_policies_answer_in_the_contract_format() {
    let sim = SimAssets::bundled();
    let assets = PromptAssets::bundled();
    let observations = oracle_observations(DifficultyLevel::VeryHard, 7, 900);
    assert!(observations.len() > 10);
    for policy in Policy::ALL {
        for obs in &observations {
            let response = policy.respond(obs, &sim.game_data);
            assert_eq!(response, policy.respond(obs, &sim.game_data), "{policy} is not deterministic");
            let d = parse_decision(&response, assets.tactics.names());
            assert!(d.violations.is_empty(), "{policy}: {:?}", d.violations);
            assert!(!d.raw_actions.is_empty(), "{policy} produced no actions");
            match policy {
                Policy::HepOracle | Policy::HepNoHdpOracle => assert!(d.current_tactic.is_some()),
                _ => assert!(d.current_tactic.is_none()),
            }
            if matches!(policy, Policy::HepNoHdpOracle | Policy::BaselineOracle | Policy::NoopOracle) {
                assert_eq!(d.priority, None, "{policy}");
            }
        }
    }
}

#[test]
fn hep_oracle_prioritises_the_early_expansion() {
    let sim = SimAssets::bundled();
    let observations = oracle_observations(DifficultyLevel::VeryHard, 7, 200);
    let first = observations
        .iter()
        .position(|o| Policy::HepOracle.respond(o, &sim.game_data).contains("Priority: BUILD NEXUS"))
        .expect("no expansion priority in the opening");
    let time_s = first as u64 * 20;
    assert!((40..=100).contains(&time_s), "expansion priority first at {time_s}s");

    let opening = &observations[0];
    assert!(!Policy::HepOracle.respond(opening, &sim.game_data).contains("Priority: BUILD NEXUS"));
}

#[test]
fn scripted_backend_answers_the_last_user_message() {
    let sim = SimAssets::bundled();
    let prompts = PromptAssets::bundled();
    let obs = oracle_observations(DifficultyLevel::Hard, 1, 1).remove(0);
    let msgs = build_messages(&obs, &prompts, AblationConfig::FULL).unwrap();
    let mut b = BackendConfig::scripted(Policy::HepOracle).open(&sim.game_data).unwrap();
    let (a, ma) = b.chat(&msgs).unwrap();
    let (c, mc) = b.chat(&msgs).unwrap();
    assert_eq!(a, c);
    assert_eq!(ma, mc);
    assert_eq!(a, Policy::HepOracle.respond(&obs, &sim.game_data));
    assert_eq!(ma, CostMeter::estimate(&msgs, &a, 0.0));
}

#[test]
fn noop_oracle_only_waits() {
    let sim = SimAssets::bundled();
    let obs = oracle_observations(DifficultyLevel::Hard, 1, 1).remove(0);
    let d = parse_decision(&Policy::NoopOracle.respond(&obs, &sim.game_data), ["x"]);
    assert_eq!(d.raw_actions, [ActionToken::EmptyAction]);
}

#[test]
fn backend_strings() {
    for p in Policy::ALL {
        let b: BackendConfig = format!("scripted:{p}").parse().unwrap();
        assert_eq!(b, BackendConfig::scripted(p));
        assert_eq!(b.label(), format!("scripted:{p}"));
    }
    assert_eq!(
        "replay:/tmp/x.jsonl".parse::<BackendConfig>().unwrap(),
        BackendConfig::Replay { path: "/tmp/x.jsonl".into() }
    );
    assert!("replay:".parse::<BackendConfig>().is_err());
    assert!("live:gpt".parse::<BackendConfig>().is_err());
}

/// Serves `responses` in order, one HTTP exchange per connection, and returns the request bodies.
fn mock_server(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut auth = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = line.trim().to_string();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(format!("{auth}\n{}", String::from_utf8(buf).unwrap()));
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (url, handle)
}

#[test]
fn live_backend_speaks_chat_completions() {
    std::env::set_var("HEP_TEST_MOCK_KEY", "sk-test");
    let ok = r#"{"choices":[{"message":{"role":"assistant","content":"Decision:\n<TRAIN PROBE>"}}],"usage":{"prompt_tokens":7,"completion_tokens":2}}"#;
    let (url, server) = mock_server(vec![(503, "{}".into()), (200, ok.into())]);
    let mut cfg = LiveConfig::new(url, "test-model");
    cfg.api_key_env = "HEP_TEST_MOCK_KEY".into();
    cfg.retries = 1;
    cfg.timeout_s = 10.0;
    let mut backend = LiveBackend::new(cfg).unwrap();
    let (text, meter) = backend.chat(&user("obs")).unwrap();
    assert_eq!(text, "Decision:\n<TRAIN PROBE>");
    assert_eq!((meter.prompt_tokens, meter.output_tokens, meter.total_tokens), (7, 2, 9));

    let bodies = server.join().unwrap();
    assert_eq!(bodies.len(), 2);
    let (auth, json) = bodies[1].split_once('\n').unwrap();
    assert_eq!(auth, "authorization: Bearer sk-test");
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["model"], "test-model");
    assert_eq!(v["messages"][0]["role"], "user");
    assert_eq!(v["messages"][0]["content"], "obs");
}

#[test]
fn live_backend_estimates_missing_usage_and_surfaces_failures() {
    std::env::set_var("HEP_TEST_MOCK_KEY2", "k");
    let ok = r#"{"choices":[{"message":{"content":"12345678"}}]}"#;
    let (url, server) = mock_server(vec![(200, ok.into()), (400, "{}".into())]);
    let mut cfg = LiveConfig::new(url, "m");
    cfg.api_key_env = "HEP_TEST_MOCK_KEY2".into();
    cfg.retries = 0;
    let mut backend = LiveBackend::new(cfg).unwrap();
    let msgs = user("abcd");
    let (_, meter) = backend.chat(&msgs).unwrap();
    assert_eq!((meter.prompt_tokens, meter.output_tokens), (1, 2));
    assert!(matches!(backend.chat(&msgs), Err(BackendError::BackendUnavailable(_))));
    server.join().unwrap();

    let mut cfg = LiveConfig::new("http://127.0.0.1:9", "m");
    cfg.api_key_env = "HEP_TEST_UNSET_KEY".into();
    assert!(matches!(LiveBackend::new(cfg), Err(BackendError::Config(_))));
}
