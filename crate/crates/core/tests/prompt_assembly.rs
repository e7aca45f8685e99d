use std::path::PathBuf;

use hep_core::action_grammar::ActionToken;
use hep_core::prompt_kit::*;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a frozen file. `HEP_BLESS=1` rewrites it instead.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("HEP_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {name}"));
    assert!(expected == actual, "{name} differs from the golden file");
}

#[test]
fn full_system_prompt_matches_golden() {
    let assets = PromptAssets::bundled();
    check_golden("system_prompt_full.txt", &assemble_system_prompt(&assets, AblationConfig::FULL));
}

#[test]
fn ablated_system_prompts_match_golden() {
    let assets = PromptAssets::bundled();
    check_golden("system_prompt_no_etp.txt", &assemble_system_prompt(&assets, AblationConfig::NO_ETP));
    check_golden("system_prompt_no_hdp.txt", &assemble_system_prompt(&assets, AblationConfig::NO_HDP));
}

#[test]
fn carrier_card_matches_golden() {
    let assets = PromptAssets::bundled();
    let card = assets.tactics.get("Carrier tactic").expect("bundled Carrier card");
    check_golden("carrier_card.txt", &render_tactic(card));
}

#[test]
fn full_segments_are_ordered_and_contiguous() {
    let assets = PromptAssets::bundled();
    let sp = assemble_segments(&assets, AblationConfig::FULL);
    let order: Vec<Segment> = sp.segments.iter().map(|(s, _)| *s).collect();
    assert_eq!(order, [Segment::Role, Segment::Tactics, Segment::Decision, Segment::ActionLibrary]);
    for pair in sp.segments.windows(2) {
        assert!(pair[0].1.start < pair[1].1.start);
        assert_eq!(pair[0].1.end + 1, pair[1].1.start);
        assert_eq!(&sp.text[pair[0].1.end..pair[1].1.start], "\n");
    }
    assert_eq!(sp.segments[0].1.start, 0);
    assert_eq!(sp.segments.last().unwrap().1.end, sp.text.len());

    let first = |needle: &str| sp.text.find(needle).unwrap();
    let role = first(&assets.role_prompt);
    let tactics = first(&render_etp_block(&assets.tactics));
    let hdp = first(&assets.hdp_text);
    let lib = first(&assets.action_library_text);
    assert!(role < tactics && tactics < hdp && hdp < lib);
}

#[test]
fn ablations_drop_exactly_their_block() {
    let assets = PromptAssets::bundled();
    let full = assemble_segments(&assets, AblationConfig::FULL);
    let no_etp = assemble_segments(&assets, AblationConfig::NO_ETP);
    let no_hdp = assemble_segments(&assets, AblationConfig::NO_HDP);

    assert!(no_etp.segment(Segment::Tactics).is_none());
    assert_eq!(no_etp.segment(Segment::Role), full.segment(Segment::Role));
    assert_eq!(no_etp.segment(Segment::Decision), full.segment(Segment::Decision));
    assert_eq!(no_etp.segment(Segment::ActionLibrary), full.segment(Segment::ActionLibrary));
    let expected = [&assets.role_prompt, &assets.hdp_text, &assets.action_library_text].map(String::as_str).join("\n");
    assert_eq!(no_etp.text, expected);

    assert_eq!(no_hdp.segment(Segment::Tactics), full.segment(Segment::Tactics));
    assert_eq!(no_hdp.segment(Segment::Decision), Some(assets.hdp_ablated.as_str()));
    assert!(!no_hdp.text.contains(&assets.hdp_text));
    let expected = [
        assets.role_prompt.as_str(),
        &render_etp_block(&assets.tactics),
        &assets.hdp_ablated,
        &assets.action_library_text,
    ]
    .join("\n");
    assert_eq!(no_hdp.text, expected);
}

#[test]
fn ablated_hdp_keeps_timing_knowledge_but_not_priority_layer() {
    let assets = PromptAssets::bundled();
    let text = assets.hdp_ablated.to_lowercase();
    assert!(text.contains("nexus"));
    assert!(text.contains("assimilator"));
    assert!(!assets.hdp_ablated.contains("Priority"));
    assert!(assets.hdp_text.contains("Priority"));
}

#[test]
fn full_prompt_is_longest() {
    let assets = PromptAssets::bundled();
    let len = |a| assemble_system_prompt(&assets, a).len();
    assert!(len(AblationConfig::FULL) > len(AblationConfig::NO_ETP));
    assert!(len(AblationConfig::FULL) > len(AblationConfig::NO_HDP));
}

#[test]
fn every_library_token_is_listed() {
    let assets = PromptAssets::bundled();
    for token in ActionToken::ALL {
        assert!(assets.action_library_text.contains(token.surface()), "{token} missing");
    }
    assert_eq!(assets.action_library_text, hep_core::action_grammar::library_listing());
}

#[test]
fn messages_follow_the_four_part_shape() {
    let assets = PromptAssets::bundled();
    for ablation in [AblationConfig::FULL, AblationConfig::NO_ETP, AblationConfig::NO_HDP] {
        let msgs = build_messages("obs", &assets, ablation).unwrap();
        let roles: Vec<Role> = msgs.iter().map(|m| m.role).collect();
        assert_eq!(roles, [Role::System, Role::User, Role::Assistant, Role::User]);
        assert_eq!(msgs[0].content, assemble_system_prompt(&assets, ablation));
        assert_eq!(msgs[1].content, assets.example_input);
        assert_eq!(msgs[2].content, example_output_for(&assets, ablation));
        assert_eq!(msgs[3].content, "obs");
        assert_eq!(msgs, build_messages("obs", &assets, ablation).unwrap());
    }
    assert_eq!(build_messages("", &assets, AblationConfig::FULL), Err(PromptError::EmptyObservation));
    let none = AblationConfig { include_etp: false, include_hdp: false };
    assert_eq!(build_messages("obs", &assets, none), Err(PromptError::UnsupportedAblation));
}

#[test]
fn example_outputs_match_their_ablation() {
    let assets = PromptAssets::bundled();
    assert!(assets.example_output.contains("Current Tactic:"));
    assert!(assets.example_output.contains("Priority:"));
    assert!(!assets.example_output_ablated_etp.contains("Current Tactic:"));
    assert!(assets.example_output_ablated_etp.contains("Priority:"));
    assert!(assets.example_output_ablated_hdp.contains("Current Tactic:"));
    assert!(!assets.example_output_ablated_hdp.contains("Priority:"));
    assert!(assets.example_input.starts_with("Game time:"));
}

#[test]
fn load_assets_matches_bundled_and_reports_missing_files() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/prompts");
    assert_eq!(load_assets(&dir).unwrap(), PromptAssets::bundled());

    let tmp = tempfile::tempdir().unwrap();
    for (_, file) in ASSET_FILES.iter().skip(1) {
        std::fs::copy(dir.join(file), tmp.path().join(file)).unwrap();
    }
    let err = load_assets(tmp.path()).unwrap_err();
    assert!(matches!(err, PromptError::AssetMissing(_)), "{err:?}");
}

#[test]
fn malformed_tactics_are_rejected() {
    assert!(parse_tactics("preamble = \"p\"\nselection = \"s\"\n").is_err());
    let bad = "preamble = \"p\"\nselection = \"s\"\n[[tactic]]\nname = \"X\"\nkey_forces = [\"Banshee\"]\nkey_timing = \"t\"\napplicable_situation = \"a\"\n";
    assert!(parse_tactics(bad).is_err());
}
