//! Legal action library and extraction of actions and named fields from free LLM text.
//!
//! The environment recognises actions by locating `<...>` segments in a reply and
//! matching them against a closed library. Everything in this module is total: no
//! reply, however malformed, produces an error.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Which layer of the hierarchical decision logic an action belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionGroup {
    Priority,
    Routine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCategory {
    Economy,
    Supply,
    Military,
    Technology,
    Building,
    Scouting,
    Attack,
    None,
}

macro_rules! action_library {
    ($($variant:ident => $surface:literal, $group:ident, $category:ident;)+) => {
        /// One member of the legal action library.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum ActionToken {
            $($variant,)+
        }

        impl ActionToken {
            pub const ALL: &'static [ActionToken] = &[$(ActionToken::$variant,)+];

            /// Canonical angle-bracket form, e.g. `<TRAIN PROBE>`.
            pub fn surface(self) -> &'static str {
                match self {
                    $(ActionToken::$variant => concat!("<", $surface, ">"),)+
                }
            }

            /// Surface without the brackets.
            pub fn name(self) -> &'static str {
                match self {
                    $(ActionToken::$variant => $surface,)+
                }
            }

            pub fn group(self) -> ActionGroup {
                match self {
                    $(ActionToken::$variant => ActionGroup::$group,)+
                }
            }

            pub fn category(self) -> ActionCategory {
                match self {
                    $(ActionToken::$variant => ActionCategory::$category,)+
                }
            }
        }
    };
}

action_library! {
    TrainProbe => "TRAIN PROBE", Routine, Economy;
    BuildPylon => "BUILD PYLON", Routine, Supply;
    BuildNexus => "BUILD NEXUS", Priority, Economy;
    BuildAssimilator => "BUILD ASSIMILATOR", Priority, Economy;
    BuildGateway => "BUILD GATEWAY", Routine, Building;
    BuildCyberneticsCore => "BUILD CYBERNETICSCORE", Routine, Building;
    BuildForge => "BUILD FORGE", Routine, Building;
    BuildStargate => "BUILD STARGATE", Routine, Building;
    BuildFleetBeacon => "BUILD FLEETBEACON", Routine, Building;
    TrainZealot => "TRAIN ZEALOT", Routine, Military;
    TrainStalker => "TRAIN STALKER", Routine, Military;
    TrainCarrier => "TRAIN CARRIER", Routine, Military;
    ResearchWarpgate => "RESEARCH WARPGATE", Routine, Technology;
    ResearchAirWeapon1 => "RESEARCH AIR WEAPON LEVEL 1", Routine, Technology;
    ResearchAirWeapon2 => "RESEARCH AIR WEAPON LEVEL 2", Routine, Technology;
    ResearchAirArmor1 => "RESEARCH AIR ARMOR LEVEL 1", Routine, Technology;
    ResearchAirArmor2 => "RESEARCH AIR ARMOR LEVEL 2", Routine, Technology;
    ChronoboostNexus => "CHRONOBOOST NEXUS", Routine, Economy;
    ScoutWithProbe => "SCOUT WITH PROBE", Routine, Scouting;
    Attack => "ATTACK", Routine, Attack;
    EmptyAction => "EMPTY ACTION", Routine, None;
}

impl ActionToken {
    /// Looks up a token by the canonical form of a bracket segment's content.
    pub fn from_canonical(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|t| t.name() == name)
    }

    pub fn is_priority(self) -> bool {
        self.group() == ActionGroup::Priority
    }
}

impl fmt::Display for ActionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.surface())
    }
}

/// The complete, immutable library.
pub fn legal_actions() -> BTreeSet<ActionToken> {
    ActionToken::ALL.iter().copied().collect()
}

/// One surface per line, newline-terminated. This is the exact content of the
/// bundled `action_library.txt` asset.
pub fn library_listing() -> String {
    let mut out = String::new();
    for token in ActionToken::ALL {
        out.push_str(token.surface());
        out.push('\n');
    }
    out
}

/// Trim, collapse internal whitespace runs to one space, ASCII-uppercase.
pub fn canonicalize(segment: &str) -> String {
    segment.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_uppercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Violation {
    /// A bracket segment that is not in the library.
    IllegalSegment(String),
    UnknownTactic(String),
    InvalidPriority(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IllegalSegment(s) => write!(f, "illegal action segment <{s}>"),
            Violation::UnknownTactic(s) => write!(f, "unknown tactic {s:?}"),
            Violation::InvalidPriority(s) => write!(f, "invalid priority {s:?}"),
        }
    }
}

/// Raw bracket segments in scan order: `<` opens (or restarts) a segment, `>` closes it.
fn bracket_segments(text: &str) -> Vec<&str> {
    let mut segments = Vec::new();
    let mut open: Option<usize> = None;
    for (idx, ch) in text.char_indices() {
        match ch {
            '<' => open = Some(idx + 1),
            '>' => {
                if let Some(start) = open.take() {
                    segments.push(&text[start..idx]);
                }
            }
            _ => {}
        }
    }
    segments
}

/// Extracts library tokens in order, also returning one violation per
/// non-matching segment.
pub fn extract_actions_reported(text: &str) -> (Vec<ActionToken>, Vec<Violation>) {
    let mut tokens = Vec::new();
    let mut violations = Vec::new();
    for segment in bracket_segments(text) {
        let canonical = canonicalize(segment);
        match ActionToken::from_canonical(&canonical) {
            Some(token) => tokens.push(token),
            None => violations.push(Violation::IllegalSegment(segment.to_string())),
        }
    }
    (tokens, violations)
}

pub fn extract_actions(text: &str) -> Vec<ActionToken> {
    extract_actions_reported(text).0
}

/// Named fields the decision parser understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    CurrentTactic,
    Priority,
}

impl Field {
    pub fn label(self) -> &'static str {
        match self {
            Field::CurrentTactic => "Current Tactic",
            Field::Priority => "Priority",
        }
    }
}

/// Finds the first `Name: value` line (case-insensitive name, optional angle
/// brackets around it) and returns the trimmed value. A `NONE` priority and
/// an empty value are both reported as absent.
pub fn extract_field(text: &str, field: Field) -> Option<String> {
    let label = field.label().to_ascii_lowercase();
    for line in text.lines() {
        let trimmed = line.trim_start();
        let Some((name, value)) = trimmed.split_once(':') else {
            continue;
        };
        let name = name.trim();
        let name = name.strip_prefix('<').and_then(|n| n.strip_suffix('>')).unwrap_or(name).trim();
        if name.to_ascii_lowercase() != label {
            continue;
        }
        let value = value.trim();
        if value.is_empty() {
            return None;
        }
        if field == Field::Priority && value.eq_ignore_ascii_case("none") {
            return None;
        }
        return Some(value.to_string());
    }
    None
}

/// Parsed LLM response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutput {
    pub current_tactic: Option<String>,
    pub priority: Option<ActionToken>,
    pub raw_actions: Vec<ActionToken>,
    pub validated_actions: Vec<ActionToken>,
    pub raw_text: String,
    pub violations: Vec<Violation>,
}

fn tactic_core(name: &str) -> String {
    let lowered = name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let stripped = lowered.strip_suffix("tactics").or_else(|| lowered.strip_suffix("tactic")).unwrap_or(&lowered);
    stripped.trim().to_string()
}

/// Matches a declared tactic against the knowledge base: case-insensitive,
/// optional "tactic" suffix, and the value may contain the name (so
/// "Carriers tactic" resolves to "Carrier tactic"). Longest name wins.
pub fn match_tactic<'a, I>(value: &str, known: I) -> Option<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let value_core = tactic_core(value);
    if value_core.is_empty() {
        return None;
    }
    let mut best: Option<(&str, usize)> = None;
    for name in known {
        let core = tactic_core(name);
        if core.is_empty() {
            continue;
        }
        if (value_core == core || value_core.contains(&core)) && best.is_none_or(|(_, len)| core.len() > len) {
            best = Some((name, core.len()));
        }
    }
    best.map(|(name, _)| name.to_string())
}

fn parse_priority(value: &str) -> Option<ActionToken> {
    let inner = value.trim();
    let inner = inner.strip_prefix('<').and_then(|v| v.strip_suffix('>')).unwrap_or(inner);
    ActionToken::from_canonical(&canonicalize(inner)).filter(|t| t.is_priority())
}

pub fn parse_decision<'a, I>(text: &str, known_tactics: I) -> DecisionOutput
where
    I: IntoIterator<Item = &'a str>,
{
    let (raw_actions, mut violations) = extract_actions_reported(text);

    let current_tactic = extract_field(text, Field::CurrentTactic).and_then(|value| {
        let matched = match_tactic(&value, known_tactics);
        if matched.is_none() {
            violations.push(Violation::UnknownTactic(value));
        }
        matched
    });

    let priority = extract_field(text, Field::Priority).and_then(|value| {
        let token = parse_priority(&value);
        if token.is_none() {
            violations.push(Violation::InvalidPriority(value));
        }
        token
    });

    DecisionOutput {
        current_tactic,
        priority,
        raw_actions,
        validated_actions: Vec::new(),
        raw_text: text.to_string(),
        violations,
    }
}
