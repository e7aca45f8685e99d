//! Upper-layer decision logic: while a priority is declared, only priority-group
//! actions plus Probe training and Pylon building go through.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action_grammar::{ActionGroup, ActionToken, DecisionOutput};

pub fn classify(token: ActionToken) -> ActionGroup {
    token.group()
}

/// Routine actions that stay allowed while a priority is active.
pub const EXEMPT: [ActionToken; 2] = [ActionToken::TrainProbe, ActionToken::BuildPylon];

pub fn allowed_under_priority(token: ActionToken) -> bool {
    token.is_priority() || EXEMPT.contains(&token)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnforceMode {
    /// Filter actions and execute the filtered list.
    #[default]
    On,
    /// No filtering and no analysis.
    Off,
    /// Analyse and report, but execute the raw actions unchanged.
    ReportOnly,
}

impl fmt::Display for EnforceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnforceMode::On => "on",
            EnforceMode::Off => "off",
            EnforceMode::ReportOnly => "report-only",
        })
    }
}

impl FromStr for EnforceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "on" => Ok(EnforceMode::On),
            "off" => Ok(EnforceMode::Off),
            "report-only" | "report_only" => Ok(EnforceMode::ReportOnly),
            other => Err(format!("unknown enforce mode {other:?} (on|off|report-only)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressReason {
    RoutineDuringPriority,
}

impl fmt::Display for SuppressReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("routine action while a priority is active")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub priority_active: bool,
    pub kept: Vec<ActionToken>,
    pub suppressed: Vec<(ActionToken, SuppressReason)>,
    /// The declared priority token was missing from the raw actions and was prepended.
    pub inserted: Option<ActionToken>,
    pub compliant: bool,
}

/// Filter then prepend. `kept` and `suppressed` partition the raw actions; the
/// validated list is `kept` with the declared priority in front when it was omitted.
pub fn enforce(decision: &DecisionOutput) -> (Vec<ActionToken>, HierarchyReport) {
    let Some(priority) = decision.priority else {
        let report = HierarchyReport {
            priority_active: false,
            kept: decision.raw_actions.clone(),
            suppressed: Vec::new(),
            inserted: None,
            compliant: true,
        };
        return (decision.raw_actions.clone(), report);
    };
    let mut kept = Vec::new();
    let mut suppressed = Vec::new();
    for &token in &decision.raw_actions {
        if allowed_under_priority(token) {
            kept.push(token);
        } else {
            suppressed.push((token, SuppressReason::RoutineDuringPriority));
        }
    }
    let omitted = !decision.raw_actions.contains(&priority);
    let mut validated = Vec::with_capacity(kept.len() + 1);
    if omitted {
        validated.push(priority);
    }
    validated.extend_from_slice(&kept);
    let report = HierarchyReport {
        priority_active: true,
        compliant: suppressed.is_empty() && !omitted,
        kept,
        suppressed,
        inserted: omitted.then_some(priority),
    };
    (validated, report)
}

/// Applies `enforce` according to `mode` and returns the actions to execute.
pub fn enforce_with_mode(decision: &DecisionOutput, mode: EnforceMode) -> (Vec<ActionToken>, HierarchyReport) {
    match mode {
        EnforceMode::On => enforce(decision),
        EnforceMode::ReportOnly => {
            let (_, report) = enforce(decision);
            (decision.raw_actions.clone(), report)
        }
        EnforceMode::Off => {
            let report = HierarchyReport {
                priority_active: decision.priority.is_some(),
                kept: decision.raw_actions.clone(),
                suppressed: Vec::new(),
                inserted: None,
                compliant: true,
            };
            (decision.raw_actions.clone(), report)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplianceSummary {
    pub steps: usize,
    pub priority_active_steps: usize,
    pub compliant_steps: usize,
    pub suppressed_actions: usize,
    pub inserted_priorities: usize,
    pub priority_active_fraction: f64,
    pub compliance: f64,
}

pub fn audit_trace<'a, I>(reports: I) -> ComplianceSummary
where
    I: IntoIterator<Item = &'a HierarchyReport>,
{
    let mut s = ComplianceSummary::default();
    for r in reports {
        s.steps += 1;
        s.priority_active_steps += usize::from(r.priority_active);
        s.compliant_steps += usize::from(r.compliant);
        s.suppressed_actions += r.suppressed.len();
        s.inserted_priorities += usize::from(r.inserted.is_some());
    }
    if s.steps > 0 {
        s.priority_active_fraction = s.priority_active_steps as f64 / s.steps as f64;
        s.compliance = s.compliant_steps as f64 / s.steps as f64;
    }
    s
}
