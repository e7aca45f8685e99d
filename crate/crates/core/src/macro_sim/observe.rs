//! Text summary of the observable game state.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::data::{BuildingKind, GameDataConfig, TechKind, UnitKind};
use super::state::{GameState, JobItem};

/// `MM:SS`; minutes keep counting past 59.
pub fn clock(time_s: u64) -> String {
    format!("{:02}:{:02}", time_s / 60, time_s % 60)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildingLine {
    pub kind: BuildingKind,
    pub complete: u32,
    pub in_progress: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductionLine {
    pub producer: BuildingKind,
    pub item: JobItem,
    pub percent: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum ScoutStatus {
    Idle,
    EnRoute { arrives_at: u64 },
    Returning { back_at: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnemyIntel {
    pub scouted_at: u64,
    pub hatcheries: u32,
    pub drones: u32,
    pub army: Vec<(UnitKind, u32)>,
}

/// Everything the agent can see. Enemy details are present only while intel is fresh.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSnapshot {
    pub time_s: u64,
    pub minerals: u64,
    pub gas: u64,
    pub minerals_collected: u64,
    pub gas_collected: u64,
    pub supply_used: u32,
    pub supply_cap: u32,
    pub worker_supply: u32,
    pub army_supply: u32,
    pub mineral_workers: u32,
    pub gas_workers: u32,
    pub idle_workers: u32,
    pub scouting_workers: u32,
    pub buildings: Vec<BuildingLine>,
    pub units: Vec<(UnitKind, u32)>,
    pub production: Vec<ProductionLine>,
    pub research: Vec<(TechKind, u32)>,
    pub chronoboost_ready: u32,
    pub scout: ScoutStatus,
    pub enemy: Option<EnemyIntel>,
    pub recent_events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    pub snapshot: ObservationSnapshot,
}

pub fn snapshot(state: &GameState, cfg: &GameDataConfig) -> ObservationSnapshot {
    let (mineral_workers, gas_workers, idle_workers) = state.worker_assignment(cfg);
    let buildings = BuildingKind::ALL
        .iter()
        .filter(|&&k| k != BuildingKind::Hatchery)
        .filter_map(|&kind| {
            let total = state.total_count(kind);
            let complete = state.complete_count(kind);
            (total > 0).then_some(BuildingLine { kind, complete, in_progress: total - complete })
        })
        .collect();
    let units = UnitKind::PLAYER
        .iter()
        .filter_map(|&k| {
            let c = state.unit_count(k);
            (c > 0).then_some((k, c))
        })
        .collect();
    let production = state
        .buildings
        .iter()
        .flat_map(|b| {
            b.queue.iter().map(move |j| ProductionLine {
                producer: b.kind,
                item: j.item,
                percent: j.progress.percent(),
            })
        })
        .collect();
    let research = state.research.iter().map(|(&t, p)| (t, p.percent())).collect();
    let chronoboost_ready = state
        .buildings
        .iter()
        .filter(|b| b.kind == BuildingKind::Nexus && b.is_complete() && b.chrono_ready_at <= state.time_s)
        .count() as u32;
    let scout = match state.scout {
        Some(s) if state.time_s < s.arrives_at => ScoutStatus::EnRoute { arrives_at: s.arrives_at },
        Some(s) if state.time_s < s.returns_at => ScoutStatus::Returning { back_at: s.returns_at },
        _ => ScoutStatus::Idle,
    };
    let enemy = state.intel_visible().then(|| EnemyIntel {
        scouted_at: state.scouted_at.unwrap_or(0),
        hatcheries: state.enemy.bases.len() as u32,
        drones: state.enemy.workers,
        army: state.enemy.army.iter().map(|(&k, &c)| (k, c)).collect(),
    });
    ObservationSnapshot {
        time_s: state.time_s,
        minerals: state.minerals_bank,
        gas: state.gas_bank,
        minerals_collected: state.minerals_collected_total,
        gas_collected: state.gas_collected_total,
        supply_used: state.supply_used,
        supply_cap: state.supply_cap,
        worker_supply: state.worker_supply(cfg),
        army_supply: state.army_supply(cfg),
        mineral_workers,
        gas_workers,
        idle_workers,
        scouting_workers: u32::from(state.scout_away()),
        buildings,
        units,
        production,
        research,
        chronoboost_ready,
        scout,
        enemy,
        recent_events: state.recent_events.iter().map(ToString::to_string).collect(),
    }
}

fn none_if_empty(out: &mut String, empty: bool) {
    if empty {
        out.push_str("- none\n");
    }
}

pub fn render_text(s: &ObservationSnapshot) -> String {
    let mut out = String::new();
    // Writing into a String cannot fail.
    let _ = writeln!(out, "Game time: {}", clock(s.time_s));

    let _ = write!(
        out,
        "\nResources:\n- Minerals: {}\n- Gas: {}\n- Minerals collected: {}\n- Gas collected: {}\n",
        s.minerals, s.gas, s.minerals_collected, s.gas_collected
    );
    let _ = write!(
        out,
        "\nSupply:\n- Supply used: {}\n- Supply cap: {}\n- Worker supply: {}\n- Army supply: {}\n",
        s.supply_used, s.supply_cap, s.worker_supply, s.army_supply
    );
    let _ = write!(
        out,
        "\nWorkers:\n- On minerals: {}\n- On gas: {}\n- Idle: {}\n- Scouting: {}\n",
        s.mineral_workers, s.gas_workers, s.idle_workers, s.scouting_workers
    );

    out.push_str("\nBuildings:\n");
    for b in &s.buildings {
        let _ = writeln!(out, "- {}: {} complete, {} in progress", b.kind, b.complete, b.in_progress);
    }
    none_if_empty(&mut out, s.buildings.is_empty());

    out.push_str("\nUnits:\n");
    for (k, c) in &s.units {
        let _ = writeln!(out, "- {k}: {c}");
    }
    none_if_empty(&mut out, s.units.is_empty());

    out.push_str("\nIn production:\n");
    for p in &s.production {
        let _ = writeln!(out, "- {} at {}, {}%", p.item, p.producer, p.percent);
    }
    none_if_empty(&mut out, s.production.is_empty());

    out.push_str("\nResearch:\n");
    for (t, pct) in &s.research {
        let _ = writeln!(out, "- {t}, {pct}%");
    }
    none_if_empty(&mut out, s.research.is_empty());

    let _ = writeln!(out, "\nChronoboost available: {}", s.chronoboost_ready);
    let scouting = match s.scout {
        ScoutStatus::Idle => "no probe out".to_string(),
        ScoutStatus::EnRoute { arrives_at } => format!("probe en route, arrives {}", clock(arrives_at)),
        ScoutStatus::Returning { back_at } => format!("probe returning, back {}", clock(back_at)),
    };
    let _ = writeln!(out, "Scouting: {scouting}");

    if let Some(e) = &s.enemy {
        let _ = write!(
            out,
            "\nEnemy intel (scouted {}):\n- Hatcheries: {}\n- Drones: {}\n",
            clock(e.scouted_at),
            e.hatcheries,
            e.drones
        );
        for (k, c) in &e.army {
            let _ = writeln!(out, "- {k}: {c}");
        }
    }

    out.push_str("\nRecent events:\n");
    for ev in &s.recent_events {
        let _ = writeln!(out, "- {ev}");
    }
    none_if_empty(&mut out, s.recent_events.is_empty());
    out
}

pub fn render_observation(state: &GameState, cfg: &GameDataConfig) -> Observation {
    let snapshot = snapshot(state, cfg);
    Observation { text: render_text(&snapshot), snapshot }
}
