use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::combat::{Army, CombatOutcome, Upgrades};
use super::data::{BuildingKind, GameDataConfig, TechKind, UnitKind};
use super::difficulty::DifficultyLevel;
use crate::action_grammar::ActionToken;

/// Progress units accrued per game second at normal speed. Chronoboost and
/// Warpgate each add one unit per second (a 1.5x rate).
pub const PROGRESS_PER_SECOND: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: u32,
    pub total: u32,
}

impl Progress {
    pub fn for_seconds(seconds: u32) -> Self {
        Self { done: 0, total: seconds * PROGRESS_PER_SECOND }
    }

    pub fn is_complete(&self) -> bool {
        self.done >= self.total
    }

    /// Floor percentage in 0..=100.
    pub fn percent(&self) -> u32 {
        (u64::from(self.done.min(self.total)) * 100 / u64::from(self.total)) as u32
    }

    pub fn advance(&mut self, units: u32) {
        self.done = (self.done + units).min(self.total);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "kind")]
pub enum JobItem {
    Unit(UnitKind),
    Research(TechKind),
}

impl fmt::Display for JobItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JobItem::Unit(u) => write!(f, "{u}"),
            JobItem::Research(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub item: JobItem,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Building {
    pub id: u32,
    pub kind: BuildingKind,
    pub progress: Progress,
    pub hp: u32,
    pub queue: VecDeque<Job>,
    /// Chronoboost active while `time_s < boost_until`.
    pub boost_until: u64,
    /// Nexus only: earliest time this Nexus may cast chronoboost.
    pub chrono_ready_at: u64,
}

impl Building {
    pub fn is_complete(&self) -> bool {
        self.progress.is_complete()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Win,
    Loss,
    Draw,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Win => "win",
            Outcome::Loss => "loss",
            Outcome::Draw => "draw",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scout {
    pub arrives_at: u64,
    pub returns_at: u64,
    pub arrived: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnemyBase {
    pub progress: Progress,
    pub hp: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedAttack {
    pub at: u64,
    pub pct: u32,
}

/// Scripted Zerg opponent. Resources are pooled and kept in hundredths so the
/// income multiplier stays in integer arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnemyState {
    pub level: DifficultyLevel,
    pub income_pct: u32,
    pub bank_centi: u64,
    pub collected_centi: u64,
    pub spent_centi: u64,
    pub workers: u32,
    pub worker_target: u32,
    pub bases: Vec<EnemyBase>,
    pub pending_hatcheries: u32,
    /// Ground weapon and carapace level of every enemy unit.
    #[serde(default)]
    pub upgrade_level: u32,
    pub larva: u32,
    /// Hatchery-seconds accumulated toward the next larva.
    pub larva_progress: u64,
    pub army: Army,
    pub production: Vec<UnitKind>,
    pub production_cursor: usize,
    pub script_cursor: usize,
    pub attack_plan: Vec<PlannedAttack>,
    pub attack_cursor: usize,
}

impl EnemyState {
    pub fn complete_bases(&self) -> u32 {
        self.bases.iter().filter(|b| b.progress.is_complete()).count() as u32
    }

    pub fn army_supply(&self, cfg: &GameDataConfig) -> u32 {
        self.army.iter().map(|(k, c)| cfg.unit(*k).supply * c).sum()
    }

    pub fn supply_used(&self, cfg: &GameDataConfig) -> u32 {
        self.workers * cfg.unit(UnitKind::Drone).supply + self.army_supply(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "detail")]
pub enum SkipReason {
    Unaffordable,
    MissingBuilding(BuildingKind),
    MissingTech(TechKind),
    SupplyBlocked,
    QueueFull,
    AlreadyResearched,
    LimitReached,
    NoArmy,
    NoWorkers,
    NoActiveQueue,
    OnCooldown,
    ScoutBusy,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::Unaffordable => f.write_str("not enough resources"),
            SkipReason::MissingBuilding(b) => write!(f, "requires {b}"),
            SkipReason::MissingTech(t) => write!(f, "requires {t}"),
            SkipReason::SupplyBlocked => f.write_str("supply blocked"),
            SkipReason::QueueFull => f.write_str("all producers busy"),
            SkipReason::AlreadyResearched => f.write_str("already researched or in progress"),
            SkipReason::LimitReached => f.write_str("limit reached"),
            SkipReason::NoArmy => f.write_str("no army"),
            SkipReason::NoWorkers => f.write_str("no workers"),
            SkipReason::NoActiveQueue => f.write_str("no active production to boost"),
            SkipReason::OnCooldown => f.write_str("chronoboost on cooldown"),
            SkipReason::ScoutBusy => f.write_str("scout already out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum EventKind {
    ActionSkipped { action: ActionToken, reason: SkipReason },
    ConstructionStarted { building: BuildingKind },
    ConstructionCompleted { building: BuildingKind },
    JobQueued { item: JobItem },
    JobCompleted { item: JobItem },
    Chronoboost { target: BuildingKind },
    ScoutArrived,
    EnemyWave { wave: Army, combat: CombatOutcome, siege_damage: u64 },
    PlayerAttack { army: Army, combat: CombatOutcome, siege_damage: u64 },
    BuildingDestroyed { building: BuildingKind },
    WorkersKilled { count: u32 },
    EnemyBaseDestroyed,
    JobCancelled { item: JobItem },
    UnitDeserted { unit: UnitKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time_s: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

fn army_text(army: &Army) -> String {
    if army.is_empty() {
        return "nothing".into();
    }
    army.iter().map(|(k, c)| format!("{c} {k}")).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for SimEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", super::observe::clock(self.time_s))?;
        match &self.kind {
            EventKind::ActionSkipped { action, reason } => {
                write!(f, "Skipped {action}: {reason}")
            }
            EventKind::ConstructionStarted { building } => write!(f, "Started {building}"),
            EventKind::ConstructionCompleted { building } => write!(f, "Completed {building}"),
            EventKind::JobQueued { item } => write!(f, "Queued {item}"),
            EventKind::JobCompleted { item } => write!(f, "Completed {item}"),
            EventKind::Chronoboost { target } => write!(f, "Chronoboost on {target}"),
            EventKind::ScoutArrived => f.write_str("Scout reached the enemy base"),
            EventKind::EnemyWave { wave, combat, siege_damage } => write!(
                f,
                "Enemy attack with {}; we lost {}; they lost {}; structure damage {siege_damage}",
                army_text(wave),
                army_text(&combat.defender_losses),
                army_text(&combat.attacker_losses)
            ),
            EventKind::PlayerAttack { army, combat, siege_damage } => write!(
                f,
                "Our attack with {}; we lost {}; they lost {}; damage to enemy bases {siege_damage}",
                army_text(army),
                army_text(&combat.attacker_losses),
                army_text(&combat.defender_losses)
            ),
            EventKind::BuildingDestroyed { building } => write!(f, "Lost {building}"),
            EventKind::WorkersKilled { count } => write!(f, "Lost {count} Probe(s)"),
            EventKind::EnemyBaseDestroyed => f.write_str("Destroyed an enemy Hatchery"),
            EventKind::JobCancelled { item } => write!(f, "Cancelled {item}"),
            EventKind::UnitDeserted { unit } => write!(f, "Lost unsupported {unit}"),
        }
    }
}

/// Full simulator world state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub time_s: u64,
    pub tick: u64,
    pub minerals_bank: u64,
    pub gas_bank: u64,
    pub minerals_collected_total: u64,
    pub gas_collected_total: u64,
    pub minerals_spent_total: u64,
    pub gas_spent_total: u64,
    pub supply_used: u32,
    pub supply_cap: u32,
    pub buildings: Vec<Building>,
    pub next_building_id: u32,
    pub units: BTreeMap<UnitKind, u32>,
    pub research: BTreeMap<TechKind, Progress>,
    pub scout: Option<Scout>,
    pub scouted_at: Option<u64>,
    pub intel_until: u64,
    pub enemy: EnemyState,
    pub rng_seed: u64,
    pub outcome: Option<Outcome>,
    /// Events since the last drain.
    pub events: Vec<SimEvent>,
    /// Bounded tail of events shown in observations.
    pub recent_events: VecDeque<SimEvent>,
}

impl GameState {
    pub fn unit_count(&self, kind: UnitKind) -> u32 {
        self.units.get(&kind).copied().unwrap_or(0)
    }

    /// Units of `kind` at the head of a production queue.
    pub fn in_training(&self, kind: UnitKind) -> u32 {
        let item = JobItem::Unit(kind);
        self.buildings.iter().filter(|b| b.queue.front().is_some_and(|j| j.item == item)).count() as u32
    }

    pub fn complete_count(&self, kind: BuildingKind) -> u32 {
        self.buildings.iter().filter(|b| b.kind == kind && b.is_complete()).count() as u32
    }

    pub fn total_count(&self, kind: BuildingKind) -> u32 {
        self.buildings.iter().filter(|b| b.kind == kind).count() as u32
    }

    pub fn research_done(&self, tech: TechKind) -> bool {
        self.research.get(&tech).is_some_and(Progress::is_complete)
    }

    pub fn completed_research(&self) -> usize {
        self.research.values().filter(|p| p.is_complete()).count()
    }

    pub fn upgrades(&self) -> Upgrades {
        let level =
            |one: TechKind, two: TechKind| u32::from(self.research_done(one)) + u32::from(self.research_done(two));
        Upgrades {
            air_weapons: level(TechKind::AirWeapons1, TechKind::AirWeapons2),
            air_armor: level(TechKind::AirArmor1, TechKind::AirArmor2),
            ground: 0,
        }
    }

    pub fn army(&self) -> Army {
        UnitKind::PLAYER_ARMY
            .iter()
            .filter_map(|&k| {
                let c = self.unit_count(k);
                (c > 0).then_some((k, c))
            })
            .collect()
    }

    pub fn worker_supply(&self, cfg: &GameDataConfig) -> u32 {
        self.unit_count(UnitKind::Probe) * cfg.unit(UnitKind::Probe).supply
    }

    pub fn army_supply(&self, cfg: &GameDataConfig) -> u32 {
        UnitKind::PLAYER_ARMY.iter().map(|&k| self.unit_count(k) * cfg.unit(k).supply).sum()
    }

    pub fn scout_away(&self) -> bool {
        self.scout.is_some_and(|s| self.time_s < s.returns_at)
    }

    pub fn intel_visible(&self) -> bool {
        self.time_s < self.intel_until
    }

    /// (mineral workers, gas workers, idle workers). Gas slots fill first.
    pub fn worker_assignment(&self, cfg: &GameDataConfig) -> (u32, u32, u32) {
        let e = &cfg.economy;
        let available = self.unit_count(UnitKind::Probe).saturating_sub(u32::from(self.scout_away()));
        let gas_slots = self.complete_count(BuildingKind::Assimilator) * e.workers_per_assimilator;
        let gas = available.min(gas_slots);
        let mineral_slots = self.complete_count(BuildingKind::Nexus) * e.mineral_workers_per_nexus;
        let minerals = (available - gas).min(mineral_slots);
        (minerals, gas, available - gas - minerals)
    }

    pub fn queued_units(&self) -> impl Iterator<Item = UnitKind> + '_ {
        self.buildings.iter().flat_map(|b| b.queue.iter()).filter_map(|j| match j.item {
            JobItem::Unit(u) => Some(u),
            JobItem::Research(_) => None,
        })
    }

    pub fn compute_supply_used(&self, cfg: &GameDataConfig) -> u32 {
        let alive: u32 = UnitKind::PLAYER.iter().map(|&k| self.unit_count(k) * cfg.unit(k).supply).sum();
        let queued: u32 = self.queued_units().map(|k| cfg.unit(k).supply).sum();
        alive + queued
    }

    pub fn compute_supply_cap(&self, cfg: &GameDataConfig) -> u32 {
        let granted: u32 =
            self.buildings.iter().filter(|b| b.is_complete()).map(|b| cfg.building(b.kind).supply_granted).sum();
        granted.min(cfg.economy.supply_cap_max)
    }

    pub fn has_base(&self) -> bool {
        self.total_count(BuildingKind::Nexus) > 0
    }

    /// Checks the conservation and supply invariants.
    pub fn check_invariants(&self, cfg: &GameDataConfig) -> Result<(), String> {
        if self.minerals_collected_total != self.minerals_bank + self.minerals_spent_total {
            return Err(format!(
                "mineral conservation: collected {} != bank {} + spent {}",
                self.minerals_collected_total, self.minerals_bank, self.minerals_spent_total
            ));
        }
        if self.gas_collected_total != self.gas_bank + self.gas_spent_total {
            return Err(format!(
                "gas conservation: collected {} != bank {} + spent {}",
                self.gas_collected_total, self.gas_bank, self.gas_spent_total
            ));
        }
        if self.supply_used > self.supply_cap {
            return Err(format!("supply {} over cap {}", self.supply_used, self.supply_cap));
        }
        if self.supply_used != self.compute_supply_used(cfg) {
            return Err("stale supply_used".into());
        }
        if self.supply_cap != self.compute_supply_cap(cfg) {
            return Err("stale supply_cap".into());
        }
        let e = &self.enemy;
        if e.collected_centi != e.bank_centi + e.spent_centi {
            return Err("enemy resource conservation".into());
        }
        Ok(())
    }
}
