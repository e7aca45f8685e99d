//! Aggregate Lanchester-style combat with integer arithmetic.
//!
//! Each round both sides deal `alive × power × round_seconds` simultaneously.
//! Damage from anti-air-capable squads spreads over every enemy squad in
//! proportion to its remaining hit-point pool; damage from ground-only squads
//! spreads over enemy ground squads only. Air squads therefore only take damage
//! from anti-air power.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::data::{GameDataConfig, UnitKind};

pub type Army = BTreeMap<UnitKind, u32>;

/// Upgrade levels of one side. Air levels modify air units, ground levels the rest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Upgrades {
    pub air_weapons: u32,
    pub air_armor: u32,
    #[serde(default)]
    pub ground: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Force {
    pub units: Army,
    pub upgrades: Upgrades,
}

impl Force {
    pub fn new(units: Army) -> Self {
        Self { units, upgrades: Upgrades::default() }
    }

    pub fn with_upgrades(units: Army, upgrades: Upgrades) -> Self {
        Self { units, upgrades }
    }

    pub fn is_empty(&self) -> bool {
        self.units.values().all(|&c| c == 0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombatOutcome {
    pub attacker_losses: Army,
    pub defender_losses: Army,
    pub rounds: u32,
}

#[derive(Debug, Clone)]
struct Squad {
    kind: UnitKind,
    hp_each: u64,
    power: u64,
    air: bool,
    anti_air: bool,
    initial: u32,
    pool: u64,
}

impl Squad {
    fn alive(&self) -> u64 {
        self.pool.div_ceil(self.hp_each)
    }
}

fn scaled(value: u32, pct_per_level: u32, level: u32) -> u64 {
    u64::from(value) * u64::from(100 + pct_per_level * level) / 100
}

/// Effective per-unit (hp, power) after upgrades.
pub fn effective_stats(kind: UnitKind, upgrades: Upgrades, cfg: &GameDataConfig) -> (u64, u64) {
    let stats = cfg.unit(kind);
    let pct = cfg.combat.upgrade_pct_per_level;
    if stats.air {
        (scaled(stats.hp, pct, upgrades.air_armor), scaled(stats.power, pct, upgrades.air_weapons))
    } else {
        (scaled(stats.hp, pct, upgrades.ground), scaled(stats.power, pct, upgrades.ground))
    }
}

fn squads(force: &Force, cfg: &GameDataConfig) -> Vec<Squad> {
    force
        .units
        .iter()
        .filter(|(_, &count)| count > 0)
        .map(|(&kind, &count)| {
            let stats = cfg.unit(kind);
            let (hp_each, power) = effective_stats(kind, force.upgrades, cfg);
            Squad {
                kind,
                hp_each,
                power,
                air: stats.air,
                anti_air: stats.anti_air,
                initial: count,
                pool: hp_each * u64::from(count),
            }
        })
        .collect()
}

/// Splits `amount` proportionally to `weights`; the floor remainder goes one
/// unit at a time to the earliest positive-weight entries.
fn allocate(amount: u64, weights: &[u64]) -> Vec<u64> {
    let total: u64 = weights.iter().sum();
    let mut out = vec![0; weights.len()];
    if total == 0 || amount == 0 {
        return out;
    }
    let mut given = 0;
    for (slot, &w) in out.iter_mut().zip(weights) {
        let share = (u128::from(amount) * u128::from(w) / u128::from(total)) as u64;
        *slot = share;
        given += share;
    }
    let mut rest = amount - given;
    while rest > 0 {
        for (slot, &w) in out.iter_mut().zip(weights) {
            if rest == 0 {
                break;
            }
            if w > 0 {
                *slot += 1;
                rest -= 1;
            }
        }
    }
    out
}

fn damage_dealt(from: &[Squad], to: &[Squad], round_seconds: u64) -> Vec<u64> {
    let mut anti_air = 0;
    let mut ground_only = 0;
    for s in from {
        let dmg = s.alive() * s.power * round_seconds;
        if s.anti_air {
            anti_air += dmg;
        } else {
            ground_only += dmg;
        }
    }
    let all_weights: Vec<u64> = to.iter().map(|s| s.pool).collect();
    let ground_weights: Vec<u64> = to.iter().map(|s| if s.air { 0 } else { s.pool }).collect();
    let a = allocate(anti_air, &all_weights);
    let g = allocate(ground_only, &ground_weights);
    a.iter().zip(&g).map(|(x, y)| x + y).collect()
}

fn all_dead(side: &[Squad]) -> bool {
    side.iter().all(|s| s.pool == 0)
}

fn losses(side: &[Squad]) -> Army {
    side.iter()
        .filter_map(|s| {
            let lost = s.initial - s.alive() as u32;
            (lost > 0).then_some((s.kind, lost))
        })
        .collect()
}

pub fn resolve_combat(attacker: &Force, defender: &Force, cfg: &GameDataConfig) -> CombatOutcome {
    let mut att = squads(attacker, cfg);
    let mut def = squads(defender, cfg);
    let round_seconds = u64::from(cfg.combat.round_seconds);
    let mut rounds = 0;

    while rounds < cfg.combat.round_cap && !all_dead(&att) && !all_dead(&def) {
        let to_def = damage_dealt(&att, &def, round_seconds);
        let to_att = damage_dealt(&def, &att, round_seconds);
        if to_def.iter().all(|&d| d == 0) && to_att.iter().all(|&d| d == 0) {
            break;
        }
        for (s, d) in def.iter_mut().zip(to_def) {
            s.pool = s.pool.saturating_sub(d);
        }
        for (s, d) in att.iter_mut().zip(to_att) {
            s.pool = s.pool.saturating_sub(d);
        }
        rounds += 1;
    }

    CombatOutcome { attacker_losses: losses(&att), defender_losses: losses(&def), rounds }
}

/// Damage a surviving force deals to structures during one siege window.
pub fn siege_damage(force: &Force, cfg: &GameDataConfig) -> u64 {
    force
        .units
        .iter()
        .map(|(&kind, &count)| effective_stats(kind, force.upgrades, cfg).1 * u64::from(count))
        .sum::<u64>()
        * u64::from(cfg.combat.siege_seconds)
}

pub fn subtract(army: &mut Army, losses: &Army) {
    for (kind, lost) in losses {
        if let Some(count) = army.get_mut(kind) {
            *count = count.saturating_sub(*lost);
        }
    }
    army.retain(|_, c| *c > 0);
}
