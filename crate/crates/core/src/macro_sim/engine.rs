use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::combat::{resolve_combat, siege_damage, subtract, Army, Force, Upgrades};
use super::data::{BuildingKind, GameDataConfig, TechKind, UnitKind};
use super::difficulty::{Difficulty, ScriptAction};
use super::observe::{render_observation, Observation};
use super::state::{
    Building, EnemyBase, EnemyState, EventKind, GameState, Job, JobItem, Outcome, PlannedAttack, Progress, Scout,
    SimEvent, SkipReason, PROGRESS_PER_SECOND,
};
use super::SimError;
use crate::action_grammar::ActionToken;

const CENTI: u64 = 100;

/// Commands the scripted opponent issues in one tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpponentCommand {
    SetWorkerTarget(u32),
    QueueHatcheries(u32),
    SetProduction(Vec<UnitKind>),
    BuildHatchery,
    TrainDrone,
    Train(UnitKind),
    Attack { pct: u32 },
    SetUpgrade(u32),
}

impl OpponentCommand {
    pub fn is_attack(&self) -> bool {
        matches!(self, OpponentCommand::Attack { .. })
    }
}

fn attack_plan(difficulty: &Difficulty, seed: u64, time_cap: u64, rng: &mut ChaCha8Rng) -> Vec<PlannedAttack> {
    let _ = seed;
    let jitter = difficulty.wave_jitter_s as i64;
    let mut plan = Vec::new();
    for entry in &difficulty.script {
        let Some(pct) = entry.attack_pct else { continue };
        let mut at = entry.at;
        loop {
            let offset = if jitter > 0 { rng.gen_range(-jitter..=jitter) } else { 0 };
            let when = (at as i64 + offset).max(1) as u64;
            plan.push(PlannedAttack { at: when, pct });
            match entry.every {
                Some(period) if at + period < time_cap => at += period,
                _ => break,
            }
        }
    }
    plan.sort_by_key(|p| p.at);
    plan
}

/// Canonical opening: one Nexus, the starting Probes, 50 minerals, time 0.
pub fn reset(cfg: &GameDataConfig, difficulty: &Difficulty, seed: u64) -> Result<(GameState, Observation), SimError> {
    cfg.validate()?;
    for entry in &difficulty.script {
        entry.action()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(difficulty.level.number()) << 56));
    let jitter = difficulty.income_jitter_pct as i64;
    let income_offset = if jitter > 0 { rng.gen_range(-jitter..=jitter) } else { 0 };
    let income_pct = (i64::from(difficulty.income_pct) + income_offset).max(1) as u32;
    let plan = attack_plan(difficulty, seed, cfg.timing.time_cap_s, &mut rng);

    let nexus = cfg.building(BuildingKind::Nexus);
    let start = u64::from(cfg.economy.start_minerals);
    let hatch = cfg.building(BuildingKind::Hatchery);
    let enemy_start = u64::from(cfg.enemy.start_resources) * CENTI;

    let mut state = GameState {
        time_s: 0,
        tick: 0,
        minerals_bank: start,
        gas_bank: 0,
        minerals_collected_total: start,
        gas_collected_total: 0,
        minerals_spent_total: 0,
        gas_spent_total: 0,
        supply_used: 0,
        supply_cap: 0,
        buildings: vec![Building {
            id: 0,
            kind: BuildingKind::Nexus,
            progress: Progress {
                done: nexus.build_s * PROGRESS_PER_SECOND,
                total: nexus.build_s * PROGRESS_PER_SECOND,
            },
            hp: nexus.hp,
            queue: VecDeque::new(),
            boost_until: 0,
            chrono_ready_at: 0,
        }],
        next_building_id: 1,
        units: BTreeMap::from([(UnitKind::Probe, cfg.economy.start_probes)]),
        research: BTreeMap::new(),
        scout: None,
        scouted_at: None,
        intel_until: 0,
        enemy: EnemyState {
            level: difficulty.level,
            income_pct,
            bank_centi: enemy_start,
            collected_centi: enemy_start,
            spent_centi: 0,
            workers: cfg.enemy.start_workers,
            worker_target: cfg.enemy.start_workers,
            bases: vec![EnemyBase {
                progress: Progress {
                    done: hatch.build_s * PROGRESS_PER_SECOND,
                    total: hatch.build_s * PROGRESS_PER_SECOND,
                },
                hp: hatch.hp,
            }],
            pending_hatcheries: 0,
            upgrade_level: 0,
            larva: 0,
            larva_progress: 0,
            army: Army::new(),
            production: Vec::new(),
            production_cursor: 0,
            script_cursor: 0,
            attack_plan: plan,
            attack_cursor: 0,
        },
        rng_seed: seed,
        outcome: None,
        events: Vec::new(),
        recent_events: VecDeque::new(),
    };
    refresh_supply(&mut state, cfg);
    if state.supply_used > state.supply_cap {
        return Err(SimError::Config("opening supply exceeds the opening cap".into()));
    }
    let obs = render_observation(&state, cfg);
    Ok((state, obs))
}

fn refresh_supply(state: &mut GameState, cfg: &GameDataConfig) {
    state.supply_cap = state.compute_supply_cap(cfg);
    state.supply_used = state.compute_supply_used(cfg);
}

fn push_event(state: &mut GameState, cfg: &GameDataConfig, kind: EventKind) {
    let event = SimEvent { time_s: state.time_s, kind };
    state.recent_events.push_back(event.clone());
    while state.recent_events.len() > cfg.timing.recent_events {
        state.recent_events.pop_front();
    }
    state.events.push(event);
}

fn skip(state: &mut GameState, cfg: &GameDataConfig, action: ActionToken, reason: SkipReason) {
    log::debug!("t={} skipped {action}: {reason}", state.time_s);
    push_event(state, cfg, EventKind::ActionSkipped { action, reason });
}

fn can_afford(state: &GameState, minerals: u32, gas: u32) -> bool {
    state.minerals_bank >= u64::from(minerals) && state.gas_bank >= u64::from(gas)
}

fn spend(state: &mut GameState, minerals: u32, gas: u32) {
    state.minerals_bank -= u64::from(minerals);
    state.gas_bank -= u64::from(gas);
    state.minerals_spent_total += u64::from(minerals);
    state.gas_spent_total += u64::from(gas);
}

fn missing_building(state: &GameState, required: &[BuildingKind]) -> Option<BuildingKind> {
    required.iter().copied().find(|&k| state.complete_count(k) == 0)
}

/// Index of the complete producer of `kind` with the shortest queue.
fn pick_producer(state: &GameState, kind: BuildingKind, cfg: &GameDataConfig) -> Result<usize, SkipReason> {
    let mut best: Option<(usize, usize)> = None;
    let mut any = false;
    for (idx, b) in state.buildings.iter().enumerate() {
        if b.kind != kind || !b.is_complete() {
            continue;
        }
        any = true;
        if b.queue.len() >= cfg.economy.queue_limit as usize {
            continue;
        }
        if best.is_none_or(|(_, len)| b.queue.len() < len) {
            best = Some((idx, b.queue.len()));
        }
    }
    match best {
        Some((idx, _)) => Ok(idx),
        None if any => Err(SkipReason::QueueFull),
        None => Err(SkipReason::MissingBuilding(kind)),
    }
}

fn build(state: &mut GameState, cfg: &GameDataConfig, action: ActionToken, kind: BuildingKind) {
    let stats = cfg.building(kind);
    if let Some(missing) = missing_building(state, &stats.requires) {
        return skip(state, cfg, action, SkipReason::MissingBuilding(missing));
    }
    if state.unit_count(UnitKind::Probe) == 0 {
        return skip(state, cfg, action, SkipReason::NoWorkers);
    }
    let limit_hit = match kind {
        BuildingKind::Nexus => state.total_count(kind) >= cfg.economy.max_nexus,
        BuildingKind::Assimilator => {
            state.total_count(kind) >= state.complete_count(BuildingKind::Nexus) * cfg.economy.geysers_per_nexus
        }
        _ => false,
    };
    if limit_hit {
        return skip(state, cfg, action, SkipReason::LimitReached);
    }
    if !can_afford(state, stats.minerals, stats.gas) {
        return skip(state, cfg, action, SkipReason::Unaffordable);
    }
    spend(state, stats.minerals, stats.gas);
    let id = state.next_building_id;
    state.next_building_id += 1;
    state.buildings.push(Building {
        id,
        kind,
        progress: Progress::for_seconds(stats.build_s),
        hp: stats.hp,
        queue: VecDeque::new(),
        boost_until: 0,
        chrono_ready_at: 0,
    });
    push_event(state, cfg, EventKind::ConstructionStarted { building: kind });
}

fn train(state: &mut GameState, cfg: &GameDataConfig, action: ActionToken, unit: UnitKind) {
    let stats = cfg.unit(unit);
    if let Some(missing) = missing_building(state, &stats.requires) {
        return skip(state, cfg, action, SkipReason::MissingBuilding(missing));
    }
    let producer = match pick_producer(state, stats.producer, cfg) {
        Ok(idx) => idx,
        Err(reason) => return skip(state, cfg, action, reason),
    };
    if state.supply_used + stats.supply > state.supply_cap {
        return skip(state, cfg, action, SkipReason::SupplyBlocked);
    }
    if !can_afford(state, stats.minerals, stats.gas) {
        return skip(state, cfg, action, SkipReason::Unaffordable);
    }
    spend(state, stats.minerals, stats.gas);
    let item = JobItem::Unit(unit);
    state.buildings[producer].queue.push_back(Job { item, progress: Progress::for_seconds(stats.build_s) });
    state.supply_used += stats.supply;
    push_event(state, cfg, EventKind::JobQueued { item });
}

fn research(state: &mut GameState, cfg: &GameDataConfig, action: ActionToken, tech: TechKind) {
    let stats = cfg.tech(tech);
    if state.research.contains_key(&tech) {
        return skip(state, cfg, action, SkipReason::AlreadyResearched);
    }
    if let Some(missing) = missing_building(state, &stats.requires) {
        return skip(state, cfg, action, SkipReason::MissingBuilding(missing));
    }
    if let Some(&missing) = stats.requires_tech.iter().find(|&&t| !state.research_done(t)) {
        return skip(state, cfg, action, SkipReason::MissingTech(missing));
    }
    let producer = match pick_producer(state, stats.producer, cfg) {
        Ok(idx) => idx,
        Err(reason) => return skip(state, cfg, action, reason),
    };
    if !can_afford(state, stats.minerals, stats.gas) {
        return skip(state, cfg, action, SkipReason::Unaffordable);
    }
    spend(state, stats.minerals, stats.gas);
    let item = JobItem::Research(tech);
    let progress = Progress::for_seconds(stats.build_s);
    state.buildings[producer].queue.push_back(Job { item, progress });
    state.research.insert(tech, progress);
    push_event(state, cfg, EventKind::JobQueued { item });
}

fn remaining_work(b: &Building) -> u32 {
    b.queue.iter().map(|j| j.progress.total - j.progress.done).sum()
}

fn chronoboost(state: &mut GameState, cfg: &GameDataConfig, action: ActionToken) {
    let now = state.time_s;
    let caster = state
        .buildings
        .iter()
        .position(|b| b.kind == BuildingKind::Nexus && b.is_complete() && b.chrono_ready_at <= now);
    let Some(caster) = caster else {
        let reason = if state.complete_count(BuildingKind::Nexus) == 0 {
            SkipReason::MissingBuilding(BuildingKind::Nexus)
        } else {
            SkipReason::OnCooldown
        };
        return skip(state, cfg, action, reason);
    };
    // Longest remaining queue among unboosted producers; ties go to the oldest building.
    let target = state
        .buildings
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.queue.is_empty() && b.boost_until <= now)
        .max_by(|(ia, a), (ib, b)| remaining_work(a).cmp(&remaining_work(b)).then(ib.cmp(ia)))
        .map(|(i, _)| i);
    let Some(target) = target else {
        return skip(state, cfg, action, SkipReason::NoActiveQueue);
    };
    state.buildings[caster].chrono_ready_at = now + cfg.timing.chronoboost_cooldown_s;
    state.buildings[target].boost_until = now + cfg.timing.chronoboost_seconds;
    let kind = state.buildings[target].kind;
    push_event(state, cfg, EventKind::Chronoboost { target: kind });
}

fn scout(state: &mut GameState, cfg: &GameDataConfig, action: ActionToken) {
    if state.scout_away() {
        return skip(state, cfg, action, SkipReason::ScoutBusy);
    }
    if state.unit_count(UnitKind::Probe) == 0 {
        return skip(state, cfg, action, SkipReason::NoWorkers);
    }
    let travel = cfg.timing.scout_travel_s;
    state.scout =
        Some(Scout { arrives_at: state.time_s + travel, returns_at: state.time_s + 2 * travel, arrived: false });
}

fn enemy_upgrades(state: &GameState) -> Upgrades {
    Upgrades { ground: state.enemy.upgrade_level, ..Upgrades::default() }
}

fn enemy_force(state: &GameState) -> Force {
    Force::with_upgrades(state.enemy.army.clone(), enemy_upgrades(state))
}

fn player_force(state: &GameState) -> Force {
    Force::with_upgrades(state.army(), state.upgrades())
}

fn player_attack(state: &mut GameState, cfg: &GameDataConfig, action: ActionToken) {
    let army = state.army();
    if army.is_empty() {
        return skip(state, cfg, action, SkipReason::NoArmy);
    }
    let combat = resolve_combat(&player_force(state), &enemy_force(state), cfg);
    subtract(&mut state.enemy.army, &combat.defender_losses);
    for (kind, lost) in &combat.attacker_losses {
        *state.units.entry(*kind).or_insert(0) -= lost;
    }
    state.units.retain(|k, c| *c > 0 || *k == UnitKind::Probe);
    let mut damage = 0;
    if state.enemy.army.is_empty() && !state.army().is_empty() {
        damage = siege_damage(&player_force(state), cfg);
        damage_enemy_bases(state, cfg, damage);
    }
    push_event(state, cfg, EventKind::PlayerAttack { army, combat, siege_damage: damage });
    refresh_supply(state, cfg);
}

fn damage_enemy_bases(state: &mut GameState, cfg: &GameDataConfig, mut damage: u64) {
    while damage > 0 {
        let Some(base) = state.enemy.bases.last_mut() else { break };
        if u64::from(base.hp) <= damage {
            damage -= u64::from(base.hp);
            state.enemy.bases.pop();
            push_event(state, cfg, EventKind::EnemyBaseDestroyed);
        } else {
            base.hp -= damage as u32;
            damage = 0;
        }
    }
    let cap = cfg.enemy.workers_per_hatchery * state.enemy.bases.len() as u32;
    state.enemy.workers = state.enemy.workers.min(cap);
}

fn remove_building(state: &mut GameState, cfg: &GameDataConfig, idx: usize) {
    let b = state.buildings.remove(idx);
    for job in &b.queue {
        if let JobItem::Research(t) = job.item {
            state.research.remove(&t);
        }
    }
    push_event(state, cfg, EventKind::BuildingDestroyed { building: b.kind });
}

/// Structure damage from a surviving enemy wave: workers first, then
/// non-Nexus buildings newest first, then Nexuses newest first.
/// A share of the damage lands on workers, the rest (and whatever the workers
/// could not absorb) on structures: newest non-Nexus first, Nexus last.
fn damage_player_base(state: &mut GameState, cfg: &GameDataConfig, damage: u64) {
    let probe_hp = u64::from(cfg.unit(UnitKind::Probe).hp);
    let probes = u64::from(state.unit_count(UnitKind::Probe));
    let worker_share = damage * u64::from(cfg.combat.worker_damage_pct) / 100;
    let killed = probes.min(worker_share / probe_hp);
    if killed > 0 {
        state.units.insert(UnitKind::Probe, (probes - killed) as u32);
        push_event(state, cfg, EventKind::WorkersKilled { count: killed as u32 });
        drop_lost_scout(state);
    }
    let mut damage = damage - killed * probe_hp;
    if killed < probes {
        damage -= worker_share - killed * probe_hp;
    }
    while damage > 0 {
        let target = state
            .buildings
            .iter()
            .rposition(|b| b.kind != BuildingKind::Nexus)
            .or_else(|| state.buildings.len().checked_sub(1));
        let Some(idx) = target else { break };
        let hp = u64::from(state.buildings[idx].hp);
        if hp <= damage {
            damage -= hp;
            remove_building(state, cfg, idx);
        } else {
            state.buildings[idx].hp -= damage as u32;
            damage = 0;
        }
    }
}

/// After losing supply structures: cancel newest queued units, then lose units
/// (workers first) until supply fits under the cap again.
fn enforce_supply_cap(state: &mut GameState, cfg: &GameDataConfig) {
    refresh_supply(state, cfg);
    while state.supply_used > state.supply_cap {
        let queued = state.buildings.iter().rposition(|b| b.queue.iter().any(|j| matches!(j.item, JobItem::Unit(_))));
        if let Some(bi) = queued {
            let qi = state.buildings[bi]
                .queue
                .iter()
                .rposition(|j| matches!(j.item, JobItem::Unit(_)))
                .expect("queue holds a unit job");
            let job = state.buildings[bi].queue.remove(qi).expect("index in range");
            push_event(state, cfg, EventKind::JobCancelled { item: job.item });
        } else if let Some(&unit) = UnitKind::PLAYER.iter().find(|&&k| state.unit_count(k) > 0) {
            *state.units.get_mut(&unit).expect("present") -= 1;
            push_event(state, cfg, EventKind::UnitDeserted { unit });
        } else {
            break;
        }
        refresh_supply(state, cfg);
    }
    state.units.retain(|k, c| *c > 0 || *k == UnitKind::Probe);
    drop_lost_scout(state);
}

/// A scout cannot outlive the last Probe.
fn drop_lost_scout(state: &mut GameState) {
    if state.unit_count(UnitKind::Probe) == 0 {
        state.scout = None;
    }
}

fn apply_action(state: &mut GameState, cfg: &GameDataConfig, action: ActionToken) {
    use ActionToken as A;
    match action {
        A::TrainProbe => train(state, cfg, action, UnitKind::Probe),
        A::TrainZealot => train(state, cfg, action, UnitKind::Zealot),
        A::TrainStalker => train(state, cfg, action, UnitKind::Stalker),
        A::TrainCarrier => train(state, cfg, action, UnitKind::Carrier),
        A::BuildPylon => build(state, cfg, action, BuildingKind::Pylon),
        A::BuildNexus => build(state, cfg, action, BuildingKind::Nexus),
        A::BuildAssimilator => build(state, cfg, action, BuildingKind::Assimilator),
        A::BuildGateway => build(state, cfg, action, BuildingKind::Gateway),
        A::BuildCyberneticsCore => build(state, cfg, action, BuildingKind::CyberneticsCore),
        A::BuildForge => build(state, cfg, action, BuildingKind::Forge),
        A::BuildStargate => build(state, cfg, action, BuildingKind::Stargate),
        A::BuildFleetBeacon => build(state, cfg, action, BuildingKind::FleetBeacon),
        A::ResearchWarpgate => research(state, cfg, action, TechKind::Warpgate),
        A::ResearchAirWeapon1 => research(state, cfg, action, TechKind::AirWeapons1),
        A::ResearchAirWeapon2 => research(state, cfg, action, TechKind::AirWeapons2),
        A::ResearchAirArmor1 => research(state, cfg, action, TechKind::AirArmor1),
        A::ResearchAirArmor2 => research(state, cfg, action, TechKind::AirArmor2),
        A::ChronoboostNexus => chronoboost(state, cfg, action),
        A::ScoutWithProbe => scout(state, cfg, action),
        A::Attack => player_attack(state, cfg, action),
        A::EmptyAction => {}
    }
}

fn accrue_income(state: &mut GameState, cfg: &GameDataConfig) {
    let (minerals, gas, _) = state.worker_assignment(cfg);
    let ts = u64::from(cfg.economy.tick_seconds);
    let m = u64::from(minerals) * u64::from(cfg.economy.mineral_rate_per_worker) * ts;
    let g = u64::from(gas) * u64::from(cfg.economy.gas_rate_per_worker) * ts;
    state.minerals_bank += m;
    state.minerals_collected_total += m;
    state.gas_bank += g;
    state.gas_collected_total += g;
}

fn advance_production(state: &mut GameState, cfg: &GameDataConfig) {
    let ts = cfg.economy.tick_seconds;
    let now = state.time_s;
    let warpgate = state.research_done(TechKind::Warpgate);
    let mut finished = Vec::new();
    for b in state.buildings.iter_mut() {
        if !b.is_complete() {
            b.progress.advance(PROGRESS_PER_SECOND * ts);
            if b.is_complete() {
                b.chrono_ready_at = now;
                finished.push(EventKind::ConstructionCompleted { building: b.kind });
            }
            continue;
        }
        let boosted = b.boost_until > now;
        let kind = b.kind;
        let Some(job) = b.queue.front_mut() else { continue };
        let mut rate = PROGRESS_PER_SECOND;
        if boosted {
            rate += 1;
        }
        if warpgate && kind == BuildingKind::Gateway && matches!(job.item, JobItem::Unit(_)) {
            rate += 1;
        }
        job.progress.advance(rate * ts);
        if let JobItem::Research(t) = job.item {
            state.research.insert(t, job.progress);
        }
        if job.progress.is_complete() {
            let job = b.queue.pop_front().expect("front exists");
            if let JobItem::Unit(u) = job.item {
                *state.units.entry(u).or_insert(0) += 1;
            }
            finished.push(EventKind::JobCompleted { item: job.item });
        }
    }
    for kind in finished {
        push_event(state, cfg, kind);
    }
}

fn advance_scout(state: &mut GameState, cfg: &GameDataConfig) {
    let Some(mut s) = state.scout else { return };
    if !s.arrived && state.time_s >= s.arrives_at {
        s.arrived = true;
        state.scouted_at = Some(state.time_s);
        state.intel_until = state.time_s + cfg.timing.intel_duration_s;
        push_event(state, cfg, EventKind::ScoutArrived);
    }
    state.scout = if state.time_s >= s.returns_at { None } else { Some(s) };
}

fn enemy_cost(cfg: &GameDataConfig, kind: UnitKind) -> u64 {
    let s = cfg.unit(kind);
    u64::from(s.minerals + s.gas) * CENTI
}

fn hatchery_cost(cfg: &GameDataConfig) -> u64 {
    let s = cfg.building(BuildingKind::Hatchery);
    u64::from(s.minerals + s.gas) * CENTI
}

/// Deterministic schedule lookup plus greedy spending of the current bank.
pub fn opponent_actions(state: &GameState, difficulty: &Difficulty, cfg: &GameDataConfig) -> Vec<OpponentCommand> {
    let enemy = &state.enemy;
    let now = state.time_s;
    let mut cmds = Vec::new();
    let mut worker_target = enemy.worker_target;
    let mut pending = enemy.pending_hatcheries;
    let mut production = enemy.production.clone();
    let mut cursor = enemy.production_cursor;

    for entry in difficulty.script.iter().skip(enemy.script_cursor) {
        if entry.at > now {
            break;
        }
        match entry.action() {
            Ok(ScriptAction::Drones(n)) => {
                worker_target = n;
                cmds.push(OpponentCommand::SetWorkerTarget(n));
            }
            Ok(ScriptAction::Hatchery(n)) => {
                pending += n;
                cmds.push(OpponentCommand::QueueHatcheries(n));
            }
            Ok(ScriptAction::Produce(units)) => {
                production = units.clone();
                cursor = 0;
                cmds.push(OpponentCommand::SetProduction(units));
            }
            // Attacks come from the seeded plan.
            Ok(ScriptAction::Upgrade(level)) => cmds.push(OpponentCommand::SetUpgrade(level)),
            Ok(ScriptAction::Attack { .. }) | Err(_) => {}
        }
    }

    let mut bank = enemy.bank_centi;
    while pending > 0 && bank >= hatchery_cost(cfg) {
        bank -= hatchery_cost(cfg);
        pending -= 1;
        cmds.push(OpponentCommand::BuildHatchery);
    }
    if pending == 0 {
        let mut supply = enemy.supply_used(cfg);
        let cap = cfg.enemy.supply_cap_max;
        let worker_cap = cfg.enemy.workers_per_hatchery * enemy.bases.len() as u32;
        let drone_supply = cfg.unit(UnitKind::Drone).supply;
        let mut workers = enemy.workers;
        let mut larva = enemy.larva;
        while workers < worker_target.min(worker_cap)
            && larva > 0
            && bank >= enemy_cost(cfg, UnitKind::Drone)
            && supply + drone_supply <= cap
        {
            bank -= enemy_cost(cfg, UnitKind::Drone);
            larva -= 1;
            workers += 1;
            supply += drone_supply;
            cmds.push(OpponentCommand::TrainDrone);
        }
        // Saves for drones while under the worker target.
        let droning = workers < worker_target.min(worker_cap) && supply + drone_supply <= cap;
        if !droning && !production.is_empty() {
            loop {
                let unit = production[cursor % production.len()];
                let cost = enemy_cost(cfg, unit);
                if larva == 0 || bank < cost || supply + cfg.unit(unit).supply > cap {
                    break;
                }
                larva -= 1;
                bank -= cost;
                supply += cfg.unit(unit).supply;
                cursor += 1;
                cmds.push(OpponentCommand::Train(unit));
            }
        }
    }

    for attack in enemy.attack_plan.iter().skip(enemy.attack_cursor) {
        if attack.at > now {
            break;
        }
        cmds.push(OpponentCommand::Attack { pct: attack.pct });
    }
    cmds
}

fn enemy_wave(state: &mut GameState, cfg: &GameDataConfig, pct: u32) {
    let mut wave = Army::new();
    for (&kind, &count) in &state.enemy.army {
        let sent = (u64::from(count) * u64::from(pct)).div_ceil(100) as u32;
        if sent > 0 {
            wave.insert(kind, sent.min(count));
        }
    }
    if wave.is_empty() {
        return;
    }
    subtract(&mut state.enemy.army, &wave);
    let combat = resolve_combat(&Force::with_upgrades(wave.clone(), enemy_upgrades(state)), &player_force(state), cfg);
    for (kind, lost) in &combat.defender_losses {
        *state.units.entry(*kind).or_insert(0) -= lost;
    }
    state.units.retain(|k, c| *c > 0 || *k == UnitKind::Probe);
    let mut survivors = wave.clone();
    subtract(&mut survivors, &combat.attacker_losses);
    let mut damage = 0;
    if state.army().is_empty() && !survivors.is_empty() {
        damage = siege_damage(&Force::with_upgrades(survivors.clone(), enemy_upgrades(state)), cfg);
        damage_player_base(state, cfg, damage);
    }
    for (kind, count) in survivors {
        *state.enemy.army.entry(kind).or_insert(0) += count;
    }
    push_event(state, cfg, EventKind::EnemyWave { wave, combat, siege_damage: damage });
    enforce_supply_cap(state, cfg);
}

fn advance_enemy(state: &mut GameState, difficulty: &Difficulty, cfg: &GameDataConfig) {
    if state.enemy.bases.is_empty() {
        return;
    }
    let ts = u64::from(cfg.economy.tick_seconds);
    {
        let e = &mut state.enemy;
        let cap = cfg.enemy.workers_per_hatchery * e.complete_bases();
        let income =
            u64::from(e.workers.min(cap)) * u64::from(cfg.enemy.rate_per_worker) * u64::from(e.income_pct) * ts;
        e.bank_centi += income;
        e.collected_centi += income;
        for base in e.bases.iter_mut() {
            base.progress.advance(PROGRESS_PER_SECOND * cfg.economy.tick_seconds);
        }
        let hatcheries = e.complete_bases();
        let larva_cap = cfg.enemy.larva_cap_per_hatchery * hatcheries;
        e.larva_progress += u64::from(hatcheries) * ts;
        while e.larva_progress >= difficulty.larva_interval_s {
            e.larva_progress -= difficulty.larva_interval_s;
            e.larva = (e.larva + 1).min(larva_cap);
        }
    }

    let commands = opponent_actions(state, difficulty, cfg);
    let now = state.time_s;
    while state.enemy.script_cursor < difficulty.script.len() && difficulty.script[state.enemy.script_cursor].at <= now
    {
        state.enemy.script_cursor += 1;
    }
    for cmd in commands {
        let e = &mut state.enemy;
        match cmd {
            OpponentCommand::SetWorkerTarget(n) => e.worker_target = n,
            OpponentCommand::SetUpgrade(level) => e.upgrade_level = level,
            OpponentCommand::QueueHatcheries(n) => e.pending_hatcheries += n,
            OpponentCommand::SetProduction(units) => {
                e.production = units;
                e.production_cursor = 0;
            }
            OpponentCommand::BuildHatchery => {
                let cost = hatchery_cost(cfg);
                e.bank_centi -= cost;
                e.spent_centi += cost;
                e.pending_hatcheries -= 1;
                let stats = cfg.building(BuildingKind::Hatchery);
                e.bases.insert(0, EnemyBase { progress: Progress::for_seconds(stats.build_s), hp: stats.hp });
            }
            OpponentCommand::TrainDrone => {
                let cost = enemy_cost(cfg, UnitKind::Drone);
                e.bank_centi -= cost;
                e.spent_centi += cost;
                e.larva -= 1;
                e.workers += 1;
            }
            OpponentCommand::Train(unit) => {
                let cost = enemy_cost(cfg, unit);
                e.bank_centi -= cost;
                e.spent_centi += cost;
                e.larva -= 1;
                e.production_cursor += 1;
                *e.army.entry(unit).or_insert(0) += 1;
            }
            OpponentCommand::Attack { pct } => {
                state.enemy.attack_cursor += 1;
                enemy_wave(state, cfg, pct);
            }
        }
    }
}

/// Win if the enemy has no base, loss if we have none, draw at the time cap.
pub fn evaluate_termination(state: &GameState, cfg: &GameDataConfig) -> Option<Outcome> {
    if state.enemy.bases.is_empty() {
        Some(Outcome::Win)
    } else if !state.has_base() {
        Some(Outcome::Loss)
    } else if state.time_s >= cfg.timing.time_cap_s {
        Some(Outcome::Draw)
    } else {
        None
    }
}

pub fn is_terminated(state: &GameState) -> Option<Outcome> {
    state.outcome
}

fn advance_tick(state: &mut GameState, difficulty: &Difficulty, cfg: &GameDataConfig) {
    accrue_income(state, cfg);
    advance_production(state, cfg);
    advance_scout(state, cfg);
    advance_enemy(state, difficulty, cfg);
    enforce_supply_cap(state, cfg);
    state.time_s += u64::from(cfg.economy.tick_seconds);
    state.tick += 1;
    state.outcome = evaluate_termination(state, cfg);
}

/// Applies `actions` in order (infeasible ones are skipped and logged), then
/// advances up to `n_ticks` ticks, stopping early if the match ends.
pub fn step(
    state: &mut GameState,
    actions: &[ActionToken],
    n_ticks: u32,
    difficulty: &Difficulty,
    cfg: &GameDataConfig,
) -> Result<(), SimError> {
    if state.outcome.is_some() {
        return Err(SimError::GameOver);
    }
    if difficulty.level != state.enemy.level {
        return Err(SimError::Config("difficulty does not match the running game".into()));
    }
    for &action in actions {
        apply_action(state, cfg, action);
    }
    refresh_supply(state, cfg);
    for _ in 0..n_ticks {
        advance_tick(state, difficulty, cfg);
        if state.outcome.is_some() {
            break;
        }
    }
    Ok(())
}
