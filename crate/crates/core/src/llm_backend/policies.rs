//! Deterministic scripted stand-ins for an LLM: each reads the latest observation
//! and answers in the same shape as the bundled example output.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::observation::ParsedObservation;
use crate::action_grammar::ActionToken;
use crate::macro_sim::{BuildingKind, GameDataConfig, TechKind, UnitKind};

pub const ZEALOT_STALKER: &str = "Zealot & Stalker tactic";
pub const CARRIER: &str = "Carrier tactic";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Priority constructions, tactic switch to Carriers, air research.
    HepOracle,
    /// HEP behaviour without tactic knowledge: never leaves Zealots and Stalkers.
    HepNoEtpOracle,
    /// HEP behaviour without the priority layer: expansions compete with routine spending.
    HepNoHdpOracle,
    /// No priority field, no tactics, Zealots and Stalkers only, Warpgate research only.
    BaselineOracle,
    /// Always `<EMPTY ACTION>`.
    NoopOracle,
}

impl Policy {
    pub const ALL: [Policy; 5] =
        [Policy::HepOracle, Policy::HepNoEtpOracle, Policy::HepNoHdpOracle, Policy::BaselineOracle, Policy::NoopOracle];

    pub fn name(self) -> &'static str {
        match self {
            Policy::HepOracle => "hep_oracle",
            Policy::HepNoEtpOracle => "hep_no_etp_oracle",
            Policy::HepNoHdpOracle => "hep_no_hdp_oracle",
            Policy::BaselineOracle => "baseline_oracle",
            Policy::NoopOracle => "noop_oracle",
        }
    }

    fn traits(self) -> Traits {
        match self {
            Policy::HepOracle => Traits { priority: true, tactics: true },
            Policy::HepNoEtpOracle => Traits { priority: true, tactics: false },
            Policy::HepNoHdpOracle => Traits { priority: false, tactics: true },
            Policy::BaselineOracle | Policy::NoopOracle => Traits { priority: false, tactics: false },
        }
    }

    /// Response to one observation. Text that is not an observation gets an empty action.
    pub fn respond(self, observation: &str, cfg: &GameDataConfig) -> String {
        let Some(obs) = ParsedObservation::parse(observation) else {
            return "No game state found.\n\nActions:\n1. <EMPTY ACTION>\n".into();
        };
        if self == Policy::NoopOracle {
            return format!("Game time: {}\n\nActions:\n1. <EMPTY ACTION>\n", clock(obs.time_s));
        }
        let mut plan = Plan::new(&obs, cfg, self.traits(), self == Policy::BaselineOracle);
        plan.decide();
        plan.render()
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.name() == s.trim()).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
            format!("unknown policy {s:?} (one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Traits {
    priority: bool,
    tactics: bool,
}

fn clock(t: u64) -> String {
    crate::macro_sim::clock(t)
}

/// Thresholds of the scripted play. Kept together so they are easy to tune.
mod tuning {
    /// Second Nexus saving starts here.
    pub const EXPAND_FROM_S: u64 = 40;
    /// Without a priority layer, expansion waits until routine spending leaves this much.
    pub const LATE_EXPAND_FROM_S: u64 = 150;
    pub const LATE_EXPAND_BANK: u64 = 800;
    /// Without a priority layer, the second pair of geysers waits until here.
    pub const LATE_GAS_FROM_S: u64 = 900;
    pub const CARRIER_SWITCH_FROM_S: u64 = 240;
    pub const SECOND_STARGATE_FROM_S: u64 = 420;
    /// Gas bank that justifies another Stargate before that time.
    pub const EXTRA_STARGATE_GAS: u64 = 600;
    pub const MAX_STARGATES: u32 = 3;
    /// Mineral bank kept for Carriers before Zealots are added.
    pub const CARRIER_MINERAL_RESERVE: u64 = 350;
    pub const CARRIER_GATEWAYS: u32 = 4;
    pub const SPARE_MINERALS: u64 = 700;
    pub const THIRD_NEXUS_FROM_S: u64 = 600;
    pub const MAX_PROBES: u32 = 66;
    pub const CARRIER_ATTACK_COUNT: u32 = 12;
    pub const GROUND_ATTACK_SUPPLY: u32 = 70;
    pub const SCOUT_PERIOD_S: u64 = 180;
    /// Units kept queued per Gateway or Stargate; queries are 20 s apart.
    pub const QUEUE_PER_PRODUCER: u32 = 2;
}

struct Plan<'a> {
    obs: &'a ParsedObservation,
    cfg: &'a GameDataConfig,
    traits: Traits,
    baseline: bool,
    minerals: u64,
    gas: u64,
    free_supply: u32,
    tactic: Option<&'static str>,
    priority: Option<ActionToken>,
    actions: Vec<ActionToken>,
    notes: Vec<String>,
}

impl<'a> Plan<'a> {
    fn new(obs: &'a ParsedObservation, cfg: &'a GameDataConfig, traits: Traits, baseline: bool) -> Self {
        Self {
            obs,
            cfg,
            traits,
            baseline,
            minerals: obs.minerals,
            gas: obs.gas,
            free_supply: obs.free_supply(),
            tactic: None,
            priority: None,
            actions: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn b(&self, kind: BuildingKind) -> (u32, u32) {
        let c = self.obs.building(kind.display_name());
        (c.complete, c.total())
    }

    fn cost(&self, token: ActionToken) -> (u64, u64, u32) {
        use ActionToken as A;
        let unit = |k: UnitKind| {
            let s = self.cfg.unit(k);
            (u64::from(s.minerals), u64::from(s.gas), s.supply)
        };
        let building = |k: BuildingKind| {
            let s = self.cfg.building(k);
            (u64::from(s.minerals), u64::from(s.gas), 0)
        };
        let tech = |k: TechKind| {
            let s = self.cfg.tech(k);
            (u64::from(s.minerals), u64::from(s.gas), 0)
        };
        match token {
            A::TrainProbe => unit(UnitKind::Probe),
            A::TrainZealot => unit(UnitKind::Zealot),
            A::TrainStalker => unit(UnitKind::Stalker),
            A::TrainCarrier => unit(UnitKind::Carrier),
            A::BuildPylon => building(BuildingKind::Pylon),
            A::BuildNexus => building(BuildingKind::Nexus),
            A::BuildAssimilator => building(BuildingKind::Assimilator),
            A::BuildGateway => building(BuildingKind::Gateway),
            A::BuildCyberneticsCore => building(BuildingKind::CyberneticsCore),
            A::BuildForge => building(BuildingKind::Forge),
            A::BuildStargate => building(BuildingKind::Stargate),
            A::BuildFleetBeacon => building(BuildingKind::FleetBeacon),
            A::ResearchWarpgate => tech(TechKind::Warpgate),
            A::ResearchAirWeapon1 => tech(TechKind::AirWeapons1),
            A::ResearchAirWeapon2 => tech(TechKind::AirWeapons2),
            A::ResearchAirArmor1 => tech(TechKind::AirArmor1),
            A::ResearchAirArmor2 => tech(TechKind::AirArmor2),
            A::ChronoboostNexus | A::ScoutWithProbe | A::Attack | A::EmptyAction => (0, 0, 0),
        }
    }

    fn affordable(&self, token: ActionToken) -> bool {
        let (m, g, s) = self.cost(token);
        self.minerals >= m && self.gas >= g && self.free_supply >= s
    }

    /// Adds `token` if affordable and deducts its cost from the local budget.
    fn buy(&mut self, token: ActionToken) -> bool {
        if !self.affordable(token) {
            return false;
        }
        let (m, g, s) = self.cost(token);
        self.minerals -= m;
        self.gas -= g;
        self.free_supply -= s;
        self.actions.push(token);
        true
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    fn decide(&mut self) {
        if self.traits.tactics {
            self.choose_tactic();
        }
        if self.traits.priority {
            self.choose_priority();
        }
        if self.obs.chronoboost_ready > 0 && !self.obs.production.is_empty() {
            self.actions.push(ActionToken::ChronoboostNexus);
            self.note("Chronoboost is ready and production is running; boost it.");
        }
        if let Some(priority) = self.priority {
            self.priority_actions(priority);
        } else {
            self.routine_actions();
        }
        if self.actions.is_empty() {
            self.actions.push(ActionToken::EmptyAction);
        }
    }

    fn choose_tactic(&mut self) {
        let (nexus, _) = self.b(BuildingKind::Nexus);
        let (core, _) = self.b(BuildingKind::CyberneticsCore);
        let (_, stargates) = self.b(BuildingKind::Stargate);
        let carrier = stargates > 0 || (self.obs.time_s >= tuning::CARRIER_SWITCH_FROM_S && nexus >= 2 && core >= 1);
        self.tactic = Some(if carrier { CARRIER } else { ZEALOT_STALKER });
        if carrier {
            self.note(format!(
                "Tactic: {nexus} Nexus and the Cybernetics Core are complete, so the mid-game situation of the Carrier tactic applies."
            ));
        } else {
            self.note("Tactic: early game; the Zealot & Stalker tactic protects the expansion.");
        }
    }

    fn choose_priority(&mut self) {
        let t = self.obs.time_s;
        let (nexus_done, nexus_all) = self.b(BuildingKind::Nexus);
        let (_, assim_all) = self.b(BuildingKind::Assimilator);
        let geysers = nexus_done * self.cfg.economy.geysers_per_nexus;
        let carriers = self.obs.unit("Carrier") + self.obs.queued("Carrier");
        self.priority = if nexus_all < 2 && t >= tuning::EXPAND_FROM_S {
            self.note("Priority: the second Nexus is the most valuable construction now.");
            Some(ActionToken::BuildNexus)
        } else if nexus_all >= 2 && assim_all < 2 {
            self.note("Priority: the second Nexus is started; take the first two geysers.");
            Some(ActionToken::BuildAssimilator)
        } else if nexus_done >= 2 && assim_all < geysers.min(4) {
            self.note("Priority: the second Nexus is finished; take its geysers.");
            Some(ActionToken::BuildAssimilator)
        } else if self.traits.tactics && nexus_all == 2 && t >= tuning::THIRD_NEXUS_FROM_S && carriers >= 4 {
            self.note("Priority: the Carrier fleet can hold the front; take a third Nexus.");
            Some(ActionToken::BuildNexus)
        } else {
            self.note("Priority: no urgent construction.");
            None
        };
    }

    fn priority_actions(&mut self, priority: ActionToken) {
        self.actions.push(priority);
        let (m, g, _) = self.cost(priority);
        let affordable = self.minerals >= m && self.gas >= g;
        if affordable {
            self.minerals -= m;
            self.gas -= g;
            if priority == ActionToken::BuildAssimilator {
                let (nexus_done, _) = self.b(BuildingKind::Nexus);
                let (_, assim_all) = self.b(BuildingKind::Assimilator);
                let target = (nexus_done * self.cfg.economy.geysers_per_nexus).clamp(2, 4);
                for _ in assim_all + 1..target {
                    if !self.buy(ActionToken::BuildAssimilator) {
                        break;
                    }
                }
            }
        }
        self.probes(if affordable { u32::MAX } else { 1 });
        self.pylons();
    }

    fn worker_target(&self) -> u32 {
        let (_, nexus_all) = self.b(BuildingKind::Nexus);
        let (_, assim_all) = self.b(BuildingKind::Assimilator);
        (nexus_all * self.cfg.economy.mineral_workers_per_nexus + assim_all * self.cfg.economy.workers_per_assimilator)
            .min(tuning::MAX_PROBES)
    }

    fn probes(&mut self, limit: u32) {
        let have = self.obs.unit("Probe") + self.obs.queued("Probe");
        let target = self.worker_target();
        let (nexus_done, _) = self.b(BuildingKind::Nexus);
        let slots = (nexus_done * 2).saturating_sub(self.obs.queue_len("Nexus"));
        let want = target.saturating_sub(have).min(slots).min(limit);
        let mut trained = 0;
        for _ in 0..want {
            if !self.buy(ActionToken::TrainProbe) {
                break;
            }
            trained += 1;
        }
        if trained > 0 {
            self.note(format!("Economy: {have} of {target} workers; train {trained} Probe(s)."));
        }
    }

    fn pylons(&mut self) {
        let (_, pylons_all) = self.b(BuildingKind::Pylon);
        let (pylons_done, _) = self.b(BuildingKind::Pylon);
        let (nexus_done, nexus_all) = self.b(BuildingKind::Nexus);
        let (gates, _) = self.b(BuildingKind::Gateway);
        let (stargates, _) = self.b(BuildingKind::Stargate);
        let pending = (pylons_all - pylons_done) * 8 + (nexus_all - nexus_done) * 15;
        let projected = self.obs.free_supply() + pending;
        let need = 3 + 2 * nexus_done + 3 * gates + 6 * stargates;
        if self.obs.supply_cap + pending >= self.cfg.economy.supply_cap_max || projected >= need {
            return;
        }
        let count = if need - projected > 8 { 2 } else { 1 };
        for _ in 0..count {
            if !self.buy(ActionToken::BuildPylon) {
                break;
            }
        }
        self.note(format!("Supply: {projected} free supply including pending; build Pylons."));
    }

    fn routine_actions(&mut self) {
        self.probes(u32::MAX);
        self.pylons();
        if !self.traits.priority {
            self.unprioritised_economy();
        }
        match self.tactic {
            Some(CARRIER) => self.carrier_tactic(),
            _ => self.ground_play(),
        }
        self.scout();
        self.attack();
    }

    /// Expansion and gas when no priority layer pushes them forward: only
    /// with money left after routine needs.
    fn unprioritised_economy(&mut self) {
        let t = self.obs.time_s;
        let (nexus_done, nexus_all) = self.b(BuildingKind::Nexus);
        let (gate_done, _) = self.b(BuildingKind::Gateway);
        let (_, assim_all) = self.b(BuildingKind::Assimilator);
        let (_, core_all) = self.b(BuildingKind::CyberneticsCore);
        if gate_done > 0 && assim_all < 1 {
            self.buy(ActionToken::BuildAssimilator);
        }
        if core_all > 0 && assim_all < 2 && t >= 240 {
            self.buy(ActionToken::BuildAssimilator);
        }
        if !self.baseline && nexus_done >= 2 && assim_all < 4 && t >= tuning::LATE_GAS_FROM_S {
            self.buy(ActionToken::BuildAssimilator);
        }
        if nexus_all < 2 && t >= tuning::LATE_EXPAND_FROM_S && self.minerals >= tuning::LATE_EXPAND_BANK {
            self.buy(ActionToken::BuildNexus);
            self.note("Economy: spare minerals; expand.");
        }
    }

    fn ground_play(&mut self) {
        let t = self.obs.time_s;
        let (pylon, _) = self.b(BuildingKind::Pylon);
        let (gate_done, gate_all) = self.b(BuildingKind::Gateway);
        let (core, core_all) = self.b(BuildingKind::CyberneticsCore);
        let gate_target = match (core_all > 0, self.baseline || !self.traits.tactics) {
            (false, _) => 1,
            (true, false) => 2,
            (true, true) if t >= 360 => 4,
            (true, true) => 3,
        };
        if pylon > 0 && gate_all < gate_target && self.buy(ActionToken::BuildGateway) {
            self.note("Technology: more Gateways to produce Zealots and Stalkers.");
        }
        if gate_done > 0 && core_all == 0 && self.buy(ActionToken::BuildCyberneticsCore) {
            self.note("Technology: the Gateway is done; build the Cybernetics Core.");
        }
        if core > 0 && !self.obs.research_started("Warpgate") && self.buy(ActionToken::ResearchWarpgate) {
            self.note("Technology: research Warpgate.");
        }
        self.gateway_units(gate_done, core > 0, 0);
    }

    fn gateway_units(&mut self, gates: u32, stalkers: bool, reserve_minerals: u64) {
        let idle = (gates * tuning::QUEUE_PER_PRODUCER).saturating_sub(self.obs.queue_len("Gateway"));
        let mut trained = 0;
        for _ in 0..idle {
            if self.minerals < reserve_minerals + 100 {
                break;
            }
            let unit = if stalkers && self.affordable(ActionToken::TrainStalker) {
                ActionToken::TrainStalker
            } else {
                ActionToken::TrainZealot
            };
            if !self.buy(unit) {
                break;
            }
            trained += 1;
        }
        if trained > 0 {
            self.note(format!("Military: {trained} Gateway(s) idle; train Zealots and Stalkers."));
        }
    }

    fn carrier_tactic(&mut self) {
        let t = self.obs.time_s;
        let (stargate_done, stargate_all) = self.b(BuildingKind::Stargate);
        let (beacon, beacon_all) = self.b(BuildingKind::FleetBeacon);
        let (nexus_done, _) = self.b(BuildingKind::Nexus);
        let (gates, _) = self.b(BuildingKind::Gateway);

        if beacon > 0 {
            let idle = (stargate_done * tuning::QUEUE_PER_PRODUCER).saturating_sub(self.obs.queue_len("Stargate"));
            let mut trained = 0;
            for _ in 0..idle {
                if !self.buy(ActionToken::TrainCarrier) {
                    break;
                }
                trained += 1;
            }
            if trained > 0 {
                self.note(format!("Military: train {trained} Carrier(s), the key force of the tactic."));
            }
        }
        if stargate_all == 0 && self.buy(ActionToken::BuildStargate) {
            self.note("Technology: build the Stargate.");
        }
        if stargate_done > 0 && beacon_all == 0 && self.buy(ActionToken::BuildFleetBeacon) {
            self.note("Technology: the Stargate is done; build the Fleet Beacon.");
        }
        let gas_floating = self.gas >= tuning::EXTRA_STARGATE_GAS && beacon > 0;
        if stargate_all < tuning::MAX_STARGATES
            && stargate_done == stargate_all
            && nexus_done >= 2
            && (t >= tuning::SECOND_STARGATE_FROM_S || gas_floating)
            && self.buy(ActionToken::BuildStargate)
        {
            self.note("Technology: another Stargate raises Carrier production.");
        }
        self.air_research(beacon > 0);
        let (_, gates_all) = self.b(BuildingKind::Gateway);
        if beacon > 0
            && gates_all < tuning::CARRIER_GATEWAYS
            && self.minerals >= tuning::SPARE_MINERALS
            && self.buy(ActionToken::BuildGateway)
        {
            self.note("Technology: spare minerals; another Gateway for Zealots.");
        }
        // Zealots soak ground damage that would otherwise have nowhere to go.
        self.gateway_units(gates, false, tuning::CARRIER_MINERAL_RESERVE);
    }

    fn air_research(&mut self, beacon: bool) {
        let busy = self.obs.queue_len("Cybernetics Core") > 0;
        if busy {
            return;
        }
        let order = [
            ("Protoss-air-weapon-level-1", ActionToken::ResearchAirWeapon1, None),
            ("Protoss-air-armor-level-1", ActionToken::ResearchAirArmor1, None),
            ("Protoss-air-weapon-level-2", ActionToken::ResearchAirWeapon2, Some("Protoss-air-weapon-level-1")),
            ("Protoss-air-armor-level-2", ActionToken::ResearchAirArmor2, Some("Protoss-air-armor-level-1")),
        ];
        for (name, token, needs) in order {
            if self.obs.research_started(name) {
                continue;
            }
            if needs.is_some_and(|n| !beacon || !self.obs.research_done(n)) {
                continue;
            }
            if self.buy(token) {
                self.note(format!("Technology: research {name}."));
            }
            break;
        }
    }

    fn scout(&mut self) {
        let t = self.obs.time_s;
        if t >= 120 && !self.obs.scout_out && t % tuning::SCOUT_PERIOD_S < 20 {
            self.actions.push(ActionToken::ScoutWithProbe);
            self.note("Scouting: send a Probe to check the enemy army.");
        }
    }

    fn attack(&mut self) {
        let carriers = self.obs.unit("Carrier");
        let army = self.obs.army_supply;
        let go = if self.tactic == Some(CARRIER) {
            carriers >= tuning::CARRIER_ATTACK_COUNT
        } else {
            army >= tuning::GROUND_ATTACK_SUPPLY
        };
        if go {
            self.actions.push(ActionToken::Attack);
            self.note(format!("Attack: army supply {army} is strong enough to attack."));
        }
    }

    fn render(&self) -> String {
        let o = self.obs;
        let mut out = String::new();
        let _ = writeln!(out, "Game time: {}", clock(o.time_s));
        out.push_str("\nData extraction:\n");
        let _ = writeln!(out, "- Minerals {}, Gas {}", o.minerals, o.gas);
        let _ = writeln!(
            out,
            "- Supply {}/{} (workers {}, army {})",
            o.supply_used, o.supply_cap, o.worker_supply, o.army_supply
        );
        let buildings: Vec<String> = o.buildings.iter().map(|(k, c)| format!("{k} {}", c.total())).collect();
        let _ = writeln!(out, "- Buildings: {}", buildings.join(", "));
        if !o.units.is_empty() {
            let units: Vec<String> = o.units.iter().map(|(k, c)| format!("{k} {c}")).collect();
            let _ = writeln!(out, "- Units: {}", units.join(", "));
        }
        if !o.research.is_empty() {
            let research: Vec<String> = o.research.iter().map(|(k, p)| format!("{k} {p}%")).collect();
            let _ = writeln!(out, "- Research: {}", research.join(", "));
        }
        out.push_str("\nAnalysis:\n");
        for n in &self.notes {
            let _ = writeln!(out, "- {n}");
        }
        out.push_str("\nDecision:\n");
        if let Some(t) = self.tactic {
            let _ = writeln!(out, "Current Tactic: {t}");
        }
        if self.traits.priority {
            let p = self.priority.map_or("NONE", |p| p.name());
            let _ = writeln!(out, "Priority: {p}");
        }
        out.push_str("Actions:\n");
        for (i, a) in self.actions.iter().enumerate() {
            let _ = writeln!(out, "{}. {a}", i + 1);
        }
        out
    }
}
