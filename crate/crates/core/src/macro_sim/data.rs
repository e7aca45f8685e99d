//! Entity kinds and the static game-data table (costs, durations, combat stats, rates).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Probe,
    Zealot,
    Stalker,
    Carrier,
    Drone,
    Zergling,
    Roach,
    Hydralisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildingKind {
    Nexus,
    Pylon,
    Assimilator,
    Gateway,
    CyberneticsCore,
    Forge,
    Stargate,
    FleetBeacon,
    Hatchery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechKind {
    Warpgate,
    AirWeapons1,
    AirWeapons2,
    AirArmor1,
    AirArmor2,
}

impl UnitKind {
    pub const ALL: [UnitKind; 8] = [
        UnitKind::Probe,
        UnitKind::Zealot,
        UnitKind::Stalker,
        UnitKind::Carrier,
        UnitKind::Drone,
        UnitKind::Zergling,
        UnitKind::Roach,
        UnitKind::Hydralisk,
    ];
    pub const PLAYER: [UnitKind; 4] = [UnitKind::Probe, UnitKind::Zealot, UnitKind::Stalker, UnitKind::Carrier];
    pub const PLAYER_ARMY: [UnitKind; 3] = [UnitKind::Zealot, UnitKind::Stalker, UnitKind::Carrier];
    pub const ENEMY_ARMY: [UnitKind; 3] = [UnitKind::Zergling, UnitKind::Roach, UnitKind::Hydralisk];

    pub fn display_name(self) -> &'static str {
        match self {
            UnitKind::Probe => "Probe",
            UnitKind::Zealot => "Zealot",
            UnitKind::Stalker => "Stalker",
            UnitKind::Carrier => "Carrier",
            UnitKind::Drone => "Drone",
            UnitKind::Zergling => "Zergling",
            UnitKind::Roach => "Roach",
            UnitKind::Hydralisk => "Hydralisk",
        }
    }
}

impl BuildingKind {
    pub const ALL: [BuildingKind; 9] = [
        BuildingKind::Nexus,
        BuildingKind::Pylon,
        BuildingKind::Assimilator,
        BuildingKind::Gateway,
        BuildingKind::CyberneticsCore,
        BuildingKind::Forge,
        BuildingKind::Stargate,
        BuildingKind::FleetBeacon,
        BuildingKind::Hatchery,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            BuildingKind::Nexus => "Nexus",
            BuildingKind::Pylon => "Pylon",
            BuildingKind::Assimilator => "Assimilator",
            BuildingKind::Gateway => "Gateway",
            BuildingKind::CyberneticsCore => "Cybernetics Core",
            BuildingKind::Forge => "Forge",
            BuildingKind::Stargate => "Stargate",
            BuildingKind::FleetBeacon => "Fleet Beacon",
            BuildingKind::Hatchery => "Hatchery",
        }
    }
}

impl TechKind {
    pub const ALL: [TechKind; 5] =
        [TechKind::Warpgate, TechKind::AirWeapons1, TechKind::AirWeapons2, TechKind::AirArmor1, TechKind::AirArmor2];

    pub fn display_name(self) -> &'static str {
        match self {
            TechKind::Warpgate => "Warpgate",
            TechKind::AirWeapons1 => "Protoss-air-weapon-level-1",
            TechKind::AirWeapons2 => "Protoss-air-weapon-level-2",
            TechKind::AirArmor1 => "Protoss-air-armor-level-1",
            TechKind::AirArmor2 => "Protoss-air-armor-level-2",
        }
    }
}

macro_rules! display_and_parse {
    ($ty:ty, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.display_name())
            }
        }

        impl FromStr for $ty {
            type Err = SimError;

            /// Accepts the display name case-insensitively.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let wanted = s.trim();
                Self::ALL
                    .iter()
                    .copied()
                    .find(|k| k.display_name().eq_ignore_ascii_case(wanted))
                    .ok_or_else(|| SimError::Config(format!("unknown {} {wanted:?}", $what)))
            }
        }
    };
}

display_and_parse!(UnitKind, "unit");
display_and_parse!(BuildingKind, "building");
display_and_parse!(TechKind, "technology");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitStats {
    pub minerals: u32,
    pub gas: u32,
    pub supply: u32,
    pub build_s: u32,
    pub hp: u32,
    /// Damage per second.
    pub power: u32,
    pub air: bool,
    pub anti_air: bool,
    pub producer: BuildingKind,
    #[serde(default)]
    pub requires: Vec<BuildingKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingStats {
    pub minerals: u32,
    pub gas: u32,
    pub build_s: u32,
    pub hp: u32,
    #[serde(default)]
    pub supply_granted: u32,
    #[serde(default)]
    pub requires: Vec<BuildingKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechStats {
    pub minerals: u32,
    pub gas: u32,
    pub build_s: u32,
    pub producer: BuildingKind,
    #[serde(default)]
    pub requires: Vec<BuildingKind>,
    #[serde(default)]
    pub requires_tech: Vec<TechKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyConfig {
    pub tick_seconds: u32,
    pub mineral_rate_per_worker: u32,
    pub gas_rate_per_worker: u32,
    pub mineral_workers_per_nexus: u32,
    pub workers_per_assimilator: u32,
    pub geysers_per_nexus: u32,
    pub max_nexus: u32,
    pub supply_cap_max: u32,
    pub queue_limit: u32,
    pub start_minerals: u32,
    pub start_probes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    pub time_cap_s: u64,
    pub chronoboost_seconds: u64,
    pub chronoboost_cooldown_s: u64,
    pub scout_travel_s: u64,
    pub intel_duration_s: u64,
    pub recent_events: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombatConfig {
    pub round_seconds: u32,
    pub round_cap: u32,
    pub siege_seconds: u32,
    /// Percent bonus per upgrade level applied to air units (power for weapons,
    /// hit points for armor).
    pub upgrade_pct_per_level: u32,
    /// Share of siege damage taken by workers.
    pub worker_damage_pct: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnemyEconomyConfig {
    pub start_workers: u32,
    pub start_resources: u32,
    pub workers_per_hatchery: u32,
    pub rate_per_worker: u32,
    pub supply_cap_max: u32,
    /// Larva stored per complete hatchery.
    pub larva_cap_per_hatchery: u32,
}

/// Immutable after load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDataConfig {
    pub economy: EconomyConfig,
    pub timing: TimingConfig,
    pub combat: CombatConfig,
    pub enemy: EnemyEconomyConfig,
    pub units: BTreeMap<UnitKind, UnitStats>,
    pub buildings: BTreeMap<BuildingKind, BuildingStats>,
    pub techs: BTreeMap<TechKind, TechStats>,
}

pub const BUNDLED_GAME_DATA: &str = include_str!("../../assets/game_data.toml");

impl GameDataConfig {
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_GAME_DATA).expect("bundled game data is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: GameDataConfig = toml::from_str(text).map_err(|e| SimError::Config(format!("game data: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn unit(&self, kind: UnitKind) -> &UnitStats {
        &self.units[&kind]
    }

    pub fn building(&self, kind: BuildingKind) -> &BuildingStats {
        &self.buildings[&kind]
    }

    pub fn tech(&self, kind: TechKind) -> &TechStats {
        &self.techs[&kind]
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::Config(m));
        let e = &self.economy;
        if e.tick_seconds == 0 {
            return err("tick_seconds must be positive".into());
        }
        if e.mineral_rate_per_worker == 0 || e.gas_rate_per_worker == 0 {
            return err("income rates must be positive".into());
        }
        if e.supply_cap_max == 0 || e.queue_limit == 0 || e.max_nexus == 0 {
            return err("supply cap, queue limit and max_nexus must be positive".into());
        }
        if self.combat.round_seconds == 0 || self.combat.round_cap == 0 {
            return err("combat rounds must be positive".into());
        }
        if self.timing.time_cap_s == 0 {
            return err("time cap must be positive".into());
        }
        for kind in UnitKind::ALL {
            let Some(s) = self.units.get(&kind) else {
                return err(format!("missing unit entry {kind}"));
            };
            if s.minerals == 0 || s.build_s == 0 || s.hp == 0 {
                return err(format!("unit {kind}: cost, build time and hp must be positive"));
            }
        }
        for kind in BuildingKind::ALL {
            let Some(s) = self.buildings.get(&kind) else {
                return err(format!("missing building entry {kind}"));
            };
            if s.minerals == 0 || s.build_s == 0 || s.hp == 0 {
                return err(format!("building {kind}: cost, build time and hp must be positive"));
            }
        }
        for kind in TechKind::ALL {
            let Some(s) = self.techs.get(&kind) else {
                return err(format!("missing tech entry {kind}"));
            };
            if s.minerals == 0 || s.build_s == 0 {
                return err(format!("tech {kind}: cost and research time must be positive"));
            }
        }
        if self.unit(UnitKind::Probe).supply == 0 {
            return err("probe supply must be positive".into());
        }
        Ok(())
    }
}
