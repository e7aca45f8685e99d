//! Reads the rendered observation text back into numbers for the scripted policies.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildingCount {
    pub complete: u32,
    pub in_progress: u32,
}

impl BuildingCount {
    pub fn total(&self) -> u32 {
        self.complete + self.in_progress
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueuedItem {
    pub item: String,
    pub producer: String,
    pub percent: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnemyView {
    pub hatcheries: u32,
    pub drones: u32,
    pub army: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedObservation {
    pub time_s: u64,
    pub minerals: u64,
    pub gas: u64,
    pub minerals_collected: u64,
    pub gas_collected: u64,
    pub supply_used: u32,
    pub supply_cap: u32,
    pub worker_supply: u32,
    pub army_supply: u32,
    pub idle_workers: u32,
    pub buildings: BTreeMap<String, BuildingCount>,
    pub units: BTreeMap<String, u32>,
    pub production: Vec<QueuedItem>,
    pub research: BTreeMap<String, u32>,
    pub chronoboost_ready: u32,
    pub scout_out: bool,
    pub enemy: Option<EnemyView>,
}

fn parse_clock(s: &str) -> Option<u64> {
    let (m, sec) = s.trim().split_once(':')?;
    Some(m.trim().parse::<u64>().ok()? * 60 + sec.trim().parse::<u64>().ok()?)
}

fn num<T: std::str::FromStr + Default>(s: &str) -> T {
    s.trim().parse().unwrap_or_default()
}

impl ParsedObservation {
    /// Lenient: unknown lines are ignored. Returns `None` without a game-time line.
    pub fn parse(text: &str) -> Option<Self> {
        let mut obs = ParsedObservation::default();
        let mut have_time = false;
        let mut section = String::new();
        for line in text.lines() {
            let line = line.trim_end();
            if let Some(item) = line.strip_prefix("- ") {
                obs.item(&section, item);
                continue;
            }
            if let Some(rest) = line.strip_prefix("Game time:") {
                if let Some(t) = parse_clock(rest) {
                    obs.time_s = t;
                    have_time = true;
                }
            } else if let Some(rest) = line.strip_prefix("Chronoboost available:") {
                obs.chronoboost_ready = num(rest);
            } else if let Some(rest) = line.strip_prefix("Scouting:") {
                obs.scout_out = rest.contains("probe");
            } else if let Some(head) = line.strip_suffix(':') {
                section = head.split(" (").next().unwrap_or(head).trim().to_string();
                if section == "Enemy intel" {
                    obs.enemy = Some(EnemyView::default());
                }
            }
        }
        have_time.then_some(obs)
    }

    fn item(&mut self, section: &str, item: &str) {
        if item == "none" {
            return;
        }
        match section {
            "In production" => {
                // "<item> at <producer>, <pct>%"
                if let Some((left, pct)) = item.rsplit_once(", ") {
                    if let Some((what, producer)) = left.split_once(" at ") {
                        self.production.push(QueuedItem {
                            item: what.to_string(),
                            producer: producer.to_string(),
                            percent: num(pct.trim_end_matches('%')),
                        });
                    }
                }
            }
            "Research" => {
                if let Some((tech, pct)) = item.rsplit_once(", ") {
                    self.research.insert(tech.to_string(), num(pct.trim_end_matches('%')));
                }
            }
            _ => {
                let Some((key, value)) = item.split_once(": ") else { return };
                match section {
                    "Resources" => match key {
                        "Minerals" => self.minerals = num(value),
                        "Gas" => self.gas = num(value),
                        "Minerals collected" => self.minerals_collected = num(value),
                        "Gas collected" => self.gas_collected = num(value),
                        _ => {}
                    },
                    "Supply" => match key {
                        "Supply used" => self.supply_used = num(value),
                        "Supply cap" => self.supply_cap = num(value),
                        "Worker supply" => self.worker_supply = num(value),
                        "Army supply" => self.army_supply = num(value),
                        _ => {}
                    },
                    "Workers" => {
                        if key == "Idle" {
                            self.idle_workers = num(value);
                        }
                    }
                    "Buildings" => {
                        // "<n> complete, <m> in progress"
                        let mut count = BuildingCount::default();
                        for part in value.split(", ") {
                            if let Some(n) = part.strip_suffix(" complete") {
                                count.complete = num(n);
                            } else if let Some(n) = part.strip_suffix(" in progress") {
                                count.in_progress = num(n);
                            }
                        }
                        self.buildings.insert(key.to_string(), count);
                    }
                    "Units" => {
                        self.units.insert(key.to_string(), num(value));
                    }
                    "Enemy intel" => {
                        if let Some(enemy) = self.enemy.as_mut() {
                            match key {
                                "Hatcheries" => enemy.hatcheries = num(value),
                                "Drones" => enemy.drones = num(value),
                                _ => {
                                    enemy.army.insert(key.to_string(), num(value));
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    pub fn building(&self, name: &str) -> BuildingCount {
        self.buildings.get(name).copied().unwrap_or_default()
    }

    pub fn unit(&self, name: &str) -> u32 {
        self.units.get(name).copied().unwrap_or(0)
    }

    /// Queued or in-progress jobs producing `item`.
    pub fn queued(&self, item: &str) -> u32 {
        self.production.iter().filter(|q| q.item == item).count() as u32
    }

    /// Jobs queued at producers of kind `producer`.
    pub fn queue_len(&self, producer: &str) -> u32 {
        self.production.iter().filter(|q| q.producer == producer).count() as u32
    }

    pub fn research_started(&self, tech: &str) -> bool {
        self.research.contains_key(tech)
    }

    pub fn research_done(&self, tech: &str) -> bool {
        self.research.get(tech) == Some(&100)
    }

    pub fn free_supply(&self) -> u32 {
        self.supply_cap.saturating_sub(self.supply_used)
    }
}
