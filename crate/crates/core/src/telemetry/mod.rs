//! Per-tick resource/supply series, army and research snapshots, tactic traces,
//! CSV/JSONL export, and run-to-run comparison tables.

mod compare;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::macro_sim::{BuildingKind, GameDataConfig, GameState, UnitKind};

pub use compare::{compare_report, ComparisonRow, ComparisonTable, Metric};

pub const CSV_HEADER: &str = "time_s,minerals_bank,gas_bank,minerals_collected_total,gas_collected_total,worker_supply,army_supply,supply_used,supply_cap,pylon_count";

pub const DEFAULT_SNAPSHOT_TIMES: [u64; 4] = [240, 480, 720, 960];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub time_s: u64,
    pub minerals_bank: u64,
    pub gas_bank: u64,
    pub minerals_collected_total: u64,
    pub gas_collected_total: u64,
    pub worker_supply: u32,
    pub army_supply: u32,
    pub supply_used: u32,
    pub supply_cap: u32,
    pub pylon_count: u32,
}

impl SeriesPoint {
    pub fn from_state(state: &GameState, cfg: &GameDataConfig) -> Self {
        Self {
            time_s: state.time_s,
            minerals_bank: state.minerals_bank,
            gas_bank: state.gas_bank,
            minerals_collected_total: state.minerals_collected_total,
            gas_collected_total: state.gas_collected_total,
            worker_supply: state.worker_supply(cfg),
            army_supply: state.army_supply(cfg),
            supply_used: state.supply_used,
            supply_cap: state.supply_cap,
            pylon_count: state.complete_count(BuildingKind::Pylon),
        }
    }
}

/// Army composition in supply and research status at one snapshot time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub time_s: u64,
    pub unit_supply: BTreeMap<UnitKind, u32>,
    /// (technology display name, percent complete)
    pub research: Vec<(String, u32)>,
    pub research_completed: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TacticTracePoint {
    pub tick: u64,
    pub time_s: u64,
    pub tactic: Option<String>,
    pub priority: Option<String>,
    pub compliant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TelemetryError {
    #[error("sample at {time_s}s does not advance past {last_s}s")]
    NonMonotonic { time_s: u64, last_s: u64 },
    #[error("series time ranges do not overlap")]
    Incomparable,
    #[error("{0}")]
    Io(String),
}

/// Single-writer collector for one match.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TelemetrySink {
    pub snapshot_times: Vec<u64>,
    pub series: Vec<SeriesPoint>,
    pub snapshots: Vec<SnapshotRow>,
    pub tactic_trace: Vec<TacticTracePoint>,
}

impl TelemetrySink {
    pub fn new(mut snapshot_times: Vec<u64>) -> Self {
        snapshot_times.sort_unstable();
        snapshot_times.dedup();
        Self { snapshot_times, ..Self::default() }
    }

    pub fn with_default_snapshots() -> Self {
        Self::new(DEFAULT_SNAPSHOT_TIMES.to_vec())
    }

    /// Appends a series point; emits any snapshot whose time has been reached.
    pub fn sample(&mut self, state: &GameState, cfg: &GameDataConfig) -> Result<(), TelemetryError> {
        if let Some(last) = self.series.last() {
            if state.time_s <= last.time_s {
                return Err(TelemetryError::NonMonotonic { time_s: state.time_s, last_s: last.time_s });
            }
        }
        self.series.push(SeriesPoint::from_state(state, cfg));
        while let Some(&due) = self.snapshot_times.get(self.snapshots.len()) {
            if state.time_s < due {
                break;
            }
            self.snapshots.push(snapshot_row(due, state, cfg));
        }
        Ok(())
    }

    pub fn trace(&mut self, point: TacticTracePoint) {
        self.tactic_trace.push(point);
    }

    pub fn point_at(&self, time_s: u64) -> Option<&SeriesPoint> {
        self.series.iter().find(|p| p.time_s == time_s)
    }
}

fn snapshot_row(time_s: u64, state: &GameState, cfg: &GameDataConfig) -> SnapshotRow {
    SnapshotRow {
        time_s,
        unit_supply: UnitKind::PLAYER
            .iter()
            .map(|&k| (k, state.unit_count(k) * cfg.unit(k).supply))
            .filter(|(_, s)| *s > 0)
            .collect(),
        research: state.research.iter().map(|(t, p)| (t.to_string(), p.percent())).collect(),
        research_completed: state.completed_research() as u32,
    }
}

pub fn export_csv(series: &[SeriesPoint], path: &Path) -> Result<(), TelemetryError> {
    let io = |e: &dyn std::fmt::Display| TelemetryError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| io(&e))?;
    w.write_record(CSV_HEADER.split(',')).map_err(|e| io(&e))?;
    for p in series {
        w.serialize(p).map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))
}

pub fn import_csv(path: &Path) -> Result<Vec<SeriesPoint>, TelemetryError> {
    let io = |e: &dyn std::fmt::Display| TelemetryError::Io(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| io(&e))?;
    let header = r.headers().map_err(|e| io(&e))?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(TelemetryError::Io(format!("{}: unexpected header {header:?}", path.display())));
    }
    r.deserialize().map(|row| row.map_err(|e| io(&e))).collect()
}

/// One JSON object per line.
pub fn export_jsonl<T: Serialize>(rows: &[T], path: &Path) -> Result<(), TelemetryError> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).map_err(|e| TelemetryError::Io(e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| TelemetryError::Io(format!("{}: {e}", path.display())))
}

/// gnuplot script plotting the resource and supply columns of `csv_name`.
pub fn gnuplot_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'game time (s)'\n\
         set multiplot layout 2,1\n\
         set title 'Resources'\n\
         plot '{csv_name}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines, '' using 1:5 with lines\n\
         set title 'Supply'\n\
         plot '{csv_name}' using 1:6 with lines, '' using 1:7 with lines, '' using 1:8 with lines, '' using 1:9 with lines\n\
         unset multiplot\n"
    )
}
