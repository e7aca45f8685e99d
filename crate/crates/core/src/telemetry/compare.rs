use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{SeriesPoint, TelemetryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MineralsBank,
    GasBank,
    MineralsCollectedTotal,
    GasCollectedTotal,
    WorkerSupply,
    ArmySupply,
    SupplyUsed,
    SupplyCap,
    PylonCount,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::MineralsBank,
        Metric::GasBank,
        Metric::MineralsCollectedTotal,
        Metric::GasCollectedTotal,
        Metric::WorkerSupply,
        Metric::ArmySupply,
        Metric::SupplyUsed,
        Metric::SupplyCap,
        Metric::PylonCount,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Metric::MineralsBank => "minerals_bank",
            Metric::GasBank => "gas_bank",
            Metric::MineralsCollectedTotal => "minerals_collected_total",
            Metric::GasCollectedTotal => "gas_collected_total",
            Metric::WorkerSupply => "worker_supply",
            Metric::ArmySupply => "army_supply",
            Metric::SupplyUsed => "supply_used",
            Metric::SupplyCap => "supply_cap",
            Metric::PylonCount => "pylon_count",
        }
    }

    pub fn value(self, p: &SeriesPoint) -> f64 {
        match self {
            Metric::MineralsBank => p.minerals_bank as f64,
            Metric::GasBank => p.gas_bank as f64,
            Metric::MineralsCollectedTotal => p.minerals_collected_total as f64,
            Metric::GasCollectedTotal => p.gas_collected_total as f64,
            Metric::WorkerSupply => f64::from(p.worker_supply),
            Metric::ArmySupply => f64::from(p.army_supply),
            Metric::SupplyUsed => f64::from(p.supply_used),
            Metric::SupplyCap => f64::from(p.supply_cap),
            Metric::PylonCount => f64::from(p.pylon_count),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub time_s: u64,
    pub metric: Metric,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `a / b`; absent when either side is out of range or `b` is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub label_a: String,
    pub label_b: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn ratio(&self, time_s: u64, metric: Metric) -> Option<f64> {
        self.rows.iter().find(|r| r.time_s == time_s && r.metric == metric).and_then(|r| r.ratio)
    }

    pub fn render(&self) -> String {
        let mut out = format!("{} vs {}\n", self.label_a, self.label_b);
        let _ = writeln!(out, "{:>6}  {:<26} {:>10} {:>10} {:>8}", "time", "metric", "a", "b", "a/b");
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.0}"));
        for r in &self.rows {
            let ratio = r.ratio.map_or("undef".to_string(), |x| format!("{x:.3}"));
            let _ = writeln!(
                out,
                "{:>6}  {:<26} {:>10} {:>10} {:>8}",
                r.time_s,
                r.metric.column(),
                cell(r.a),
                cell(r.b),
                ratio
            );
        }
        out
    }
}

/// Linear interpolation between the samples around `t`; `None` outside the range.
fn interpolate(series: &[SeriesPoint], t: u64, metric: Metric) -> Option<f64> {
    let idx = series.partition_point(|p| p.time_s < t);
    let hi = series.get(idx)?;
    if hi.time_s == t {
        return Some(metric.value(hi));
    }
    let lo = series.get(idx.checked_sub(1)?)?;
    let span = (hi.time_s - lo.time_s) as f64;
    let w = (t - lo.time_s) as f64 / span;
    Some(metric.value(lo) + w * (metric.value(hi) - metric.value(lo)))
}

pub fn compare_report(
    (label_a, a): (&str, &[SeriesPoint]),
    (label_b, b): (&str, &[SeriesPoint]),
    checkpoints: &[u64],
    metrics: &[Metric],
) -> Result<ComparisonTable, TelemetryError> {
    let range = |s: &[SeriesPoint]| Some((s.first()?.time_s, s.last()?.time_s));
    let (Some((a0, a1)), Some((b0, b1))) = (range(a), range(b)) else {
        return Err(TelemetryError::Incomparable);
    };
    if a1 < b0 || b1 < a0 {
        return Err(TelemetryError::Incomparable);
    }
    let mut rows = Vec::new();
    for &t in checkpoints {
        for &metric in metrics {
            let va = interpolate(a, t, metric);
            let vb = interpolate(b, t, metric);
            let ratio = match (va, vb) {
                (Some(x), Some(y)) if y != 0.0 => Some(x / y),
                _ => None,
            };
            rows.push(ComparisonRow { time_s: t, metric, a: va, b: vb, ratio });
        }
    }
    Ok(ComparisonTable { label_a: label_a.into(), label_b: label_b.into(), rows })
}
