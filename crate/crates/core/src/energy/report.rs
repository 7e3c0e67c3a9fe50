use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::{Mode, SimResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: Mode,
    pub cycles: u64,
    pub leakage_nj: f64,
    pub transition_nj: f64,
    pub total_nj: f64,
    pub transitions: BTreeMap<String, u64>,
    pub stalls: BTreeMap<String, u64>,
    pub runtime_opt_overrides: u64,
    /// `None` when no baseline run is part of the comparison.
    pub reduction_vs_baseline_pct: Option<f64>,
    pub cycle_overhead_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub program: String,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn row(&self, mode: Mode) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("results come from different programs ({0} vs {1})")]
    ProgramMismatch(String, String),
    #[error("no results to compare")]
    Empty,
}

fn pct(base: f64, value: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        100.0 * value / base
    }
}

pub(crate) fn row_for(r: &SimResult, baseline: Option<&SimResult>) -> ReportRow {
    let e = &r.energy;
    let total = e.total_j();
    ReportRow {
        mode: r.mode,
        cycles: r.cycles,
        leakage_nj: e.leakage_j() * 1e9,
        transition_nj: e.transition_j() * 1e9,
        total_nj: total * 1e9,
        transitions: e.transitions.iter().map(|(k, n)| (k.name().to_string(), *n)).collect(),
        stalls: BTreeMap::from([
            ("scoreboard".to_string(), r.counters.scoreboard_stalls),
            ("wake".to_string(), r.counters.wake_stalls),
            ("idle_cycles".to_string(), r.counters.idle_cycles),
        ]),
        runtime_opt_overrides: r.counters.runtime_opt_overrides,
        reduction_vs_baseline_pct: baseline.map(|b| {
            let eb = b.energy.total_j();
            pct(eb, eb - total)
        }),
        cycle_overhead_pct: baseline.map(|b| {
            let cb = b.cycles as f64;
            pct(cb, r.cycles as f64 - cb)
        }),
    }
}

/// One row per mode; reductions and overheads are relative to the baseline
/// run when one is present.
pub fn compare_report(results: &BTreeMap<Mode, SimResult>) -> Result<Report, ReportError> {
    let first = results.values().next().ok_or(ReportError::Empty)?;
    for r in results.values() {
        if r.program != first.program {
            return Err(ReportError::ProgramMismatch(first.program.clone(), r.program.clone()));
        }
    }
    let baseline = results.get(&Mode::Baseline);
    Ok(Report { program: first.program.clone(), rows: results.values().map(|r| row_for(r, baseline)).collect() })
}
