use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::gasm::Register;
use crate::sim::{EventKind, TraceEvent};

/// Share of a warp's lifetime during which each register was read or written.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityStats {
    pub per_warp: BTreeMap<(usize, Register), f64>,
    /// Mean over warps, per register.
    pub per_register: BTreeMap<Register, f64>,
    /// Mean over every (warp, register) pair.
    pub overall: f64,
}

/// `lifetimes[w]` is the number of cycles warp `w` was resident.
pub fn activity_stats(trace: &[TraceEvent], lifetimes: &[u64], registers: &[Register]) -> ActivityStats {
    let mut cycles: BTreeMap<(usize, Register), BTreeSet<u64>> = BTreeMap::new();
    for ev in trace {
        if matches!(ev.kind, EventKind::Read | EventKind::Write) {
            if let Some(r) = ev.reg {
                cycles.entry((ev.warp, r)).or_default().insert(ev.cycle);
            }
        }
    }
    let mut per_warp = BTreeMap::new();
    for (w, &life) in lifetimes.iter().enumerate() {
        for &r in registers {
            let hits = cycles.get(&(w, r)).map_or(0, BTreeSet::len);
            let frac = if life == 0 { 0.0 } else { hits as f64 / life as f64 };
            per_warp.insert((w, r), frac);
        }
    }
    let per_register = registers
        .iter()
        .map(|&r| {
            let vals: Vec<f64> = (0..lifetimes.len()).map(|w| per_warp[&(w, r)]).collect();
            let mean = if vals.is_empty() { 0.0 } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            (r, mean)
        })
        .collect();
    let overall = if per_warp.is_empty() { 0.0 } else { per_warp.values().sum::<f64>() / per_warp.len() as f64 };
    ActivityStats { per_warp, per_register, overall }
}
