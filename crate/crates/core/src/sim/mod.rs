//! Cycle-level model of one SM's warp pipeline with a power-managed
//! register file.
//!
//! Each cycle, in order: pending wake-ups advance; instructions whose
//! execution finished write back (destination states applied, scoreboard
//! and lookup-table entries released); instructions issued last cycle read
//! their operands (source states applied); the scheduler issues at most one
//! instruction; every warp decodes at most one instruction into its
//! two-entry decoded queue; and leakage for the cycle is charged.

mod engine;
mod regfile;
mod scheduler;
mod trace;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cfg::CfgError;
use crate::energy::{EnergyError, EnergyLedger, PowerParams, TransitionKind};
use crate::gasm::{Instruction, Program, Register};

pub use engine::simulate;
pub use regfile::{initial_register_states, RegisterFileModel, RegisterSpace};
pub use scheduler::{priority_order, scheduler_pick};
pub use trace::{trace_csv, EventKind, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// No power management: every register stays ON.
    Baseline,
    /// Unallocated registers OFF; every access is followed by SLEEP.
    Sleepreg,
    /// States come from the instruction's power list.
    Greener,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Baseline, Mode::Sleepreg, Mode::Greener];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Sleepreg => "sleepreg",
            Mode::Greener => "greener",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected baseline, sleepreg or greener)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    /// Loose round-robin.
    #[default]
    Lrr,
    /// Greedy-then-oldest.
    Gto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpcodeLatency {
    pub alu: u32,
    pub compare: u32,
    pub branch: u32,
}

impl Default for OpcodeLatency {
    fn default() -> Self {
        Self { alu: 4, compare: 1, branch: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpClass {
    Alu,
    Compare,
    Branch,
    Mem,
}

impl OpClass {
    pub fn of(i: &Instruction) -> Self {
        match i.opcode.as_str() {
            "ld" | "st" | "tex" | "atom" | "red" => OpClass::Mem,
            "mov" if i.destinations.iter().chain(&i.sources).any(|o| o.is_memory()) => OpClass::Mem,
            "set" | "setp" => OpClass::Compare,
            "bra" | "exit" | "ssy" | "ret" | "nop" | "bar" | "retp" | "brk" => OpClass::Branch,
            _ => OpClass::Alu,
        }
    }
}

/// Simulation parameters. The JSON form uses these field names; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub warps: usize,
    /// Resident warp capacity of the register file; defaults to `warps`.
    /// Slots beyond `warps` hold only unallocated registers.
    pub warp_slots: Option<usize>,
    pub registers_per_thread: u32,
    pub mode: Mode,
    /// Lookup-table correction of SLEEP/OFF decisions. Unset means on for
    /// `greener` and off otherwise.
    pub runtime_opt: Option<bool>,
    pub scheduler: Scheduler,
    pub wake_sleep_cycles: u32,
    pub wake_off_cycles: u32,
    pub clock_hz: f64,
    pub opcode_latency: OpcodeLatency,
    pub mem_latency: u32,
    pub decode_depth: usize,
    pub power: PowerParams,
    /// Seed of the per-warp stream that resolves guarded branches.
    pub seed: u64,
    pub branch_taken_probability: f64,
    /// Per branch-target label: the branch is taken this many times per
    /// warp, then falls through. Overrides the random stream.
    pub trip_counts: BTreeMap<String, u32>,
    pub max_cycles: u64,
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            warps: 8,
            warp_slots: None,
            registers_per_thread: 16,
            mode: Mode::Baseline,
            runtime_opt: None,
            scheduler: Scheduler::Lrr,
            wake_sleep_cycles: 1,
            wake_off_cycles: 2,
            clock_hz: 732e6,
            opcode_latency: OpcodeLatency::default(),
            mem_latency: 100,
            decode_depth: 2,
            power: PowerParams::default(),
            seed: 0,
            branch_taken_probability: 0.5,
            trip_counts: BTreeMap::new(),
            max_cycles: 10_000_000,
            trace: false,
        }
    }
}

impl SimConfig {
    pub fn runtime_opt_enabled(&self) -> bool {
        self.runtime_opt.unwrap_or(self.mode == Mode::Greener)
    }

    pub fn slots(&self) -> usize {
        self.warp_slots.unwrap_or(self.warps)
    }

    pub fn latency(&self, class: OpClass) -> u32 {
        match class {
            OpClass::Alu => self.opcode_latency.alu,
            OpClass::Compare => self.opcode_latency.compare,
            OpClass::Branch => self.opcode_latency.branch,
            OpClass::Mem => self.mem_latency,
        }
    }

    pub fn wake_latency(&self, kind: TransitionKind) -> u32 {
        match kind {
            TransitionKind::SleepToOn => self.wake_sleep_cycles,
            _ => self.wake_off_cycles,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.warps == 0 {
            return bad("warps must be at least 1");
        }
        if self.slots() < self.warps {
            return bad("warp_slots must be at least warps");
        }
        if self.registers_per_thread == 0 {
            return bad("registers_per_thread must be at least 1");
        }
        if self.wake_off_cycles < self.wake_sleep_cycles {
            return bad("wake_off_cycles must be >= wake_sleep_cycles");
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return bad("clock_hz must be positive");
        }
        let l = &self.opcode_latency;
        if l.alu == 0 || l.compare == 0 || l.branch == 0 || self.mem_latency == 0 {
            return bad("latencies must be at least 1 cycle");
        }
        if self.decode_depth == 0 {
            return bad("decode_depth must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.branch_taken_probability) {
            return bad("branch_taken_probability must lie in [0, 1]");
        }
        self.power.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("greener mode needs a program annotated with power states")]
    Unannotated,
    #[error("register {reg} exceeds the {limit} registers per thread")]
    RegisterOutOfRange { reg: Register, limit: u32 },
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("simulation did not finish within {0} cycles")]
    CycleLimit(u64),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub issued: u64,
    pub wake_ups: BTreeMap<TransitionKind, u64>,
    pub runtime_opt_overrides: u64,
    pub scoreboard_stalls: u64,
    pub wake_stalls: u64,
    pub idle_cycles: u64,
    pub lookup_peak_entries: u64,
    /// Sum over cycles of lookup-table entries per active warp, for averaging.
    pub lookup_entry_cycles: u64,
    pub active_warp_cycles: u64,
    /// Register accesses observed while the register was not ON.
    pub access_violations: u64,
    /// SLEEP/OFF transitions made while another in-flight instruction of the
    /// same warp still referenced the register (runtime correction on).
    pub runtime_opt_violations: u64,
}

impl Counters {
    pub fn wake_count(&self, kind: TransitionKind) -> u64 {
        self.wake_ups.get(&kind).copied().unwrap_or(0)
    }

    pub fn mean_lookup_entries(&self) -> f64 {
        if self.active_warp_cycles == 0 {
            0.0
        } else {
            self.lookup_entry_cycles as f64 / self.active_warp_cycles as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mode: Mode,
    /// Fingerprint of the power-stripped program.
    pub program: String,
    pub cycles: u64,
    pub warp_completion: Vec<u64>,
    pub energy: EnergyLedger,
    pub counters: Counters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEvent>>,
}

impl SimResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }

    pub fn trace_csv(&self) -> Option<String> {
        self.trace.as_deref().map(trace_csv)
    }

    /// Cycles each warp was resident, from cycle 0 through its last writeback.
    pub fn lifetimes(&self) -> Vec<u64> {
        self.warp_completion.iter().map(|c| c + 1).collect()
    }
}

pub(crate) fn check_program(p: &Program, cfg: &SimConfig) -> Result<(), SimError> {
    if cfg.mode == Mode::Greener && !p.is_annotated() {
        return Err(SimError::Unannotated);
    }
    for r in p.registers() {
        if r.kind == crate::gasm::RegKind::General && r.index >= cfg.registers_per_thread {
            return Err(SimError::RegisterOutOfRange { reg: r, limit: cfg.registers_per_thread });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_rejects_unknown_keys() {
        let err = serde_json::from_str::<SimConfig>(r#"{"warps": 2, "wrap": 3}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
        let ok: SimConfig = serde_json::from_str(r#"{"warps": 2, "mode": "greener"}"#).unwrap();
        assert_eq!(ok.warps, 2);
        assert!(ok.runtime_opt_enabled());
        assert_eq!(ok.registers_per_thread, 16);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let c = SimConfig { wake_sleep_cycles: 3, wake_off_cycles: 2, ..SimConfig::default() };
        assert!(matches!(c.validate(), Err(SimError::InvalidConfig(_))));
        let c = SimConfig { warps: 4, warp_slots: Some(2), ..SimConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn runtime_opt_defaults_follow_mode() {
        assert!(!SimConfig::default().runtime_opt_enabled());
        let c = SimConfig { mode: Mode::Greener, runtime_opt: Some(false), ..SimConfig::default() };
        assert!(!c.runtime_opt_enabled());
    }

    #[test]
    fn opcode_classes() {
        let p = crate::gasm::parse_program(
            "ld.global.u32 $r1, [$r2];\nmov.u32 s[0x0010], $r1;\nmov.u32 $r3, $r1;\n\
             set.lt.s32.s32 $p0/$o127, $r1, $r3;\nadd.half.u32 $r4, s[0x0018], $r1;\nexit;",
        )
        .unwrap();
        let classes: Vec<_> = p.instructions.iter().map(OpClass::of).collect();
        assert_eq!(
            classes,
            vec![OpClass::Mem, OpClass::Mem, OpClass::Alu, OpClass::Compare, OpClass::Alu, OpClass::Branch]
        );
    }
}
