//! Register-file leakage accounting.
//!
//! The ledger keeps exact integer tallies of register-cycles spent in each
//! power state plus integer transition counts. Joules are derived from those
//! tallies on demand, so the reported leakage is always the closed form
//! `sum(tally[state] * p[state]) / clock_hz` and two runs with equal tallies
//! report bit-identical energies.

mod activity;
mod overhead;
mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gasm::PowerState;

pub use activity::{activity_stats, ActivityStats};
pub use overhead::{ceil_log2, lookup_table_bits, scoreboard_overhead_bits};
pub use report::{compare_report, Report, ReportError, ReportRow};

/// Leakage power per warp-register in each state and the energy of one
/// state transition. Powers are in watts; the defaults are normalized to
/// `p_on = 1` because per-register leakage figures are technology specific.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerParams {
    pub p_on: f64,
    pub p_sleep: f64,
    pub p_off: f64,
    /// Joules per SLEEP<->ON event.
    pub e_sleep_transition: f64,
    /// Joules per OFF<->ON (and SLEEP->OFF) event.
    pub e_off_transition: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self { p_on: 1.0, p_sleep: 0.2, p_off: 0.02, e_sleep_transition: 0.0633e-9, e_off_transition: 0.198e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnergyError {
    #[error("invalid power parameters: {0}")]
    InvalidParams(String),
    #[error("state census covers {found} registers, register file has {expected}")]
    CensusMismatch { expected: u64, found: u64 },
}

impl PowerParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let all = [self.p_on, self.p_sleep, self.p_off, self.e_sleep_transition, self.e_off_transition];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(EnergyError::InvalidParams("values must be finite and non-negative".into()));
        }
        if !(self.p_on >= self.p_sleep && self.p_sleep >= self.p_off) {
            return Err(EnergyError::InvalidParams("need p_on >= p_sleep >= p_off".into()));
        }
        Ok(())
    }

    pub fn power(&self, s: PowerState) -> f64 {
        match s {
            PowerState::On => self.p_on,
            PowerState::Sleep => self.p_sleep,
            PowerState::Off => self.p_off,
        }
    }

    pub fn transition_energy(&self, kind: TransitionKind) -> f64 {
        match kind {
            TransitionKind::SleepToOn | TransitionKind::OnToSleep => self.e_sleep_transition,
            TransitionKind::OffToOn | TransitionKind::OnToOff | TransitionKind::SleepToOff => self.e_off_transition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    SleepToOn,
    OnToSleep,
    OffToOn,
    OnToOff,
    SleepToOff,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 5] = [
        TransitionKind::SleepToOn,
        TransitionKind::OnToSleep,
        TransitionKind::OffToOn,
        TransitionKind::OnToOff,
        TransitionKind::SleepToOff,
    ];

    pub fn between(from: PowerState, to: PowerState) -> Option<Self> {
        use PowerState::*;
        match (from, to) {
            (Sleep, On) => Some(Self::SleepToOn),
            (On, Sleep) => Some(Self::OnToSleep),
            (Off, On) => Some(Self::OffToOn),
            (On, Off) => Some(Self::OnToOff),
            (Sleep, Off) => Some(Self::SleepToOff),
            _ => None,
        }
    }

    pub fn is_wake(self) -> bool {
        matches!(self, Self::SleepToOn | Self::OffToOn)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SleepToOn => "sleep_to_on",
            Self::OnToSleep => "on_to_sleep",
            Self::OffToOn => "off_to_on",
            Self::OnToOff => "on_to_off",
            Self::SleepToOff => "sleep_to_off",
        }
    }
}

/// Number of registers currently in each state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub on: u64,
    pub sleep: u64,
    pub off: u64,
}

impl Census {
    pub fn total(&self) -> u64 {
        self.on + self.sleep + self.off
    }

    pub fn get(&self, s: PowerState) -> u64 {
        match s {
            PowerState::On => self.on,
            PowerState::Sleep => self.sleep,
            PowerState::Off => self.off,
        }
    }

    pub fn get_mut(&mut self, s: PowerState) -> &mut u64 {
        match s {
            PowerState::On => &mut self.on,
            PowerState::Sleep => &mut self.sleep,
            PowerState::Off => &mut self.off,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub params: PowerParams,
    pub clock_hz: f64,
    pub file_registers: u64,
    /// Register-cycles spent in each state.
    pub tally: Census,
    pub cycles: u64,
    pub transitions: BTreeMap<TransitionKind, u64>,
}

impl EnergyLedger {
    pub fn new(params: PowerParams, clock_hz: f64, file_registers: u64) -> Self {
        Self {
            params,
            clock_hz,
            file_registers,
            tally: Census::default(),
            cycles: 0,
            transitions: TransitionKind::ALL.iter().map(|k| (*k, 0)).collect(),
        }
    }

    /// Charges one clock cycle of leakage for the given state census.
    pub fn accrue_cycle(&mut self, census: &Census) -> Result<(), EnergyError> {
        if census.total() != self.file_registers {
            return Err(EnergyError::CensusMismatch { expected: self.file_registers, found: census.total() });
        }
        self.tally.on += census.on;
        self.tally.sleep += census.sleep;
        self.tally.off += census.off;
        self.cycles += 1;
        Ok(())
    }

    pub fn record_transition(&mut self, kind: TransitionKind) {
        *self.transitions.entry(kind).or_default() += 1;
    }

    pub fn transition_count(&self, kind: TransitionKind) -> u64 {
        self.transitions.get(&kind).copied().unwrap_or(0)
    }

    pub fn leakage_j(&self) -> f64 {
        let p = &self.params;
        (self.tally.on as f64 * p.p_on + self.tally.sleep as f64 * p.p_sleep + self.tally.off as f64 * p.p_off)
            / self.clock_hz
    }

    pub fn transition_j(&self) -> f64 {
        self.transitions.iter().map(|(k, n)| *n as f64 * self.params.transition_energy(*k)).sum()
    }

    pub fn total_j(&self) -> f64 {
        self.leakage_j() + self.transition_j()
    }
}
