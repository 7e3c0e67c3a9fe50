use std::collections::BTreeMap;

use crate::energy::{Census, TransitionKind};
use crate::gasm::{PowerState, Program, RegKind, Register};

use super::{Mode, SimConfig};

/// The registers one warp slot provides: `$r0..$r{R-1}` plus whichever
/// predicate, offset and output registers the program names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterSpace {
    regs: Vec<Register>,
    index: BTreeMap<Register, usize>,
}

impl RegisterSpace {
    pub fn new(registers_per_thread: u32, program: &Program) -> Self {
        let mut regs: Vec<Register> = (0..registers_per_thread).map(Register::r).collect();
        regs.extend(program.registers().into_iter().filter(|r| r.kind != RegKind::General));
        let index = regs.iter().enumerate().map(|(i, r)| (*r, i)).collect();
        Self { regs, index }
    }

    pub fn len(&self) -> usize {
        self.regs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regs.is_empty()
    }

    pub fn registers(&self) -> &[Register] {
        &self.regs
    }

    pub fn position(&self, r: Register) -> Option<usize> {
        self.index.get(&r).copied()
    }
}

/// Power state of every physical warp-register.
#[derive(Debug, Clone)]
pub struct RegisterFileModel {
    space: RegisterSpace,
    slots: usize,
    state: Vec<PowerState>,
    allocated: Vec<bool>,
    /// Cycle at which a register that is powering up becomes usable.
    pending_wake: BTreeMap<usize, u64>,
    census: Census,
}

impl RegisterFileModel {
    fn flat(&self, warp: usize, r: Register) -> usize {
        let pos =
            self.space.position(r).unwrap_or_else(|| panic!("register {r} is outside the modelled register file"));
        warp * self.space.len() + pos
    }

    pub fn space(&self) -> &RegisterSpace {
        &self.space
    }

    pub fn file_registers(&self) -> u64 {
        self.state.len() as u64
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn census(&self) -> Census {
        self.census
    }

    pub fn state(&self, warp: usize, r: Register) -> PowerState {
        self.state[self.flat(warp, r)]
    }

    pub fn is_allocated(&self, warp: usize, r: Register) -> bool {
        self.allocated[self.flat(warp, r)]
    }

    pub fn allocated_count(&self) -> usize {
        self.allocated.iter().filter(|a| **a).count()
    }

    pub fn is_waking(&self, warp: usize, r: Register) -> bool {
        self.pending_wake.contains_key(&self.flat(warp, r))
    }

    /// ON with no wake-up in progress.
    pub fn is_accessible(&self, warp: usize, r: Register) -> bool {
        self.state(warp, r) == PowerState::On && !self.is_waking(warp, r)
    }

    /// Moves a register to `to`, returning the transition taken, if any.
    pub fn set_state(&mut self, warp: usize, r: Register, to: PowerState) -> Option<TransitionKind> {
        let i = self.flat(warp, r);
        let from = self.state[i];
        if from == to {
            return None;
        }
        *self.census.get_mut(from) -= 1;
        *self.census.get_mut(to) += 1;
        self.state[i] = to;
        TransitionKind::between(from, to)
    }

    /// Powers a register up. It is ON from now on for leakage purposes but
    /// cannot be accessed until `ready_at`.
    pub fn begin_wake(&mut self, warp: usize, r: Register, now: u64, latency: u32) -> Option<TransitionKind> {
        let kind = self.set_state(warp, r, PowerState::On)?;
        if latency > 0 {
            let i = self.flat(warp, r);
            self.pending_wake.insert(i, now + u64::from(latency));
        }
        Some(kind)
    }

    /// Completes every wake-up due at or before `now`, returning the
    /// (warp, register) pairs that became accessible.
    pub fn finish_wakes(&mut self, now: u64) -> Vec<(usize, Register)> {
        let due: Vec<usize> = self.pending_wake.iter().filter(|(_, ready)| **ready <= now).map(|(i, _)| *i).collect();
        let n = self.space.len();
        due.into_iter()
            .map(|i| {
                self.pending_wake.remove(&i);
                (i / n, self.space.registers()[i % n])
            })
            .collect()
    }
}

/// Power states at cycle 0. Active warps own every register of their slot;
/// slots beyond `cfg.warps` are unallocated.
///
/// - baseline: everything ON
/// - sleepreg: allocated ON, unallocated OFF
/// - greener: everything OFF; the first write wakes a register
pub fn initial_register_states(cfg: &SimConfig, space: RegisterSpace) -> RegisterFileModel {
    let slots = cfg.slots();
    let per = space.len();
    let total = slots * per;
    let allocated: Vec<bool> = (0..total).map(|i| i / per < cfg.warps).collect();
    let state: Vec<PowerState> = allocated
        .iter()
        .map(|&a| match cfg.mode {
            Mode::Baseline => PowerState::On,
            Mode::Sleepreg if a => PowerState::On,
            Mode::Sleepreg | Mode::Greener => PowerState::Off,
        })
        .collect();
    let mut census = Census::default();
    for s in &state {
        *census.get_mut(*s) += 1;
    }
    RegisterFileModel { space, slots, state, allocated, pending_wake: BTreeMap::new(), census }
}
