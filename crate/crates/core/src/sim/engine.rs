use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfg::build_cfg;
use crate::energy::{EnergyLedger, TransitionKind};
use crate::gasm::{Instruction, PowerState, Program, Register};

use super::regfile::{initial_register_states, RegisterFileModel, RegisterSpace};
use super::scheduler::priority_order;
use super::trace::{EventKind, TraceEvent};
use super::{check_program, Counters, Mode, OpClass, SimConfig, SimError, SimResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Read,
    Writeback,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Read => "read",
            Phase::Writeback => "writeback",
        }
    }
}

/// Register sets and latency of one instruction, computed once.
struct Decoded {
    uses: Vec<Register>,
    defs: Vec<Register>,
    accessed: Vec<Register>,
    latency: u64,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    seq: u64,
    pc: usize,
}

#[derive(Debug)]
struct InFlight {
    warp: usize,
    slot: Slot,
    read_at: u64,
    writeback_at: u64,
}

struct Warp {
    fetch_pc: Option<usize>,
    queue: VecDeque<Slot>,
    in_flight: usize,
    finished: bool,
    completion: u64,
    rng: ChaCha8Rng,
    branch_evals: BTreeMap<usize, u32>,
}

struct Engine<'a> {
    program: &'a Program,
    cfg: &'a SimConfig,
    info: Vec<Decoded>,
    runtime_opt: bool,
    rf: RegisterFileModel,
    ledger: EnergyLedger,
    counters: Counters,
    trace: Option<Vec<TraceEvent>>,
    warps: Vec<Warp>,
    scoreboard: Vec<BTreeSet<Register>>,
    /// Decoded instructions not yet written back, per warp.
    lookup: Vec<Vec<Slot>>,
    in_flight: Vec<InFlight>,
    last_issued: Option<usize>,
    next_seq: u64,
}

fn warp_rng(seed: u64, warp: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (warp as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Runs every warp of `program` to completion and returns the measured
/// cycles, energy and event counters.
pub fn simulate(program: &Program, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    check_program(program, cfg)?;
    build_cfg(program)?;

    let info = program
        .instructions
        .iter()
        .map(|i| Decoded {
            uses: i.register_uses(),
            defs: i.register_defs(),
            accessed: i.accessed_registers(),
            latency: u64::from(cfg.latency(OpClass::of(i))),
        })
        .collect::<Vec<_>>();
    let rf = initial_register_states(cfg, RegisterSpace::new(cfg.registers_per_thread, program));
    let ledger = EnergyLedger::new(cfg.power, cfg.clock_hz, rf.file_registers());
    let warps = (0..cfg.warps)
        .map(|w| Warp {
            fetch_pc: Some(0),
            queue: VecDeque::new(),
            in_flight: 0,
            finished: false,
            completion: 0,
            rng: warp_rng(cfg.seed, w),
            branch_evals: BTreeMap::new(),
        })
        .collect();

    let engine = Engine {
        program,
        cfg,
        info,
        runtime_opt: cfg.runtime_opt_enabled(),
        rf,
        ledger,
        counters: Counters::default(),
        trace: cfg.trace.then(Vec::new),
        warps,
        scoreboard: vec![BTreeSet::new(); cfg.warps],
        lookup: vec![Vec::new(); cfg.warps],
        in_flight: Vec::new(),
        last_issued: None,
        next_seq: 0,
    };
    engine.run()
}

impl<'a> Engine<'a> {
    fn instr(&self, pc: usize) -> &'a Instruction {
        &self.program.instructions[pc]
    }

    fn emit(&mut self, cycle: u64, warp: usize, kind: EventKind, reg: Option<Register>, detail: String) {
        if let Some(t) = &mut self.trace {
            t.push(TraceEvent { cycle, warp, kind, reg, detail });
        }
    }

    fn run(mut self) -> Result<SimResult, SimError> {
        let mut now = 0u64;
        loop {
            if now >= self.cfg.max_cycles {
                return Err(SimError::CycleLimit(self.cfg.max_cycles));
            }
            self.finish_wakes(now);
            self.writeback(now);
            self.read_operands(now);
            self.issue(now);
            self.decode();
            self.retire_warps(now);
            self.sample_lookup();
            self.ledger.accrue_cycle(&self.rf.census())?;
            if self.warps.iter().all(|w| w.finished) {
                break;
            }
            now += 1;
        }
        Ok(SimResult {
            mode: self.cfg.mode,
            program: self.program.fingerprint(),
            cycles: now + 1,
            warp_completion: self.warps.iter().map(|w| w.completion).collect(),
            energy: self.ledger,
            counters: self.counters,
            trace: self.trace,
        })
    }

    fn finish_wakes(&mut self, now: u64) {
        for (w, r) in self.rf.finish_wakes(now) {
            self.emit(now, w, EventKind::WakeEnd, Some(r), String::new());
        }
    }

    fn check_access(&mut self, now: u64, warp: usize, r: Register, kind: EventKind, pc: usize) {
        if !self.rf.is_accessible(warp, r) {
            self.counters.access_violations += 1;
        }
        self.emit(now, warp, kind, Some(r), format!("pc={pc}"));
    }

    fn referenced_elsewhere(&self, warp: usize, pc: usize, r: Register) -> bool {
        self.lookup[warp].iter().any(|slot| slot.pc != pc && self.info[slot.pc].accessed.contains(&r))
    }

    /// Sets the state `r` should hold after instruction `pc` accessed it.
    fn apply_post_access_state(&mut self, now: u64, warp: usize, pc: usize, r: Register, phase: Phase) {
        let target = match self.cfg.mode {
            Mode::Baseline => return,
            Mode::Sleepreg => PowerState::Sleep,
            Mode::Greener => self.instr(pc).encoded_state(r).unwrap_or(PowerState::Sleep),
        };
        if target == PowerState::On {
            return;
        }
        if self.runtime_opt && self.referenced_elsewhere(warp, pc, r) {
            self.counters.runtime_opt_overrides += 1;
            return;
        }
        if let Some(kind) = self.rf.set_state(warp, r, target) {
            if self.runtime_opt && self.referenced_elsewhere(warp, pc, r) {
                self.counters.runtime_opt_violations += 1;
            }
            self.ledger.record_transition(kind);
            self.emit(
                now,
                warp,
                EventKind::StateChange,
                Some(r),
                format!("pc={pc};kind={};phase={}", kind.name(), phase.name()),
            );
        }
    }

    fn writeback(&mut self, now: u64) {
        let (done, rest): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.in_flight).into_iter().partition(|f| f.writeback_at == now);
        self.in_flight = rest;
        for f in done {
            let pc = f.slot.pc;
            for r in self.info[pc].defs.clone() {
                self.check_access(now, f.warp, r, EventKind::Write, pc);
                self.apply_post_access_state(now, f.warp, pc, r, Phase::Writeback);
                self.scoreboard[f.warp].remove(&r);
            }
            self.lookup[f.warp].retain(|s| s.seq != f.slot.seq);
            let w = &mut self.warps[f.warp];
            w.in_flight -= 1;
            w.completion = now;
        }
    }

    fn read_operands(&mut self, now: u64) {
        let due: Vec<(usize, usize)> =
            self.in_flight.iter().filter(|f| f.read_at == now).map(|f| (f.warp, f.slot.pc)).collect();
        for (warp, pc) in due {
            for r in self.info[pc].uses.clone() {
                self.check_access(now, warp, r, EventKind::Read, pc);
                if !self.info[pc].defs.contains(&r) {
                    self.apply_post_access_state(now, warp, pc, r, Phase::Read);
                    self.scoreboard[warp].remove(&r);
                }
            }
        }
    }

    /// Wakes every register of the head instruction that is not ON. Returns
    /// whether all of them are accessible now.
    fn wake_for(&mut self, now: u64, warp: usize, pc: usize) -> bool {
        let mut ready = true;
        for r in self.info[pc].accessed.clone() {
            if self.rf.is_waking(warp, r) {
                ready = false;
                continue;
            }
            let from = self.rf.state(warp, r);
            if from == PowerState::On {
                continue;
            }
            let kind = TransitionKind::between(from, PowerState::On).expect("wake-up transition");
            let latency = self.cfg.wake_latency(kind);
            self.rf.begin_wake(warp, r, now, latency);
            self.ledger.record_transition(kind);
            *self.counters.wake_ups.entry(kind).or_default() += 1;
            self.emit(now, warp, EventKind::WakeBegin, Some(r), format!("pc={pc};kind={}", kind.name()));
            if latency == 0 {
                self.emit(now, warp, EventKind::WakeEnd, Some(r), String::new());
            } else {
                ready = false;
            }
        }
        ready
    }

    fn issue(&mut self, now: u64) {
        let order = priority_order(self.cfg.scheduler, self.last_issued, self.warps.len());
        for w in order {
            let Some(&slot) = self.warps[w].queue.front() else { continue };
            let pc = slot.pc;
            let conflict = self.info[pc].accessed.iter().any(|r| self.scoreboard[w].contains(r));
            if conflict {
                self.counters.scoreboard_stalls += 1;
                self.emit(now, w, EventKind::StallScoreboard, None, format!("pc={pc}"));
                continue;
            }
            if !self.wake_for(now, w, pc) {
                self.counters.wake_stalls += 1;
                self.emit(now, w, EventKind::StallWake, None, format!("pc={pc}"));
                continue;
            }
            self.warps[w].queue.pop_front();
            self.warps[w].in_flight += 1;
            for &r in &self.info[pc].accessed {
                self.scoreboard[w].insert(r);
            }
            self.in_flight.push(InFlight {
                warp: w,
                slot,
                read_at: now + 1,
                writeback_at: now + 1 + self.info[pc].latency,
            });
            self.counters.issued += 1;
            self.last_issued = Some(w);
            self.emit(now, w, EventKind::Issue, None, format!("pc={pc}"));
            return;
        }
        if self.warps.iter().any(|w| !w.finished) {
            self.counters.idle_cycles += 1;
        }
    }

    fn branch_taken(&mut self, warp: usize, pc: usize) -> bool {
        let instr = self.instr(pc);
        let trip = instr.branch_target().and_then(|l| self.cfg.trip_counts.get(l)).copied();
        let w = &mut self.warps[warp];
        match trip {
            Some(n) => {
                let seen = w.branch_evals.entry(pc).or_default();
                *seen += 1;
                *seen <= n
            }
            None => w.rng.random_bool(self.cfg.branch_taken_probability),
        }
    }

    fn next_pc(&mut self, warp: usize, pc: usize) -> Option<usize> {
        let instr = self.instr(pc);
        let taken = instr.guard.is_none() || self.branch_taken(warp, pc);
        if instr.is_exit() {
            return if taken { None } else { Some(pc + 1) };
        }
        if instr.is_branch() && taken {
            let label = instr.branch_target().expect("branch has a label target");
            return Some(self.program.resolve(label).expect("label resolved by the parser").0);
        }
        Some(pc + 1)
    }

    fn decode(&mut self) {
        for w in 0..self.warps.len() {
            let warp = &self.warps[w];
            let Some(pc) = warp.fetch_pc else { continue };
            if warp.queue.len() >= self.cfg.decode_depth {
                continue;
            }
            let slot = Slot { seq: self.next_seq, pc };
            self.next_seq += 1;
            self.warps[w].queue.push_back(slot);
            self.lookup[w].push(slot);
            let next = self.next_pc(w, pc);
            self.warps[w].fetch_pc = next;
        }
    }

    fn retire_warps(&mut self, now: u64) {
        for w in &mut self.warps {
            if !w.finished && w.fetch_pc.is_none() && w.queue.is_empty() && w.in_flight == 0 {
                w.finished = true;
                w.completion = w.completion.max(now);
            }
        }
    }

    fn sample_lookup(&mut self) {
        for (w, entries) in self.warps.iter().zip(&self.lookup) {
            if w.finished {
                continue;
            }
            let n = entries.len() as u64;
            self.counters.lookup_entry_cycles += n;
            self.counters.active_warp_cycles += 1;
            self.counters.lookup_peak_entries = self.counters.lookup_peak_entries.max(n);
        }
    }
}
