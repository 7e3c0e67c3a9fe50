#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use greener_core::sim::{EventKind, TraceEvent};
use greener_core::{
    analyze, annotate, parse_program, simulate, Mode, PowerState, Program, Register, SimConfig, SimResult, Threshold,
};

pub fn fixture_text(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn fixture(name: &str) -> Program {
    parse_program(&fixture_text(name)).expect("fixture parses")
}

pub fn annotated(p: &Program, w: u32) -> Program {
    let a = analyze(p, Threshold::new(w).unwrap()).expect("valid cfg");
    annotate(p, &a).expect("annotation succeeds")
}

fn detail_field<'a>(e: &'a TraceEvent, key: &str) -> Option<&'a str> {
    e.detail.split(';').find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
}

fn pc_of(e: &TraceEvent) -> usize {
    detail_field(e, "pc").expect("event carries pc").parse().unwrap()
}

fn target_of(kind: &str) -> PowerState {
    match kind.rsplit("_to_").next().unwrap() {
        "on" => PowerState::On,
        "sleep" => PowerState::Sleep,
        "off" => PowerState::Off,
        other => panic!("unknown transition target {other}"),
    }
}

/// Replays a trace against the program and checks the simulator's
/// invariants from the events alone. Returns a description of the first
/// violation.
pub fn replay(p: &Program, cfg: &SimConfig, r: &SimResult) -> Result<(), String> {
    let trace = r.trace.as_ref().ok_or("trace not recorded")?;
    let mut last_cycle = 0;
    let mut state: BTreeMap<(usize, Register), PowerState> = BTreeMap::new();
    let initial = match cfg.mode {
        Mode::Baseline | Mode::Sleepreg => PowerState::On,
        Mode::Greener => PowerState::Off,
    };
    let mut waking: BTreeSet<(usize, Register)> = BTreeSet::new();
    let mut reserved: BTreeMap<usize, BTreeSet<Register>> = BTreeMap::new();
    let mut issued: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut sleepreg_pending: BTreeMap<(usize, Register, u64), usize> = BTreeMap::new();

    for e in trace {
        if e.cycle < last_cycle {
            return Err(format!("trace goes back in time at {e:?}"));
        }
        last_cycle = e.cycle;
        let st = |state: &BTreeMap<(usize, Register), PowerState>, r| *state.get(&(e.warp, r)).unwrap_or(&initial);
        match e.kind {
            EventKind::Read | EventKind::Write => {
                let reg = e.reg.unwrap();
                if st(&state, reg) != PowerState::On || waking.contains(&(e.warp, reg)) {
                    return Err(format!("access to a register that is not ON: {e:?}"));
                }
                let instr = &p.instructions[pc_of(e)];
                let release = e.kind == EventKind::Write || !instr.register_defs().contains(&reg);
                if release {
                    reserved.entry(e.warp).or_default().remove(&reg);
                    if cfg.mode == Mode::Sleepreg && !cfg.runtime_opt_enabled() {
                        *sleepreg_pending.entry((e.warp, reg, e.cycle)).or_default() += 1;
                    }
                }
            }
            EventKind::WakeBegin => {
                let reg = e.reg.unwrap();
                state.insert((e.warp, reg), PowerState::On);
                waking.insert((e.warp, reg));
            }
            EventKind::WakeEnd => {
                waking.remove(&(e.warp, e.reg.unwrap()));
            }
            EventKind::StateChange => {
                let reg = e.reg.unwrap();
                let to = target_of(detail_field(e, "kind").unwrap());
                state.insert((e.warp, reg), to);
                if cfg.mode == Mode::Sleepreg && !cfg.runtime_opt_enabled() {
                    if to != PowerState::Sleep {
                        return Err(format!("sleepreg moved a register to {to:?}: {e:?}"));
                    }
                    let key = (e.warp, reg, e.cycle);
                    match sleepreg_pending.get_mut(&key) {
                        Some(n) if *n > 0 => *n -= 1,
                        _ => return Err(format!("state change without an access: {e:?}")),
                    }
                }
            }
            EventKind::Issue => {
                let pc = pc_of(e);
                let instr = &p.instructions[pc];
                let res = reserved.entry(e.warp).or_default();
                if let Some(r) = instr.accessed_registers().iter().find(|r| res.contains(r)) {
                    return Err(format!("issued pc {pc} while {r} was reserved (cycle {})", e.cycle));
                }
                res.extend(instr.accessed_registers());
                issued.entry(e.warp).or_default().push(pc);
            }
            EventKind::StallScoreboard | EventKind::StallWake => {}
        }
    }
    if let Some(k) = sleepreg_pending.iter().find(|(_, n)| **n > 0) {
        return Err(format!("sleepreg access not followed by SLEEP: {k:?}"));
    }
    for (w, pcs) in &issued {
        if pcs.first() != Some(&0) {
            return Err(format!("warp {w} did not start at pc 0"));
        }
        for pair in pcs.windows(2) {
            let prev = &p.instructions[pair[0]];
            let fallthrough = pair[1] == pair[0] + 1;
            let jumped = prev.branch_target().and_then(|l| p.resolve(l)).is_some_and(|t| t.0 == pair[1]);
            if !(fallthrough || jumped) {
                return Err(format!("warp {w} issued pc {} after pc {}", pair[1], pair[0]));
            }
        }
    }
    Ok(())
}

/// Simulates twice with tracing, requires byte-identical output, then checks
/// every invariant. Panics on any violation.
pub fn run_checked(p: &Program, cfg: &SimConfig) -> SimResult {
    let cfg = SimConfig { trace: true, ..cfg.clone() };
    let a = simulate(p, &cfg).expect("simulation succeeds");
    let b = simulate(p, &cfg).expect("simulation succeeds");
    assert_eq!(a.to_json(), b.to_json(), "result JSON differs between identical runs");
    assert_eq!(a.trace_csv(), b.trace_csv(), "trace CSV differs between identical runs");
    assert_eq!(a.counters.access_violations, 0, "access legality");
    assert_eq!(a.counters.runtime_opt_violations, 0, "runtime correction guarantee");
    if cfg.mode == Mode::Baseline {
        assert!(a.energy.transitions.values().all(|n| *n == 0), "baseline transitions");
        assert_eq!(a.counters.wake_stalls, 0, "baseline wake stalls");
    }
    if let Err(e) = replay(p, &cfg, &a) {
        panic!("trace replay: {e}");
    }
    a
}
