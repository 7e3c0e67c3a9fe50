//! Register liveness and saturating next-access distance, combined into a
//! per-instruction power state for every accessed register.
//!
//! Distance is counted in instructions: `Dist(IN(S), R)` is 1 when `S`
//! accesses `R`, otherwise one more than `Dist(OUT(S), R)`, saturating to
//! [`Distance::Inf`] once it would exceed the threshold. `Dist(OUT(S), R)` is
//! the maximum over successors, and Exit contributes `Inf`. Both analyses are
//! solved by worklist iteration from the lattice bottom (`false` for
//! liveness, `1` for distance), which yields the least fixpoint: on a cycle
//! that never touches `R` the distance climbs until it saturates.

pub mod oracle;
mod solver;

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use crate::cfg::{build_cfg, Cfg, CfgError, Point, Side};
use crate::gasm::{InstrId, PowerState, Program, Register};
use solver::{solve_backward, BackwardProblem};

/// Instruction-count threshold `W` beyond which a distance saturates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold(u32);

impl Threshold {
    pub const DEFAULT: Threshold = Threshold(3);

    pub fn new(w: u32) -> Option<Self> {
        (w >= 1).then_some(Threshold(w))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Elements of the chain `1 < 2 < ... < W < Inf`. The derived order puts
/// every finite value below `Inf`, so `max` is the lattice join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(u32),
    Inf,
}

impl Distance {
    pub const BOTTOM: Distance = Distance::Finite(1);

    pub fn is_inf(self) -> bool {
        self == Distance::Inf
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(k) => write!(f, "{k}"),
            Distance::Inf => f.write_str("inf"),
        }
    }
}

/// Saturating increment.
pub fn inc(x: Distance, w: Threshold) -> Distance {
    match x {
        Distance::Finite(k) if k < w.get() => Distance::Finite(k + 1),
        _ => Distance::Inf,
    }
}

pub fn sleep_off(d: Distance) -> bool {
    d.is_inf()
}

/// The four-row decision table from liveness and the sleep/off flag.
pub fn classify(live: bool, sleep_off: bool) -> PowerState {
    match (live, sleep_off) {
        (true, true) => PowerState::Sleep,
        (true, false) => PowerState::On,
        (false, true) => PowerState::Off,
        (false, false) => PowerState::On,
    }
}

/// Per-instruction register access sets, indexed by the analysis' dense
/// register numbering.
struct AccessSets {
    uses: Vec<Vec<usize>>,
    defs: Vec<Vec<usize>>,
    accessed: Vec<Vec<bool>>,
}

impl AccessSets {
    fn new(p: &Program, regs: &[Register]) -> Self {
        let idx = |r: &Register| regs.binary_search(r).expect("register universe is complete");
        let uses = p.instructions.iter().map(|i| i.register_uses().iter().map(idx).collect()).collect();
        let defs = p.instructions.iter().map(|i| i.register_defs().iter().map(idx).collect()).collect();
        let accessed = p
            .instructions
            .iter()
            .map(|i| {
                let mut row = vec![false; regs.len()];
                for r in i.accessed_registers() {
                    row[idx(&r)] = true;
                }
                row
            })
            .collect();
        Self { uses, defs, accessed }
    }
}

struct Liveness<'a> {
    sets: &'a AccessSets,
    nregs: usize,
}

impl BackwardProblem for Liveness<'_> {
    type Fact = Vec<bool>;

    fn bottom(&self) -> Vec<bool> {
        vec![false; self.nregs]
    }

    fn exit_fact(&self) -> Vec<bool> {
        vec![false; self.nregs]
    }

    fn merge(&self, acc: &mut Vec<bool>, other: &Vec<bool>) {
        for (a, b) in acc.iter_mut().zip(other) {
            *a |= *b;
        }
    }

    fn transfer(&self, instr: InstrId, out: &Vec<bool>) -> Vec<bool> {
        let mut v = out.clone();
        for &d in &self.sets.defs[instr.0] {
            v[d] = false;
        }
        for &u in &self.sets.uses[instr.0] {
            v[u] = true;
        }
        v
    }
}

struct NextAccess<'a> {
    sets: &'a AccessSets,
    nregs: usize,
    w: Threshold,
}

impl BackwardProblem for NextAccess<'_> {
    type Fact = Vec<Distance>;

    fn bottom(&self) -> Vec<Distance> {
        vec![Distance::BOTTOM; self.nregs]
    }

    fn exit_fact(&self) -> Vec<Distance> {
        vec![Distance::Inf; self.nregs]
    }

    fn merge(&self, acc: &mut Vec<Distance>, other: &Vec<Distance>) {
        for (a, b) in acc.iter_mut().zip(other) {
            *a = (*a).max(*b);
        }
    }

    fn transfer(&self, instr: InstrId, out: &Vec<Distance>) -> Vec<Distance> {
        out.iter()
            .zip(&self.sets.accessed[instr.0])
            .map(|(&d, &hit)| if hit { Distance::Finite(1) } else { inc(d, self.w) })
            .collect()
    }
}

/// Facts at one side of every instruction, one column per register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointFacts<T> {
    pub input: Vec<Vec<T>>,
    pub output: Vec<Vec<T>>,
}

impl<T: Copy> PointFacts<T> {
    pub fn at(&self, point: Point, reg: usize) -> T {
        match point.side {
            Side::In => self.input[point.instr.0][reg],
            Side::Out => self.output[point.instr.0][reg],
        }
    }
}

/// Liveness of every program register at every program point.
pub fn liveness(p: &Program, cfg: &Cfg) -> (Vec<Register>, PointFacts<bool>) {
    let regs = p.registers();
    let sets = AccessSets::new(p, &regs);
    let sol = solve_backward(cfg, &Liveness { sets: &sets, nregs: regs.len() });
    (regs, PointFacts { input: sol.input, output: sol.output })
}

/// Saturated next-access distance of every program register at every point.
pub fn distance(p: &Program, cfg: &Cfg, w: Threshold) -> (Vec<Register>, PointFacts<Distance>) {
    let regs = p.registers();
    let sets = AccessSets::new(p, &regs);
    let sol = solve_backward(cfg, &NextAccess { sets: &sets, nregs: regs.len(), w });
    (regs, PointFacts { input: sol.input, output: sol.output })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisResult {
    pub threshold: Threshold,
    pub registers: Vec<Register>,
    pub live: PointFacts<bool>,
    pub dist: PointFacts<Distance>,
    /// `Power(OUT(S), R)` for each register `R` accessed by `S`.
    pub power: Vec<BTreeMap<Register, PowerState>>,
}

impl AnalysisResult {
    fn reg_index(&self, r: Register) -> Option<usize> {
        self.registers.binary_search(&r).ok()
    }

    pub fn live(&self, point: Point, r: Register) -> bool {
        self.reg_index(r).is_some_and(|i| self.live.at(point, i))
    }

    /// Registers that never appear in the program are never accessed, so
    /// their distance is `Inf` everywhere.
    pub fn dist(&self, point: Point, r: Register) -> Distance {
        self.reg_index(r).map_or(Distance::Inf, |i| self.dist.at(point, i))
    }

    pub fn sleep_off(&self, point: Point, r: Register) -> bool {
        sleep_off(self.dist(point, r))
    }

    pub fn power(&self, instr: InstrId, r: Register) -> Option<PowerState> {
        self.power.get(instr.0)?.get(&r).copied()
    }

    /// CSV rows `point,reg,live,dist,power`; `power` is empty where it is
    /// undefined (IN points and registers the instruction does not access).
    pub fn facts_csv(&self) -> String {
        let mut out = String::from("point,reg,live,dist,power\n");
        for i in 0..self.power.len() {
            for side in [Side::In, Side::Out] {
                let point = Point { instr: InstrId(i), side };
                for (ri, &r) in self.registers.iter().enumerate() {
                    let power = match side {
                        Side::Out => self.power[i].get(&r).map_or("", |s| s.token()),
                        Side::In => "",
                    };
                    writeln!(out, "{point},{r},{},{},{power}", self.live.at(point, ri), self.dist.at(point, ri))
                        .unwrap();
                }
            }
        }
        out
    }
}

pub fn analyze(p: &Program, w: Threshold) -> Result<AnalysisResult, CfgError> {
    let cfg = build_cfg(p)?;
    Ok(analyze_with_cfg(p, &cfg, w))
}

pub fn analyze_with_cfg(p: &Program, cfg: &Cfg, w: Threshold) -> AnalysisResult {
    let (registers, live) = liveness(p, cfg);
    let (_, dist) = distance(p, cfg, w);
    let power = p
        .instructions
        .iter()
        .enumerate()
        .map(|(i, instr)| {
            instr
                .accessed_registers()
                .into_iter()
                .map(|r| {
                    let ri = registers.binary_search(&r).unwrap();
                    let state = classify(live.output[i][ri], sleep_off(dist.output[i][ri]));
                    (r, state)
                })
                .collect()
        })
        .collect();
    AnalysisResult { threshold: w, registers, live, dist, power }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasm::parse_program;

    fn w(n: u32) -> Threshold {
        Threshold::new(n).unwrap()
    }

    #[test]
    fn saturating_increment() {
        assert_eq!(inc(Distance::Finite(1), w(7)), Distance::Finite(2));
        assert_eq!(inc(Distance::Finite(7), w(7)), Distance::Inf);
        assert_eq!(inc(Distance::Inf, w(7)), Distance::Inf);
        assert_eq!(inc(Distance::Finite(1), w(1)), Distance::Inf);
    }

    #[test]
    fn threshold_must_be_positive() {
        assert!(Threshold::new(0).is_none());
        assert_eq!(Threshold::default().get(), 3);
    }

    #[test]
    fn distance_order_is_the_chain() {
        assert!(Distance::Finite(1) < Distance::Finite(2));
        assert!(Distance::Finite(u32::MAX) < Distance::Inf);
        assert_eq!(Distance::Finite(2).max(Distance::Inf), Distance::Inf);
    }

    #[test]
    fn sleep_off_flag() {
        assert!(!sleep_off(Distance::Finite(2)));
        assert!(sleep_off(Distance::Inf));
        assert!(!sleep_off(Distance::Finite(7)));
    }

    #[test]
    fn decision_table() {
        assert_eq!(classify(true, true), PowerState::Sleep);
        assert_eq!(classify(true, false), PowerState::On);
        assert_eq!(classify(false, true), PowerState::Off);
        assert_eq!(classify(false, false), PowerState::On);
    }

    #[test]
    fn single_move_liveness() {
        let p = parse_program("mov.u32 $r1, $r2;\nexit;").unwrap();
        let a = analyze(&p, w(3)).unwrap();
        assert!(a.live(Point::input(0), Register::r(2)));
        assert!(!a.live(Point::output(0), Register::r(1)));
        assert!(!a.live(Point::input(0), Register::r(1)));
    }

    #[test]
    fn adjacent_access_stays_on() {
        let p = parse_program("mov.u32 $r1, 0x1;\nadd.u32 $r2, $r1, $r1;\nexit;").unwrap();
        let a = analyze(&p, w(3)).unwrap();
        assert_eq!(a.dist(Point::output(0), Register::r(1)), Distance::Finite(1));
        assert_eq!(a.power(InstrId(0), Register::r(1)), Some(PowerState::On));
        // r1 and r2 are dead after the add and never touched again
        assert_eq!(a.power(InstrId(1), Register::r(1)), Some(PowerState::Off));
        assert_eq!(a.power(InstrId(1), Register::r(2)), Some(PowerState::Off));
        // W = 1: a distance of exactly 1 is still finite
        let a1 = analyze(&p, w(1)).unwrap();
        assert_eq!(a1.power(InstrId(0), Register::r(1)), Some(PowerState::On));
    }

    #[test]
    fn accessed_register_has_unit_distance_at_input() {
        let p = parse_program("add.u32 $r1, $r1, 0x1;\nexit;").unwrap();
        let a = analyze(&p, w(4)).unwrap();
        assert_eq!(a.dist(Point::input(0), Register::r(1)), Distance::Finite(1));
        assert_eq!(a.dist(Point::output(0), Register::r(1)), Distance::Inf);
        assert!(a.live(Point::input(0), Register::r(1)));
    }

    #[test]
    fn loop_without_access_saturates() {
        let src = "mov.u32 $r1, 0x1;\n\
                   L: add.u32 $r2, $r2, 0x1;\n\
                   @$p0.ne bra L;\n\
                   add.u32 $r3, $r1, 0x1;\n\
                   exit;";
        let p = parse_program(src).unwrap();
        let a = analyze(&p, w(3)).unwrap();
        assert_eq!(a.dist(Point::output(0), Register::r(1)), Distance::Inf);
        assert_eq!(a.power(InstrId(0), Register::r(1)), Some(PowerState::Sleep));
        // inside the loop r2 is reused every two instructions
        assert_eq!(a.dist(Point::output(1), Register::r(2)), Distance::Inf);
        let a9 = analyze(&p, w(9)).unwrap();
        assert_eq!(a9.dist(Point::output(0), Register::r(1)), Distance::Inf);
    }

    #[test]
    fn csv_dump_shape() {
        let p = parse_program("mov.u32 $r1, 0x1;\nexit;").unwrap();
        let csv = analyze(&p, w(3)).unwrap().facts_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "point,reg,live,dist,power");
        assert_eq!(lines.len(), 1 + 4);
        assert!(lines.contains(&"OUT(0),$r1,false,inf,OFF"));
        assert!(lines.contains(&"IN(0),$r1,false,1,"));
    }

    #[test]
    fn power_only_for_accessed_registers() {
        let p = parse_program("mov.u32 $r1, 0x1;\nmov.u32 $r2, $r1;\nexit;").unwrap();
        let a = analyze(&p, w(3)).unwrap();
        assert_eq!(a.power[0].keys().copied().collect::<Vec<_>>(), vec![Register::r(1)]);
        assert!(a.power[2].is_empty());
    }
}
