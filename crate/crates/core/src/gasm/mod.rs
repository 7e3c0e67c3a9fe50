//! The GASM assembly dialect: a small PTXPlus-style instruction syntax
//! extended with a trailing per-instruction list of register power states.

mod parse;
mod print;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parse::{parse_program, ParseError, ParseErrorKind};
pub use print::serialize_program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegKind {
    General,
    Predicate,
    Offset,
    Output,
}

impl RegKind {
    pub fn prefix(self) -> &'static str {
        match self {
            RegKind::General => "r",
            RegKind::Predicate => "p",
            RegKind::Offset => "ofs",
            RegKind::Output => "o",
        }
    }
}

/// An architectural register of one thread. Within the simulator a register
/// stands for the whole warp-wide set of per-lane copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Register {
    pub kind: RegKind,
    pub index: u32,
}

impl Register {
    pub const fn new(kind: RegKind, index: u32) -> Self {
        Self { kind, index }
    }

    pub const fn r(index: u32) -> Self {
        Self::new(RegKind::General, index)
    }

    pub const fn p(index: u32) -> Self {
        Self::new(RegKind::Predicate, index)
    }

    pub const fn ofs(index: u32) -> Self {
        Self::new(RegKind::Offset, index)
    }

    pub const fn o(index: u32) -> Self {
        Self::new(RegKind::Output, index)
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}{}", self.kind.prefix(), self.index)
    }
}

/// A hexadecimal literal. The digit count is kept so that text survives a
/// parse/print cycle unchanged (`0x0` and `0x00000000` stay distinct).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Immediate {
    pub value: u64,
    pub digits: u8,
}

impl Immediate {
    pub fn new(value: u64) -> Self {
        Self { value, digits: 8 }
    }
}

impl fmt::Display for Immediate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:0width$x}", self.value, width = self.digits as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Reg(Register),
    Imm(Immediate),
    /// `[$rN]` or `[$rN+0x..]`
    MemReg {
        base: Register,
        offset: Option<Immediate>,
    },
    /// `s[0x..]`
    MemShared {
        offset: Immediate,
    },
    /// `s[$ofsN+0x..]` or `s[$rN]`
    MemSharedIndexed {
        base: Register,
        offset: Option<Immediate>,
    },
    Label(String),
}

impl Operand {
    pub fn as_reg(&self) -> Option<Register> {
        match self {
            Operand::Reg(r) => Some(*r),
            _ => None,
        }
    }

    pub fn base_reg(&self) -> Option<Register> {
        match self {
            Operand::MemReg { base, .. } | Operand::MemSharedIndexed { base, .. } => Some(*base),
            _ => None,
        }
    }

    pub fn is_memory(&self) -> bool {
        matches!(self, Operand::MemReg { .. } | Operand::MemShared { .. } | Operand::MemSharedIndexed { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PowerState {
    On,
    Sleep,
    Off,
}

impl PowerState {
    pub const ALL: [PowerState; 3] = [PowerState::On, PowerState::Sleep, PowerState::Off];

    pub fn token(self) -> &'static str {
        match self {
            PowerState::On => "ON",
            PowerState::Sleep => "SLEEP",
            PowerState::Off => "OFF",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "ON" => Some(PowerState::On),
            "SLEEP" => Some(PowerState::Sleep),
            "OFF" => Some(PowerState::Off),
            _ => None,
        }
    }
}

impl fmt::Display for PowerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Guard {
    pub pred: Register,
    pub cond: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstrId(pub usize);

impl fmt::Display for InstrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub id: InstrId,
    pub label: Option<String>,
    pub guard: Option<Guard>,
    pub opcode: String,
    pub options: Vec<String>,
    pub destinations: Vec<Operand>,
    pub sources: Vec<Operand>,
    pub power_list: Option<Vec<PowerState>>,
}

/// Opcodes whose operands are all inputs (no destination position).
const CONTROL_OPCODES: &[&str] = &["bra", "exit", "ssy", "ret", "nop", "bar", "retp", "brk"];

pub(crate) fn opcode_has_destination(opcode: &str) -> bool {
    !CONTROL_OPCODES.contains(&opcode)
}

fn push_unique(out: &mut Vec<Register>, r: Register) {
    if !out.contains(&r) {
        out.push(r);
    }
}

impl Instruction {
    pub fn new(opcode: impl Into<String>) -> Self {
        Self {
            id: InstrId(0),
            label: None,
            guard: None,
            opcode: opcode.into(),
            options: Vec::new(),
            destinations: Vec::new(),
            sources: Vec::new(),
            power_list: None,
        }
    }

    pub fn is_branch(&self) -> bool {
        self.opcode == "bra"
    }

    pub fn is_exit(&self) -> bool {
        self.opcode == "exit"
    }

    pub fn branch_target(&self) -> Option<&str> {
        if !self.is_branch() {
            return None;
        }
        self.sources.iter().find_map(|op| match op {
            Operand::Label(l) => Some(l.as_str()),
            _ => None,
        })
    }

    /// Registers read by the instruction: the guard predicate, memory base
    /// registers (source or destination side), then plain register sources.
    pub fn register_uses(&self) -> Vec<Register> {
        let mut out = Vec::new();
        if let Some(g) = &self.guard {
            push_unique(&mut out, g.pred);
        }
        for op in self.destinations.iter().chain(&self.sources) {
            if let Some(b) = op.base_reg() {
                push_unique(&mut out, b);
            }
        }
        for op in &self.sources {
            if let Some(r) = op.as_reg() {
                push_unique(&mut out, r);
            }
        }
        out
    }

    /// Registers written: plain register destinations only.
    pub fn register_defs(&self) -> Vec<Register> {
        let mut out = Vec::new();
        for op in &self.destinations {
            if let Some(r) = op.as_reg() {
                push_unique(&mut out, r);
            }
        }
        out
    }

    /// Every register the instruction touches, uses first.
    pub fn accessed_registers(&self) -> Vec<Register> {
        let mut out = self.register_uses();
        for r in self.register_defs() {
            push_unique(&mut out, r);
        }
        out
    }

    pub fn accesses(&self, r: Register) -> bool {
        self.accessed_registers().contains(&r)
    }

    /// The registers that carry an encoded power state: the first plain
    /// register destination followed by the first two plain register
    /// sources. Duplicates are kept since each occupies its own slot.
    pub fn encodable_slots(&self) -> Vec<Register> {
        if self.is_branch() || self.is_exit() {
            return Vec::new();
        }
        let dest = self.destinations.first().and_then(Operand::as_reg);
        dest.into_iter().chain(self.sources.iter().filter_map(Operand::as_reg).take(2)).collect()
    }

    /// Power state the instruction requests for `r` after accessing it, if
    /// `r` occupies an encoded slot. The earliest slot wins, which puts the
    /// destination ahead of a duplicate source.
    pub fn encoded_state(&self, r: Register) -> Option<PowerState> {
        let list = self.power_list.as_ref()?;
        self.encodable_slots().iter().position(|s| *s == r).and_then(|i| list.get(i).copied())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub instructions: Vec<Instruction>,
    pub labels: BTreeMap<String, InstrId>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn get(&self, id: InstrId) -> &Instruction {
        &self.instructions[id.0]
    }

    pub fn resolve(&self, label: &str) -> Option<InstrId> {
        self.labels.get(label).copied()
    }

    /// Every register referenced anywhere, in sorted order.
    pub fn registers(&self) -> Vec<Register> {
        let mut regs: Vec<Register> = self.instructions.iter().flat_map(Instruction::accessed_registers).collect();
        regs.sort();
        regs.dedup();
        regs
    }

    /// Every instruction with encodable slots carries a power list. A
    /// program without encodable slots is trivially annotated.
    pub fn is_annotated(&self) -> bool {
        self.instructions.iter().all(|i| i.power_list.is_some() || i.encodable_slots().is_empty())
    }

    pub fn without_power(&self) -> Program {
        let mut p = self.clone();
        for i in &mut p.instructions {
            i.power_list = None;
        }
        p
    }

    /// Hex SHA-256 of the power-stripped text; identifies "the same program"
    /// across plain and annotated variants.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = serialize_program(self, false);
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(src: &str) -> Instruction {
        parse_program(src).unwrap().instructions.remove(0)
    }

    #[test]
    fn uses_and_defs_of_loads_and_stores() {
        let ld = line("ld.global.u32 $r14, [$r11], ON; exit;");
        assert_eq!(ld.register_uses(), vec![Register::r(11)]);
        assert_eq!(ld.register_defs(), vec![Register::r(14)]);
        assert_eq!(ld.encodable_slots(), vec![Register::r(14)]);

        let st = line("mov.u32 s[$ofs1+0x0000], $r12, OFF; exit;");
        assert_eq!(st.register_uses(), vec![Register::ofs(1), Register::r(12)]);
        assert!(st.register_defs().is_empty());
        assert_eq!(st.encodable_slots(), vec![Register::r(12)]);
    }

    #[test]
    fn dual_destination_compare() {
        let set = line("B4: set.le.s32.s32 $p2/$o127, $r8, $r0, ON, SLEEP, ON; exit;");
        assert_eq!(set.register_defs(), vec![Register::p(2), Register::o(127)]);
        assert_eq!(set.register_uses(), vec![Register::r(8), Register::r(0)]);
        assert_eq!(set.encodable_slots(), vec![Register::p(2), Register::r(8), Register::r(0)]);
        assert_eq!(set.encoded_state(Register::r(8)), Some(PowerState::Sleep));
        assert_eq!(set.encoded_state(Register::o(127)), None);
    }

    #[test]
    fn duplicate_slots_and_exit() {
        let add = line("add.u32 $r0, $r0, $r5, ON, ON, SLEEP; exit;");
        assert_eq!(add.encodable_slots(), vec![Register::r(0), Register::r(0), Register::r(5)]);
        assert_eq!(add.register_uses(), vec![Register::r(0), Register::r(5)]);

        let exit = line("exit;");
        assert!(exit.register_uses().is_empty());
        assert!(exit.register_defs().is_empty());
        assert!(exit.encodable_slots().is_empty());
    }

    #[test]
    fn guarded_branch_uses_predicate_only() {
        let p = parse_program("@$p2.ne bra B8; B8: exit;").unwrap();
        let bra = &p.instructions[0];
        assert_eq!(bra.register_uses(), vec![Register::p(2)]);
        assert!(bra.register_defs().is_empty());
        assert!(bra.encodable_slots().is_empty());
        assert_eq!(bra.branch_target(), Some("B8"));
    }

    #[test]
    fn mad_third_source_is_unencoded() {
        let mad = line("mad.f32 $r12, $r14, $r13, $r12, SLEEP, OFF, OFF; exit;");
        assert_eq!(mad.encodable_slots(), vec![Register::r(12), Register::r(14), Register::r(13)]);
        assert_eq!(mad.encoded_state(Register::r(12)), Some(PowerState::Sleep));
    }

    #[test]
    fn power_state_tokens() {
        for s in PowerState::ALL {
            assert_eq!(PowerState::from_token(s.token()), Some(s));
        }
        assert_eq!(PowerState::from_token("on"), None);
    }
}
