//! Writes analysis results into instructions as trailing power-state lists.

use crate::dataflow::AnalysisResult;
use crate::gasm::{InstrId, Instruction, PowerState, Program, Register};

/// Fixed slot geometry of the encoding: one destination, two sources.
/// Registers outside these slots fall back to `default_state_for_unencoded`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingPolicy {
    pub max_dest_slots: usize,
    pub max_src_slots: usize,
    pub default_state_for_unencoded: PowerState,
}

pub const ENCODING: EncodingPolicy =
    EncodingPolicy { max_dest_slots: 1, max_src_slots: 2, default_state_for_unencoded: PowerState::Sleep };

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotateError {
    #[error("no analysis fact for {reg} at instruction {instr}")]
    MissingFact { instr: InstrId, reg: Register },
}

/// Accessed registers that get no slot of their own: extra destinations,
/// memory base registers and guard predicates.
pub fn unencoded_accesses(i: &Instruction) -> Vec<Register> {
    let slots = i.encodable_slots();
    i.accessed_registers().into_iter().filter(|r| !slots.contains(r)).collect()
}

pub fn annotate(p: &Program, a: &AnalysisResult) -> Result<Program, AnnotateError> {
    let mut out = p.clone();
    for instr in &mut out.instructions {
        if instr.is_branch() || instr.is_exit() {
            continue;
        }
        let slots = instr.encodable_slots();
        if slots.is_empty() {
            instr.power_list = None;
            continue;
        }
        let list = slots
            .iter()
            .map(|&reg| a.power(instr.id, reg).ok_or(AnnotateError::MissingFact { instr: instr.id, reg }))
            .collect::<Result<Vec<_>, _>>()?;
        instr.power_list = Some(list);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::{analyze, Threshold};
    use crate::gasm::{parse_program, serialize_program};

    #[test]
    fn unencoded_cases() {
        let p = parse_program(
            "set.le.s32.s32 $p2/$o127, $r8, $r0;\n\
             ld.global.u32 $r14, [$r11];\n\
             add.u32 $r1, $r2, $r3;\n\
             exit;",
        )
        .unwrap();
        assert_eq!(unencoded_accesses(&p.instructions[0]), vec![Register::o(127)]);
        assert_eq!(unencoded_accesses(&p.instructions[1]), vec![Register::r(11)]);
        assert!(unencoded_accesses(&p.instructions[2]).is_empty());
        assert_eq!(ENCODING.default_state_for_unencoded, PowerState::Sleep);
    }

    #[test]
    fn branches_and_exit_stay_bare() {
        let p = parse_program("L: add.u32 $r1, $r1, 0x1;\n@$p0.ne bra L;\nexit;").unwrap();
        let a = analyze(&p, Threshold::new(3).unwrap()).unwrap();
        let out = annotate(&p, &a).unwrap();
        assert!(out.instructions[0].power_list.is_some());
        assert!(out.instructions[1].power_list.is_none());
        assert!(out.instructions[2].power_list.is_none());
    }

    #[test]
    fn missing_fact_is_reported() {
        let p = parse_program("add.u32 $r1, $r2, $r3;\nexit;").unwrap();
        let mut a = analyze(&p, Threshold::DEFAULT).unwrap();
        a.power[0].remove(&Register::r(3));
        assert_eq!(annotate(&p, &a), Err(AnnotateError::MissingFact { instr: InstrId(0), reg: Register::r(3) }));
    }

    #[test]
    fn reannotation_is_idempotent() {
        let p = parse_program("mov.u32 $r1, 0x1;\nL: add.u32 $r2, $r2, $r1;\n@$p0.ne bra L;\nmov.u32 $r3, $r2;\nexit;")
            .unwrap();
        let w = Threshold::DEFAULT;
        let once = annotate(&p, &analyze(&p, w).unwrap()).unwrap();
        let text = serialize_program(&once, true);
        let stripped = parse_program(&text).unwrap().without_power();
        let twice = annotate(&stripped, &analyze(&stripped, w).unwrap()).unwrap();
        assert_eq!(once, twice);
    }
}
