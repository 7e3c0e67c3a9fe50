use std::fmt::Write;

use super::{Instruction, Operand, Program};

fn write_operand(out: &mut String, op: &Operand) {
    match op {
        Operand::Reg(r) => write!(out, "{r}"),
        Operand::Imm(i) => write!(out, "{i}"),
        Operand::MemReg { base, offset: None } => write!(out, "[{base}]"),
        Operand::MemReg { base, offset: Some(o) } => write!(out, "[{base}+{o}]"),
        Operand::MemShared { offset } => write!(out, "s[{offset}]"),
        Operand::MemSharedIndexed { base, offset: None } => write!(out, "s[{base}]"),
        Operand::MemSharedIndexed { base, offset: Some(o) } => write!(out, "s[{base}+{o}]"),
        Operand::Label(l) => write!(out, "{l}"),
    }
    .unwrap();
}

pub(crate) fn write_instruction(out: &mut String, instr: &Instruction, with_power: bool) {
    if let Some(g) = &instr.guard {
        write!(out, "@{}.{} ", g.pred, g.cond).unwrap();
    }
    out.push_str(&instr.opcode);
    for opt in &instr.options {
        out.push('.');
        out.push_str(opt);
    }

    let mut items: Vec<String> = Vec::new();
    // consecutive register destinations print as the `$a/$b` pair form
    let dest_regs: Vec<_> = instr.destinations.iter().filter_map(Operand::as_reg).collect();
    if instr.destinations.len() > 1 && dest_regs.len() == instr.destinations.len() {
        items.push(dest_regs.iter().map(ToString::to_string).collect::<Vec<_>>().join("/"));
    } else {
        for d in &instr.destinations {
            let mut s = String::new();
            write_operand(&mut s, d);
            items.push(s);
        }
    }
    for src in &instr.sources {
        let mut s = String::new();
        write_operand(&mut s, src);
        items.push(s);
    }
    if with_power {
        if let Some(list) = &instr.power_list {
            items.extend(list.iter().map(|p| p.token().to_string()));
        }
    }
    if !items.is_empty() {
        out.push(' ');
        out.push_str(&items.join(", "));
    }
    out.push(';');
}

/// Renders a program as GASM text, one instruction per line. Labelled lines
/// start with `label: `, the rest are indented by four spaces.
pub fn serialize_program(p: &Program, with_power: bool) -> String {
    let mut out = String::new();
    for instr in &p.instructions {
        match &instr.label {
            Some(l) => write!(out, "{l}: ").unwrap(),
            None => out.push_str("    "),
        }
        write_instruction(&mut out, instr, with_power);
        out.push('\n');
    }
    out
}
