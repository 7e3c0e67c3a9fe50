use std::fmt;

use super::{
    opcode_has_destination, Guard, Immediate, InstrId, Instruction, Operand, PowerState, Program, RegKind, Register,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    Expected { expected: &'static str, found: String },
    UnexpectedEof,
    MalformedRegister(String),
    MalformedImmediate(String),
    UnresolvedLabel(String),
    DuplicateLabel(String),
    PowerListLength { expected: usize, found: usize },
    PowerListOnControl(String),
    MisplacedPowerToken,
    MisplacedDualDestination,
    IndirectBranch,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            Self::Expected { expected, found } => write!(f, "expected {expected}, found {found}"),
            Self::UnexpectedEof => f.write_str("unexpected end of input"),
            Self::MalformedRegister(s) => write!(f, "malformed register `{s}`"),
            Self::MalformedImmediate(s) => write!(f, "malformed immediate `{s}`"),
            Self::UnresolvedLabel(l) => write!(f, "unresolved label `{l}`"),
            Self::DuplicateLabel(l) => write!(f, "duplicate label `{l}`"),
            Self::PowerListLength { expected, found } => {
                write!(f, "power list has {found} entries but the instruction has {expected} encodable slots")
            }
            Self::PowerListOnControl(op) => write!(f, "`{op}` cannot carry a power list"),
            Self::MisplacedPowerToken => f.write_str("power state tokens must trail the operands"),
            Self::MisplacedDualDestination => f.write_str("a `$a/$b` pair is only allowed as the destination operand"),
            Self::IndirectBranch => f.write_str("branch target must be a label"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Reg(Register),
    Hex(Immediate),
    Punct(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Reg(r) => write!(f, "`{r}`"),
            Tok::Hex(i) => write!(f, "`{i}`"),
            Tok::Punct(c) => write!(f, "`{c}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (l, col) = (lineno + 1, i + 1);
            let err = |kind| ParseError { line: l, col, kind };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            } else if c == '$' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                Tok::Reg(parse_register(&word).ok_or_else(|| err(ParseErrorKind::MalformedRegister(word)))?)
            } else if c.is_ascii_digit() {
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                Tok::Hex(parse_hex(&word).ok_or_else(|| err(ParseErrorKind::MalformedImmediate(word)))?)
            } else if ":;,@./[]+".contains(c) {
                i += 1;
                Tok::Punct(c)
            } else {
                return Err(err(ParseErrorKind::UnexpectedChar(c)));
            };
            out.push(Spanned { tok, line: l, col });
        }
    }
    Ok(out)
}

fn parse_register(word: &str) -> Option<Register> {
    let body = word.strip_prefix('$')?;
    // `ofs` must be tried before `o`
    let (kind, digits) =
        [("ofs", RegKind::Offset), ("r", RegKind::General), ("p", RegKind::Predicate), ("o", RegKind::Output)]
            .iter()
            .find_map(|(prefix, kind)| body.strip_prefix(prefix).map(|d| (*kind, d)))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(Register::new(kind, digits.parse().ok()?))
}

fn parse_hex(word: &str) -> Option<Immediate> {
    let digits = word.strip_prefix("0x")?;
    if digits.is_empty() || digits.len() > 16 {
        return None;
    }
    let value = u64::from_str_radix(digits, 16).ok()?;
    Some(Immediate { value, digits: digits.len() as u8 })
}

enum RawOperand {
    Single(Operand),
    Dual(Register, Register),
    Power(PowerState),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(s) => (s.line, s.col),
            None => (self.last_line, 1),
        }
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, kind }
    }

    fn expected(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(ParseErrorKind::Expected { expected, found: t.to_string() }),
            None => self.error(ParseErrorKind::UnexpectedEof),
        }
    }

    fn punct(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.expected(match c {
                ';' => "`;`",
                ']' => "`]`",
                '[' => "`[`",
                '.' => "`.`",
                _ => "punctuation",
            })),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &'static str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.expected(what)),
        }
    }

    fn register(&mut self) -> Result<Register, ParseError> {
        match self.peek() {
            Some(Tok::Reg(r)) => {
                let r = *r;
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.expected("register")),
        }
    }

    fn hex(&mut self) -> Result<Immediate, ParseError> {
        match self.peek() {
            Some(Tok::Hex(i)) => {
                let i = *i;
                self.pos += 1;
                Ok(i)
            }
            _ => Err(self.expected("hex immediate")),
        }
    }

    fn operand(&mut self) -> Result<RawOperand, ParseError> {
        match self.peek() {
            Some(Tok::Reg(_)) => {
                let r = self.register()?;
                if self.eat('/') {
                    Ok(RawOperand::Dual(r, self.register()?))
                } else {
                    Ok(RawOperand::Single(Operand::Reg(r)))
                }
            }
            Some(Tok::Hex(_)) => Ok(RawOperand::Single(Operand::Imm(self.hex()?))),
            Some(Tok::Punct('[')) => {
                self.pos += 1;
                let base = self.register()?;
                let offset = if self.eat('+') { Some(self.hex()?) } else { None };
                self.punct(']')?;
                Ok(RawOperand::Single(Operand::MemReg { base, offset }))
            }
            Some(Tok::Ident(s)) if s == "s" && self.peek_at(1) == Some(&Tok::Punct('[')) => {
                self.pos += 2;
                let op = match self.peek() {
                    Some(Tok::Hex(_)) => Operand::MemShared { offset: self.hex()? },
                    _ => {
                        let base = self.register()?;
                        let offset = if self.eat('+') { Some(self.hex()?) } else { None };
                        Operand::MemSharedIndexed { base, offset }
                    }
                };
                self.punct(']')?;
                Ok(RawOperand::Single(op))
            }
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(match PowerState::from_token(&s) {
                    Some(ps) => RawOperand::Power(ps),
                    None => RawOperand::Single(Operand::Label(s)),
                })
            }
            _ => Err(self.expected("operand")),
        }
    }
}

/// Parses GASM text. Instruction ids follow textual order starting at 0.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let last_line = toks.last().map_or(1, |t| t.line);
    let mut p = Parser { toks, pos: 0, last_line };
    let mut program = Program::default();
    // label operands with the position they appeared at, checked once all labels are known
    let mut label_refs: Vec<(String, usize, usize)> = Vec::new();

    while p.peek().is_some() {
        let id = InstrId(program.instructions.len());
        let label = match (p.peek(), p.peek_at(1)) {
            (Some(Tok::Ident(_)), Some(Tok::Punct(':'))) => {
                let (line, col) = p.here();
                let name = p.ident("label")?;
                p.pos += 1;
                if program.labels.insert(name.clone(), id).is_some() {
                    return Err(ParseError { line, col, kind: ParseErrorKind::DuplicateLabel(name) });
                }
                Some(name)
            }
            _ => None,
        };

        let guard = if p.eat('@') {
            let pred = p.register()?;
            if pred.kind != RegKind::Predicate {
                return Err(p.expected("predicate register"));
            }
            p.punct('.')?;
            Some(Guard { pred, cond: p.ident("guard condition")? })
        } else {
            None
        };

        let (op_line, op_col) = p.here();
        let opcode = p.ident("opcode")?;
        let mut options = Vec::new();
        while p.eat('.') {
            options.push(p.ident("opcode option")?);
        }

        let mut raw = Vec::new();
        if !matches!(p.peek(), Some(Tok::Punct(';'))) {
            loop {
                let (line, col) = p.here();
                let op = p.operand()?;
                if let RawOperand::Single(Operand::Label(l)) = &op {
                    label_refs.push((l.clone(), line, col));
                }
                raw.push((op, line, col));
                if !p.eat(',') {
                    break;
                }
            }
        }
        p.punct(';')?;

        let mut instr = Instruction::new(opcode);
        instr.id = id;
        instr.label = label;
        instr.guard = guard;
        instr.options = options;
        let has_dest = opcode_has_destination(&instr.opcode);
        let mut power = Vec::new();
        for (idx, (op, line, col)) in raw.into_iter().enumerate() {
            let at = |kind| ParseError { line, col, kind };
            match op {
                RawOperand::Power(ps) => power.push(ps),
                _ if !power.is_empty() => return Err(at(ParseErrorKind::MisplacedPowerToken)),
                RawOperand::Dual(a, b) if idx == 0 && has_dest => {
                    instr.destinations.push(Operand::Reg(a));
                    instr.destinations.push(Operand::Reg(b));
                }
                RawOperand::Dual(..) => return Err(at(ParseErrorKind::MisplacedDualDestination)),
                RawOperand::Single(op) if idx == 0 && has_dest => instr.destinations.push(op),
                RawOperand::Single(op) => instr.sources.push(op),
            }
        }

        let at_op = |kind| ParseError { line: op_line, col: op_col, kind };
        if instr.is_branch() && instr.branch_target().is_none() {
            return Err(at_op(ParseErrorKind::IndirectBranch));
        }
        if !power.is_empty() {
            if instr.is_branch() || instr.is_exit() {
                return Err(at_op(ParseErrorKind::PowerListOnControl(instr.opcode.clone())));
            }
            let expected = instr.encodable_slots().len();
            if expected != power.len() {
                return Err(at_op(ParseErrorKind::PowerListLength { expected, found: power.len() }));
            }
            instr.power_list = Some(power);
        }
        program.instructions.push(instr);
    }

    for (label, line, col) in label_refs {
        if !program.labels.contains_key(&label) {
            return Err(ParseError { line, col, kind: ParseErrorKind::UnresolvedLabel(label) });
        }
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_with_dual_destination_and_power() {
        let p = parse_program("B4: set.le.s32.s32 $p2/$o127, $r8, $r0, ON, SLEEP, ON;\nexit;").unwrap();
        let i = &p.instructions[0];
        assert_eq!(i.label.as_deref(), Some("B4"));
        assert_eq!(i.opcode, "set");
        assert_eq!(i.options, vec!["le", "s32", "s32"]);
        assert_eq!(i.destinations, vec![Operand::Reg(Register::p(2)), Operand::Reg(Register::o(127))]);
        assert_eq!(i.sources, vec![Operand::Reg(Register::r(8)), Operand::Reg(Register::r(0))]);
        assert_eq!(i.power_list, Some(vec![PowerState::On, PowerState::Sleep, PowerState::On]));
        assert_eq!(p.resolve("B4"), Some(InstrId(0)));
    }

    #[test]
    fn bare_exit() {
        let p = parse_program("exit;").unwrap();
        let i = &p.instructions[0];
        assert_eq!(i.opcode, "exit");
        assert!(i.destinations.is_empty() && i.sources.is_empty());
        assert!(i.power_list.is_none());
    }

    #[test]
    fn guarded_branch() {
        let p = parse_program("@$p2.ne bra B8;\nB8: exit;").unwrap();
        let i = &p.instructions[0];
        assert_eq!(i.guard, Some(Guard { pred: Register::p(2), cond: "ne".into() }));
        assert_eq!(i.opcode, "bra");
        assert_eq!(i.sources, vec![Operand::Label("B8".into())]);
    }

    #[test]
    fn memory_operand_forms() {
        let p = parse_program(
            "add.half.u32 $r11, s[0x0018], $r10;\n\
             mov.u32 s[$ofs1+0x0000], $r12;\n\
             ld.global.u32 $r14, [$r11];\n\
             ld.global.u32 $r15, [$r11+0x10];\n\
             exit;",
        )
        .unwrap();
        assert_eq!(p.instructions[0].sources[0], Operand::MemShared { offset: Immediate { value: 0x18, digits: 4 } });
        assert_eq!(
            p.instructions[1].destinations[0],
            Operand::MemSharedIndexed { base: Register::ofs(1), offset: Some(Immediate { value: 0, digits: 4 }) }
        );
        assert_eq!(p.instructions[2].sources[0], Operand::MemReg { base: Register::r(11), offset: None });
        assert!(matches!(
            p.instructions[3].sources[0],
            Operand::MemReg { offset: Some(Immediate { value: 0x10, .. }), .. }
        ));
    }

    #[test]
    fn comments_and_ssy() {
        let p = parse_program("# header\nssy 0x00000110; # reconvergence\nexit;").unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.instructions[0].accessed_registers().is_empty());
    }

    #[test]
    fn unresolved_label_names_it() {
        let e = parse_program("bra NOWHERE;\nexit;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnresolvedLabel("NOWHERE".into()));
        assert_eq!((e.line, e.col), (1, 5));
        assert!(e.to_string().contains("NOWHERE"));
    }

    #[test]
    fn malformed_register() {
        let e = parse_program("mov.u32 $q1, $r2;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MalformedRegister("$q1".into()));
        let e = parse_program("mov.u32 $r, $r2;").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::MalformedRegister(_)));
    }

    #[test]
    fn power_list_length_mismatch() {
        let e = parse_program("add.u32 $r1, $r2, $r3, ON, ON;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::PowerListLength { expected: 3, found: 2 });
    }

    #[test]
    fn power_list_on_branch_rejected() {
        let e = parse_program("L: bra L, ON;").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::PowerListOnControl(_)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_program("mov.u32 $r1, $r2\nexit;").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(e.kind, ParseErrorKind::Expected { .. }));
        let e = parse_program("mov.u32 $r1, 12;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MalformedImmediate("12".into()));
        let e = parse_program("mov.u32 $r1 % $r2;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('%'));
        let e = parse_program("L: exit; L: exit;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateLabel("L".into()));
        let e = parse_program("mov.u32 $r1, ON, $r2;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MisplacedPowerToken);
    }

    #[test]
    fn empty_text() {
        assert!(parse_program("").unwrap().is_empty());
        assert!(parse_program("  # only a comment\n").unwrap().is_empty());
    }
}
