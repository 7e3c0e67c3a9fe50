//! Random well-formed GASM programs for property tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfg::build_cfg;
use crate::gasm::{parse_program, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    /// Upper bound on program length, including the final `exit`.
    pub max_len: usize,
    /// General registers `$r0..`; `$p0` is used in addition.
    pub general_registers: u32,
    /// Allow backward branches.
    pub loops: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { max_len: 50, general_registers: 5, loops: true }
    }
}

fn reg<R: Rng>(rng: &mut R, k: u32) -> String {
    format!("$r{}", rng.random_range(0..k))
}

fn body_line<R: Rng>(rng: &mut R, k: u32, id: usize, n: usize, loops: bool, targets: &mut Vec<usize>) -> String {
    let target = |rng: &mut R, targets: &mut Vec<usize>| {
        let lo = if loops { 0 } else { id + 1 };
        let t = rng.random_range(lo..n);
        targets.push(t);
        format!("L{t}")
    };
    match rng.random_range(0..100) {
        0..=24 => format!("add.u32 {}, {}, {}", reg(rng, k), reg(rng, k), reg(rng, k)),
        25..=34 => format!("add.u32 {}, {}, 0x{:08x}", reg(rng, k), reg(rng, k), rng.random_range(1..16u32)),
        35..=44 => format!("mov.u32 {}, {}", reg(rng, k), reg(rng, k)),
        45..=49 => format!("mov.u32 {}, 0x{:08x}", reg(rng, k), rng.random_range(0..256u32)),
        50..=57 => format!("mad.lo.u32 {}, {}, {}, {}", reg(rng, k), reg(rng, k), reg(rng, k), reg(rng, k)),
        58..=65 => format!("ld.global.u32 {}, [{}]", reg(rng, k), reg(rng, k)),
        66..=70 => format!("st.global.u32 [{}], {}", reg(rng, k), reg(rng, k)),
        71..=78 => format!("set.ne.u32.u32 $p0, {}, {}", reg(rng, k), reg(rng, k)),
        79..=93 => format!("@$p0.ne bra {}", target(rng, targets)),
        94..=96 => format!("bra {}", target(rng, targets)),
        _ => "@$p0.eq exit".to_string(),
    }
}

fn candidate<R: Rng>(rng: &mut R, opts: &SynthOptions) -> String {
    let k = opts.general_registers.max(1);
    let n = rng.random_range(1..=opts.max_len.max(1));
    let mut targets = Vec::new();
    let mut lines: Vec<String> = (0..n - 1).map(|id| body_line(rng, k, id, n, opts.loops, &mut targets)).collect();
    lines.push("exit".to_string());
    lines
        .into_iter()
        .enumerate()
        .map(|(i, l)| if targets.contains(&i) { format!("L{i}: {l};\n") } else { format!("    {l};\n") })
        .collect()
}

/// Draws candidates until one has a valid control-flow graph (every
/// instruction reachable and able to reach `exit`).
pub fn random_program<R: Rng>(rng: &mut R, opts: &SynthOptions) -> Program {
    loop {
        let text = candidate(rng, opts);
        let p = parse_program(&text).expect("generated text parses");
        if build_cfg(&p).is_ok() {
            return p;
        }
    }
}

pub fn random_program_seeded(seed: u64, opts: &SynthOptions) -> Program {
    random_program(&mut ChaCha8Rng::seed_from_u64(seed), opts)
}
