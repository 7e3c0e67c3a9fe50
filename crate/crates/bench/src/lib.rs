//! Workloads shared by the benchmarks.

use greener_core::synth::{random_program_seeded, SynthOptions};
use greener_core::{analyze, annotate, parse_program, Program, Threshold};

/// The SP kernel loop nest used as a fixed analysis workload.
pub const SP_SNIPPET: &str = include_str!("../../core/tests/fixtures/sp_snippet.gasm");

pub fn sp_snippet() -> Program {
    parse_program(SP_SNIPPET).expect("bundled snippet parses").without_power()
}

/// `n` random programs of up to 50 instructions.
pub fn random_corpus(n: usize, seed: u64) -> Vec<Program> {
    let opts = SynthOptions::default();
    (0..n as u64).map(|i| random_program_seeded(seed + i, &opts)).collect()
}

pub fn annotated(p: &Program, w: u32) -> Program {
    let w = Threshold::new(w).expect("threshold >= 1");
    annotate(p, &analyze(p, w).expect("valid cfg")).expect("annotation succeeds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_build() {
        assert_eq!(sp_snippet().len(), 25);
        let corpus = random_corpus(4, 1);
        assert_eq!(corpus.len(), 4);
        assert!(annotated(&corpus[0], 3).is_annotated());
    }
}
