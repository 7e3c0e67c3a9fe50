use std::collections::VecDeque;

use crate::cfg::{Cfg, Node};
use crate::gasm::InstrId;

/// A backward problem over the instruction CFG. `IN(S)` is computed from
/// `OUT(S)` by `transfer`; `OUT(S)` is the merge of the successors' `IN`
/// facts, with Exit contributing `exit_fact`.
pub(crate) trait BackwardProblem {
    type Fact: Clone + PartialEq;

    /// Starting value of every `IN(S)`: the bottom of the lattice.
    fn bottom(&self) -> Self::Fact;
    fn exit_fact(&self) -> Self::Fact;
    fn merge(&self, acc: &mut Self::Fact, other: &Self::Fact);
    fn transfer(&self, instr: InstrId, out: &Self::Fact) -> Self::Fact;
}

pub(crate) struct Solution<F> {
    pub input: Vec<F>,
    pub output: Vec<F>,
}

/// Round-robin worklist iteration from bottom; converges to the least
/// fixpoint for monotone transfer functions over finite-height lattices.
pub(crate) fn solve_backward<P: BackwardProblem>(cfg: &Cfg, problem: &P) -> Solution<P::Fact> {
    let n = cfg.len();
    let exit = problem.exit_fact();
    let mut input = vec![problem.bottom(); n];
    let mut output = vec![problem.bottom(); n];
    let mut queued = vec![true; n];
    let mut work: VecDeque<usize> = (0..n).rev().collect();

    while let Some(i) = work.pop_front() {
        queued[i] = false;
        let mut out: Option<P::Fact> = None;
        for s in cfg.succ(Node::Instr(InstrId(i))) {
            let fact = match s {
                Node::Instr(id) => &input[id.0],
                Node::Exit => &exit,
                Node::Entry => unreachable!("entry has no predecessors"),
            };
            match out.as_mut() {
                None => out = Some(fact.clone()),
                Some(acc) => problem.merge(acc, fact),
            }
        }
        let out = out.expect("validated CFG: every instruction has a successor");
        let new_in = problem.transfer(InstrId(i), &out);
        output[i] = out;
        if new_in != input[i] {
            input[i] = new_in;
            for p in cfg.pred(Node::Instr(InstrId(i))) {
                if let Node::Instr(id) = p {
                    if !queued[id.0] {
                        queued[id.0] = true;
                        work.push_back(id.0);
                    }
                }
            }
        }
    }
    Solution { input, output }
}
